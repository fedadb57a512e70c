// Serial vs OpenMP: dense kernels and batched evaluation rollouts.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "lsp/core/kernels.hpp"
#include "lsp/envs/point_envs.hpp"
#include "lsp/flow/flow_policy.hpp"
#include "lsp/rl/trainer.hpp"

using namespace lsp;

namespace {

std::vector<double> random_values(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

using Kernel = void (*)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);

template <Kernel K>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a = random_values(n * n, rng), b = random_values(n * n, rng);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    K(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
  state.counters["threads"] = omp_get_max_threads();
}

template <Kernel K>
void BM_MatmulAtAcc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto a = random_values(n * n, rng), g = random_values(n * n, rng);
  std::vector<double> c(n * n, 0.0);
  for (auto _ : state) {
    K(a.data(), g.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <bool Parallel>
void BM_Evaluate(benchmark::State& state) {
  auto env = PointMassEnv::maze(0, {.max_episode_steps = 200});
  Rng rng(3);
  FlowPolicy policy({6, 2, 2, 64}, rng);
  RolloutOptions opts;
  opts.n_rollouts = static_cast<std::size_t>(state.range(0));
  opts.max_steps = 200;
  opts.reward_channel = "sparse_goal";
  for (auto _ : state) {
    auto stats = Parallel ? evaluate_policy(*env, policy, opts) : evaluate_policy_serial(*env, policy, opts);
    benchmark::DoNotOptimize(stats.mean_return);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Matmul<kernels::matmul_serial>)->Name("matmul/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<kernels::matmul_omp>)->Name("matmul/omp")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_MatmulAtAcc<kernels::matmul_at_acc_serial>)->Name("matmul_at_acc/serial")->Arg(128)->Arg(256);
BENCHMARK(BM_MatmulAtAcc<kernels::matmul_at_acc_omp>)->Name("matmul_at_acc/omp")->Arg(128)->Arg(256);
BENCHMARK(BM_Evaluate<false>)->Name("evaluate/serial")->Arg(16);
BENCHMARK(BM_Evaluate<true>)->Name("evaluate/omp")->Arg(16);

BENCHMARK_MAIN();
