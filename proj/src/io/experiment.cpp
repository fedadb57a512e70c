#include "lsp/io/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lsp/flow/flow_policy.hpp"
#include "lsp/io/checkpoint.hpp"
#include "lsp/oracle/oracle.hpp"

namespace lsp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const CheckpointError*>(&e)) return "io";
  return "runtime";
}

void write_error_manifest(const fs::path& dir, const std::exception& e, std::size_t layers_done) {
  json files = json::array();
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.path().filename() != "error.json") files.push_back(entry.path().filename().string());
  std::sort(files.begin(), files.end());
  json doc = {{"error", e.what()},
              {"kind", error_kind(e)},
              {"completed_layers", layers_done},
              {"files", files}};
  std::ofstream out(dir / "error.json");
  out << doc.dump(1) << '\n';
}

}  // namespace

std::string metrics_row(const EpochMetrics& m, bool with_wall_clock) {
  std::ostringstream row;
  row << m.epoch << ',' << m.total_env_steps << ',' << fmt(m.mean_return) << ','
      << fmt(m.std_return) << ',' << fmt(m.q_loss) << ',' << fmt(m.v_loss) << ','
      << fmt(m.policy_loss) << ',' << fmt(m.entropy_estimate) << ','
      << (with_wall_clock ? fmt(m.wall_clock_seconds) : std::string("0"));
  return row.str();
}

std::string run_directory_name(const ExperimentConfig& cfg) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream name;
  name << std::put_time(&tm, "%Y%m%dT%H%M%SZ") << '_' << cfg.hash().substr(0, 8);
  return name.str();
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& dir_str,
                         LayerStack initial, std::ostream* log) {
  const fs::path dir(dir_str);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  RunResult result;
  result.directory = dir.string();
  result.stack = std::move(initial);
  const std::size_t first = result.stack.size();
  std::size_t completed = first;
  const std::string hash = cfg.hash();
  try {
    write_text(dir / "config.json", cfg.source.dump(2) + "\n");
    auto base = make_environment(cfg.env);
    auto timing = open_out(dir / "timing.csv");
    timing << "layer,epoch,wall_clock_seconds\n";

    for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
      const std::size_t index = first + li;
      const bool last = li + 1 == cfg.layers.size();
      auto layer_csv = open_out(dir / ("metrics_layer" + std::to_string(index) + ".csv"));
      std::ofstream main_csv;
      if (last) main_csv = open_out(dir / "metrics.csv");
      layer_csv << kMetricsHeader << '\n';
      if (last) main_csv << kMetricsHeader << '\n';

      auto on_epoch = [&](std::size_t layer, const EpochMetrics& m) {
        const std::string row = metrics_row(m, cfg.log_wall_clock);
        layer_csv << row << '\n' << std::flush;
        if (last) main_csv << row << '\n' << std::flush;
        timing << layer << ',' << m.epoch << ',' << fmt(m.wall_clock_seconds) << '\n';
        if (log)
          *log << "layer " << layer << " epoch " << m.epoch << " steps " << m.total_env_steps
               << " return " << m.mean_return << " success " << m.success_rate << std::endl;
      };
      auto trained = train_layerwise(*base, {cfg.layers[li]}, std::move(result.stack), on_epoch);
      result.stack = std::move(trained.stack);
      result.metrics.push_back(std::move(trained.metrics.front()));
      ++completed;
      save_checkpoint((dir / ("layer_" + std::to_string(index) + ".json")).string(),
                      result.stack.layers.back(), hash);
    }
    save_stack(dir.string(), result.stack, hash);
  } catch (const std::exception& e) {
    write_error_manifest(dir, e, completed);
    throw;
  }
  return result;
}

EvaluationReport evaluate_checkpoint(const std::string& checkpoint, const EnvConfig& env_cfg,
                                     std::size_t n_rollouts, std::uint64_t seed,
                                     bool record_trajectories) {
  LayerStack stack = load_stack(checkpoint);
  auto base = make_environment(env_cfg);
  const auto& bottom = *stack.layers.front().policy;
  const EnvSpec& spec = base->spec();
  if (bottom.obs_dim() != spec.observation_dim || bottom.action_dim() != spec.action_dim)
    throw ShapeError("checkpoint dims (obs " + std::to_string(bottom.obs_dim()) + ", action " +
                     std::to_string(bottom.action_dim()) + ") do not match " + base->name() +
                     " (obs " + std::to_string(spec.observation_dim) + ", action " +
                     std::to_string(spec.action_dim) + ")");
  EvaluationReport report;
  report.n_rollouts = n_rollouts;
  report.seed = seed;
  report.stats = evaluate_stack(*base, stack, n_rollouts, seed, spec.max_episode_steps,
                                record_trajectories);
  return report;
}

void write_trajectory_dump(const std::string& path, const EvalStats& stats) {
  auto out = open_out(path);
  std::size_t sdim = 0, adim = 0;
  for (const auto& r : stats.rollouts)
    if (!r.trajectory.empty()) {
      sdim = r.trajectory.front().state.size();
      adim = r.trajectory.front().action.size();
      break;
    }
  out << "rollout,step";
  for (std::size_t i = 0; i < sdim; ++i) out << ",s" << i;
  for (std::size_t i = 0; i < adim; ++i) out << ",a" << i;
  out << ",reward\n";
  for (std::size_t r = 0; r < stats.rollouts.size(); ++r) {
    const auto& traj = stats.rollouts[r].trajectory;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      out << r << ',' << t;
      for (double x : traj[t].state) out << ',' << fmt(x);
      for (double x : traj[t].action) out << ',' << fmt(x);
      out << ',' << fmt(traj[t].reward) << '\n';
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

// Flow with non-trivial weights everywhere, including the zero-initialised
// output layers.
FlowPolicy perturbed_flow(const FlowConfig& fc, Rng& rng, double spread) {
  FlowPolicy policy(fc, rng);
  for (Parameter* p : policy.parameters())
    for (double& w : p->value.storage()) w += rng.uniform(-spread, spread);
  return policy;
}

CheckResult check_round_trip(Rng& rng) {
  double worst = 0.0;
  for (std::size_t dim : {1, 2, 3, 6}) {
    FlowConfig fc{3, dim, 2, 32, 5.0};
    FlowPolicy policy = perturbed_flow(fc, rng, 0.3);
    for (int i = 0; i < 100; ++i) {
      Vec h = LatentPrior{dim}.sample(rng), obs(3);
      for (double& o : obs) o = rng.normal();
      const Vec back = policy.inverse(policy.forward(h, obs).value, obs).value;
      for (std::size_t j = 0; j < dim; ++j) worst = std::max(worst, std::abs(back[j] - h[j]));
    }
  }
  return {"flow round trip", worst < 1e-9, "max error " + fmt(worst)};
}

CheckResult check_log_det(Rng& rng) {
  double worst = 0.0;
  for (std::size_t dim : {2, 3, 4}) {
    FlowConfig fc{2, dim, 2, 32, 5.0};
    FlowPolicy policy = perturbed_flow(fc, rng, 0.3);
    for (int i = 0; i < 20; ++i) {
      Vec h = LatentPrior{dim}.sample(rng), obs{rng.normal(), rng.normal()};
      const double analytic = policy.forward(h, obs).log_det;
      oracle::ConditionalMap f = [&](std::span<const double> x, std::span<const double> s) {
        return policy.forward(x, s).value;
      };
      const double numeric = oracle::log_abs_det(oracle::numeric_jacobian(f, h, obs));
      worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric)));
    }
  }
  return {"log-determinant vs numeric Jacobian", worst < 1e-4, "max relative error " + fmt(worst)};
}

CheckResult check_normalisation(Rng& rng) {
  FlowConfig fc{1, 2, 2, 16, 5.0};
  FlowPolicy policy = perturbed_flow(fc, rng, 0.1);
  const Vec obs{0.5};
  const double mass = oracle::grid_integrate_density(
      [&](std::span<const double> a) { return policy.log_prob(a, obs); }, 2, -6.0, 6.0, 240);
  return {"density integrates to one", std::abs(mass - 1.0) < 0.02, "mass " + fmt(mass)};
}

CheckResult check_tabular(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto ns = 1 + rng.index(5), na = 1 + rng.index(3), horizon = 1 + rng.index(4);
    const TabularMDP mdp = TabularMDP::random(ns, na, horizon, true, rng);
    const auto post = oracle::enumerate_posterior(mdp);
    const auto soft = oracle::soft_value_iteration(mdp);
    for (std::size_t t = 0; t < post.probs.size(); ++t)
      for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t a = 0; a < na; ++a)
          worst = std::max(worst, std::abs(post.probs[t][s][a] - soft.policy[t][s][a]));
  }
  return {"enumeration matches soft value iteration", worst < 1e-9, "max difference " + fmt(worst)};
}

CheckResult check_risky_branch() {
  const TabularMDP mdp = oracle::risky_branch_mdp();
  const auto post = oracle::enumerate_posterior(mdp);
  const auto soft = oracle::soft_value_iteration(mdp);
  const double p_enum = post.probs[0][0][1], p_soft = soft.policy[0][0][1];
  const double j_enum = oracle::variational_objective(mdp, post.probs);
  const double j_soft = oracle::variational_objective(mdp, soft.policy);
  const bool ok = p_enum > p_soft && j_soft > j_enum;
  return {"risky branch: posterior optimistic, variational better", ok,
          "risky prob " + fmt(p_enum) + " vs " + fmt(p_soft) + ", objective " + fmt(j_enum) +
              " vs " + fmt(j_soft)};
}

}  // namespace

std::vector<CheckResult> run_oracle_checks(std::uint64_t seed, std::ostream& out) {
  Rng rng(seed);
  std::vector<CheckResult> results;
  results.push_back(check_round_trip(rng));
  results.push_back(check_log_det(rng));
  results.push_back(check_normalisation(rng));
  results.push_back(check_tabular(rng));
  results.push_back(check_risky_branch());
  for (const auto& r : results)
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
  return results;
}

}  // namespace lsp
