#include "lsp/rl/trainer.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>

namespace lsp {

ActionPrior parse_action_prior(const std::string& name) {
  if (name == "uniform") return ActionPrior::uniform;
  if (name == "gaussian") return ActionPrior::gaussian;
  throw std::invalid_argument("unknown action prior '" + name + "' (expected uniform or gaussian)");
}

std::string to_string(ActionPrior prior) {
  return prior == ActionPrior::uniform ? "uniform" : "gaussian";
}

void TrainerConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("trainer config: " + field + " " + why);
  };
  if (!(discount > 0.0 && discount < 1.0)) fail("discount", "must lie in (0, 1)");
  if (!(target_smoothing > 0.0 && target_smoothing <= 1.0))
    fail("target_smoothing", "must lie in (0, 1]");
  if (!(reward_scale > 0.0) || !std::isfinite(reward_scale)) fail("reward_scale", "must be positive");
  if (batch_size == 0) fail("batch_size", "must be positive");
  if (steps_per_epoch == 0) fail("steps_per_epoch", "must be positive");
  if (max_path_length == 0) fail("max_path_length", "must be positive");
  if (pool_capacity == 0) fail("pool_capacity", "must be positive");
  if (min_pool_size > pool_capacity) fail("min_pool_size", "exceeds pool_capacity");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
  if (hidden_units == 0) fail("hidden_units", "must be positive");
  if (latent_mode == LatentMode::hold_n && latent_hold == 0) fail("latent_hold", "must be >= 1");
  if (reward_channel.empty()) fail("reward_channel", "must be set");
}

ValueNets::ValueNets(std::size_t obs_dim, std::size_t action_dim, std::size_t hidden, Rng& rng)
    : q("q", {obs_dim + action_dim, hidden, hidden, 1}, rng),
      v("v", {obs_dim, hidden, hidden, 1}, rng),
      v_target(v) {}

void target_update(Mlp& target, const Mlp& live, double tau) {
  auto dst = target.parameters();
  auto src = live.parameters();
  if (dst.size() != src.size()) throw ShapeError("target_update: network topologies differ");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->value.shape() != src[i]->value.shape())
      throw ShapeError("target_update: parameter shapes differ");
    double* t = dst[i]->value.data();
    const double* l = src[i]->value.data();
    for (std::size_t j = 0; j < dst[i]->value.size(); ++j) t[j] = tau * l[j] + (1.0 - tau) * t[j];
  }
}

// ---- rollouts -------------------------------------------------------------

RolloutResult rollout(Environment& env, const LatentPolicy& policy, const RolloutOptions& opts,
                      Rng& rng) {
  if (!env.spec().has_channel(opts.reward_channel))
    throw EnvError(env.name() + " has no reward channel '" + opts.reward_channel + "'");
  RolloutResult res;
  LatentSchedule schedule(opts.latent_mode, opts.latent_hold, policy.action_dim());
  Vec obs = env.reset(rng);
  for (std::size_t t = 0; t < opts.max_steps; ++t) {
    const Vec h = schedule.next(rng);
    PolicySample s = policy.act(h, obs);
    StepResult step = env.step(s.action);
    const double r = step.rewards.at(opts.reward_channel);
    res.total_return += r;
    ++res.length;
    if (opts.record_trajectories) res.trajectory.push_back({obs, s.action, r});
    obs = std::move(step.observation);
    if (step.terminal) {
      res.terminal = true;
      break;
    }
  }
  return res;
}

namespace {

Rng rollout_rng(std::uint64_t seed, std::size_t i) {
  Rng base(seed ^ (0x632BE59BD9B4E019ULL * (i + 1)));
  return base.split();
}

EvalStats summarize(std::vector<RolloutResult> rollouts) {
  EvalStats st;
  st.rollouts = std::move(rollouts);
  const double n = static_cast<double>(st.rollouts.size());
  if (st.rollouts.empty()) return st;
  double sum = 0.0, succ = 0.0;
  for (const auto& r : st.rollouts) {
    sum += r.total_return;
    succ += r.terminal ? 1.0 : 0.0;
  }
  st.mean_return = sum / n;
  double var = 0.0;
  for (const auto& r : st.rollouts) var += (r.total_return - st.mean_return) * (r.total_return - st.mean_return);
  st.std_return = std::sqrt(var / n);
  st.success_rate = succ / n;
  return st;
}

}  // namespace

EvalStats evaluate_policy_serial(const Environment& env, const LatentPolicy& policy,
                                 const RolloutOptions& opts) {
  std::vector<RolloutResult> results(opts.n_rollouts);
  for (std::size_t i = 0; i < opts.n_rollouts; ++i) {
    auto local = env.clone();
    Rng rng = rollout_rng(opts.seed, i);
    results[i] = rollout(*local, policy, opts, rng);
  }
  return summarize(std::move(results));
}

EvalStats evaluate_policy(const Environment& env, const LatentPolicy& policy,
                          const RolloutOptions& opts) {
  std::vector<RolloutResult> results(opts.n_rollouts);
  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(opts.n_rollouts);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      auto local = env.clone();
      Rng rng = rollout_rng(opts.seed, static_cast<std::size_t>(i));
      results[static_cast<std::size_t>(i)] = rollout(*local, policy, opts, rng);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return summarize(std::move(results));
}

// ---- trainer --------------------------------------------------------------

MaxEntTrainer::MaxEntTrainer(Environment& env, FlowPolicy& policy, TrainerConfig config)
    : env_(env),
      policy_(policy),
      config_(std::move(config)),
      pool_(config_.pool_capacity, env.spec().observation_dim, env.spec().action_dim),
      schedule_(config_.latent_mode, config_.latent_hold, env.spec().action_dim) {
  config_.validate();
  const EnvSpec& spec = env_.spec();
  if (policy_.obs_dim() != spec.observation_dim || policy_.action_dim() != spec.action_dim)
    throw ShapeError("trainer: policy dims (" + std::to_string(policy_.obs_dim()) + ", " +
                     std::to_string(policy_.action_dim()) + ") do not match environment " +
                     env_.name() + " (" + std::to_string(spec.observation_dim) + ", " +
                     std::to_string(spec.action_dim) + ")");
  if (!spec.has_channel(config_.reward_channel))
    throw EnvError(env_.name() + " has no reward channel '" + config_.reward_channel + "'");
  Rng root(config_.seed);
  Rng init_rng = root.split();
  collect_rng_ = root.split();
  learn_rng_ = root.split();
  nets_ = ValueNets(spec.observation_dim, spec.action_dim, config_.hidden_units, init_rng);
  q_opt_ = AdamState::for_params(nets_.q.parameters(), config_.learning_rate);
  v_opt_ = AdamState::for_params(nets_.v.parameters(), config_.learning_rate);
  policy_opt_ = AdamState::for_params(policy_.parameters(), config_.learning_rate);
}

std::size_t MaxEntTrainer::path_limit() const {
  return std::min(config_.max_path_length, env_.spec().max_episode_steps);
}

double MaxEntTrainer::log_action_prior(std::span<const double> a) const {
  if (config_.action_prior == ActionPrior::uniform) return 0.0;
  return LatentPrior{a.size()}.log_density(a);
}

Transition MaxEntTrainer::collect_step() {
  if (needs_reset_) {
    obs_ = env_.reset(collect_rng_);
    schedule_.reset();
    path_length_ = 0;
    needs_reset_ = false;
  }
  const Vec h = schedule_.next(collect_rng_);
  PolicySample s = policy_.act(h, obs_);
  StepResult step = env_.step(s.action);
  Transition t;
  t.state = obs_;
  t.action = std::move(s.action);
  t.reward = config_.reward_scale * step.rewards.at(config_.reward_channel);
  t.next_state = step.observation;
  t.terminal = step.terminal;
  pool_.add(t);
  ++env_steps_;
  ++path_length_;
  obs_ = std::move(step.observation);
  if (step.terminal || path_length_ >= path_limit()) needs_reset_ = true;
  return t;
}

LossReport MaxEntTrainer::update_step() {
  if (pool_.size() < config_.min_pool_size)
    throw std::logic_error("update_step: pool holds " + std::to_string(pool_.size()) +
                           " transitions, needs " + std::to_string(config_.min_pool_size));
  const std::size_t B = config_.batch_size;
  const std::size_t act_dim = policy_.action_dim();
  TransitionBatch batch = pool_.sample(B, learn_rng_);
  LossReport report;

  // Q: regress onto r + gamma (1 - done) V_target(s').
  Gradients q_grads;
  {
    Tape tape;
    const Tensor next_v = nets_.v_target.evaluate(batch.next_states);
    Tensor target(Shape{B, 1});
    for (std::size_t i = 0; i < B; ++i)
      target[i] = batch.rewards[i] + config_.discount * (1.0 - batch.terminals[i]) * next_v[i];
    Var sa = ad::concat_last(tape.constant(batch.states), tape.constant(batch.actions));
    Var q = nets_.q.forward(tape, sa);
    Var loss = ad::scale(ad::mean(ad::square(ad::sub(q, tape.constant(std::move(target))))), 0.5);
    report.q_loss = loss.value().item();
    q_grads = tape.backward(loss);
  }

  // V and policy share one tape; their parameter sets are disjoint and the V
  // target is detached.
  Gradients vp_grads;
  {
    Tape tape;
    Tensor latent(Shape{B, act_dim});
    for (double& x : latent.values()) x = learn_rng_.normal();
    Var states = tape.constant(batch.states);
    Var h = tape.constant(latent);
    MappedBatch fwd = policy_.forward(tape, h, states);
    const LatentPrior prior{act_dim};
    Var log_pi = ad::sub(prior.log_density(h), fwd.log_det);
    Var log_p = config_.action_prior == ActionPrior::gaussian
                    ? prior.log_density(fwd.value)
                    : tape.constant(Tensor(Shape{B}, 0.0));
    Var q_pi = ad::row_sum(nets_.q.forward(tape, ad::concat_last(states, fwd.value), false));
    Var v = ad::row_sum(nets_.v.forward(tape, states));
    Var v_target = ad::detach(ad::add(ad::sub(q_pi, log_pi), log_p));
    Var v_loss = ad::scale(ad::mean(ad::square(ad::sub(v, v_target))), 0.5);
    Var policy_loss = ad::mean(ad::sub(ad::sub(log_pi, log_p), q_pi));
    report.v_loss = v_loss.value().item();
    report.policy_loss = policy_loss.value().item();
    report.mean_entropy_estimate = -ad::mean(log_pi).value().item();
    vp_grads = tape.backward(ad::add(v_loss, policy_loss));
  }

  if (!std::isfinite(report.q_loss) || !std::isfinite(report.v_loss) ||
      !std::isfinite(report.policy_loss)) {
    double rmin = INFINITY, rmax = -INFINITY, rsum = 0.0;
    for (double r : batch.rewards.values()) {
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      rsum += r;
    }
    std::ostringstream os;
    os << "non-finite loss at env step " << env_steps_ << " (q_loss=" << report.q_loss
       << ", v_loss=" << report.v_loss << ", policy_loss=" << report.policy_loss
       << "); batch rewards min=" << rmin << " max=" << rmax << " mean=" << rsum / B
       << ", terminals=" << ad::sum(Tape().constant(batch.terminals)).value().item();
    throw DivergenceError(os.str());
  }

  adam_step(nets_.q.parameters(), q_grads, q_opt_);
  adam_step(nets_.v.parameters(), vp_grads, v_opt_);
  adam_step(policy_.parameters(), vp_grads, policy_opt_);
  target_update(nets_.v_target, nets_.v, config_.target_smoothing);
  return report;
}

EvalStats MaxEntTrainer::evaluate(std::size_t n_rollouts, std::uint64_t seed) const {
  RolloutOptions opts;
  opts.n_rollouts = n_rollouts;
  opts.seed = seed;
  opts.max_steps = path_limit();
  opts.reward_channel = config_.reward_channel;
  opts.latent_mode = config_.latent_mode;
  opts.latent_hold = config_.latent_hold;
  return evaluate_policy(env_, policy_, opts);
}

std::vector<EpochMetrics> MaxEntTrainer::train(
    const std::function<void(const EpochMetrics&)>& on_epoch) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const std::uint64_t eval_seed = config_.seed ^ 0x5DEECE66DULL;
  std::vector<EpochMetrics> rows;
  for (std::size_t epoch = 1; epoch <= config_.total_epochs; ++epoch) {
    LossReport acc;
    std::size_t updates = 0;
    for (std::size_t i = 0; i < config_.steps_per_epoch; ++i) {
      collect_step();
      if (pool_.size() >= config_.min_pool_size) {
        LossReport r = update_step();
        acc.q_loss += r.q_loss;
        acc.v_loss += r.v_loss;
        acc.policy_loss += r.policy_loss;
        acc.mean_entropy_estimate += r.mean_entropy_estimate;
        ++updates;
      }
    }
    EvalStats eval = evaluate(config_.eval_rollouts, eval_seed);
    EpochMetrics m;
    m.epoch = epoch;
    m.total_env_steps = env_steps_;
    m.mean_return = eval.mean_return;
    m.std_return = eval.std_return;
    m.success_rate = eval.success_rate;
    const double n = updates ? static_cast<double>(updates) : 1.0;
    m.q_loss = acc.q_loss / n;
    m.v_loss = acc.v_loss / n;
    m.policy_loss = acc.policy_loss / n;
    m.entropy_estimate = acc.mean_entropy_estimate / n;
    m.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    rows.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return rows;
}

}  // namespace lsp
