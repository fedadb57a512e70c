#include "lsp/hierarchy/latent_schedule.hpp"

#include <stdexcept>

namespace lsp {

LatentMode parse_latent_mode(const std::string& name) {
  if (name == "per_step") return LatentMode::per_step;
  if (name == "per_rollout") return LatentMode::per_rollout;
  if (name == "hold_n") return LatentMode::hold_n;
  throw std::invalid_argument("unknown latent mode '" + name +
                              "' (expected per_step, per_rollout or hold_n)");
}

std::string to_string(LatentMode mode) {
  switch (mode) {
    case LatentMode::per_step: return "per_step";
    case LatentMode::per_rollout: return "per_rollout";
    case LatentMode::hold_n: return "hold_n";
  }
  return "?";
}

LatentSchedule::LatentSchedule(LatentMode mode, std::size_t hold, std::size_t dim)
    : mode_(mode), hold_(hold), dim_(dim) {
  if (mode_ == LatentMode::hold_n && hold_ == 0)
    throw std::invalid_argument("latent schedule: hold_n needs n >= 1");
  if (mode_ == LatentMode::per_step) hold_ = 1;
}

std::vector<double> LatentSchedule::next(Rng& rng) {
  bool fresh = false;
  switch (mode_) {
    case LatentMode::per_step: fresh = true; break;
    case LatentMode::per_rollout: fresh = steps_ == 0; break;
    case LatentMode::hold_n: fresh = steps_ % hold_ == 0; break;
  }
  if (fresh) {
    current_.resize(dim_);
    for (double& v : current_) v = rng.normal();
  }
  ++steps_;
  return current_;
}

std::vector<std::vector<double>> latent_schedule(LatentMode mode, std::size_t hold,
                                                 std::size_t dim, std::size_t steps, Rng& rng) {
  LatentSchedule s(mode, hold, dim);
  std::vector<std::vector<double>> out;
  out.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) out.push_back(s.next(rng));
  return out;
}

}  // namespace lsp
