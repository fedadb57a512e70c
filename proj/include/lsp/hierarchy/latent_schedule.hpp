#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lsp/core/rng.hpp"

namespace lsp {

/// How a policy draws its prior latent along a rollout.
enum class LatentMode { per_step, per_rollout, hold_n };

LatentMode parse_latent_mode(const std::string& name);
std::string to_string(LatentMode mode);

/// Stateful latent stream: per_step draws every step, per_rollout once per
/// episode, hold_n every `hold` steps.
class LatentSchedule {
public:
  LatentSchedule(LatentMode mode, std::size_t hold, std::size_t dim);

  /// Start of a new episode.
  void reset() { steps_ = 0; }
  std::vector<double> next(Rng& rng);

  LatentMode mode() const { return mode_; }
  std::size_t hold() const { return hold_; }

private:
  LatentMode mode_;
  std::size_t hold_;
  std::size_t dim_;
  std::size_t steps_ = 0;
  std::vector<double> current_;
};

/// The first `steps` latents of one episode.
std::vector<std::vector<double>> latent_schedule(LatentMode mode, std::size_t hold,
                                                 std::size_t dim, std::size_t steps, Rng& rng);

}  // namespace lsp
