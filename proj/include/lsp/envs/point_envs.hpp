#pragma once

#include <array>
#include <optional>
#include <vector>

#include "lsp/envs/environment.hpp"

namespace lsp {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct WallSegment {
  Point2 a;
  Point2 b;
};

struct PointMassParams {
  double dt = 0.05;
  double friction = 0.05;
  double v_max = 2.0;
  double action_bound = 2.0;
  std::size_t max_episode_steps = 500;
};

/// Axis-aligned arena with interior walls, a start box and three goals.
struct MazeLayout {
  double width = 4.0;
  double height = 4.0;
  std::vector<WallSegment> interior_walls;
  Point2 start_lo;
  Point2 start_hi;
  std::array<Point2, 3> goals;
  double goal_radius = 0.25;

  /// 4x4 arena; a U-shaped wall open to the top sits above the start box,
  /// goals sit left, top (inside the U's shadow) and right.
  static MazeLayout standard();
};

/// Point mass in the plane: v <- clip((1 - friction) v + dt a, v_max),
/// x <- x + dt v. A move whose path crosses a wall is rejected: the position
/// is kept and the velocity zeroed. Observation is
/// [x, y, vx, vy, goal_x - x, goal_y - y]; the goal block is zero when there
/// is no goal. Channels: velocity_norm always, sparse_goal when a goal is set.
class PointMassEnv final : public Environment {
public:
  /// `bounded` false drops the arena border as well, leaving an open plane.
  PointMassEnv(MazeLayout layout, bool with_walls, std::optional<std::size_t> goal_index,
               PointMassParams params = {}, bool bounded = true);

  /// Maze task: walls on, goal `goal_index` (0 left, 1 top, 2 right).
  static std::unique_ptr<PointMassEnv> maze(std::size_t goal_index, PointMassParams params = {},
                                            MazeLayout layout = MazeLayout::standard());
  /// Open arena without interior walls or goal.
  static std::unique_ptr<PointMassEnv> open_arena(PointMassParams params = {},
                                                  MazeLayout layout = MazeLayout::standard());

  const EnvSpec& spec() const override { return spec_; }
  Vec reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  std::unique_ptr<Environment> clone() const override;
  std::string name() const override;
  /// Same dynamics and observation layout on an open plane: no walls, no
  /// border, no goal.
  std::unique_ptr<Environment> pretraining_variant() const override;

  Point2 position() const { return pos_; }
  Point2 velocity() const { return vel_; }
  void set_state(Point2 pos, Point2 vel) {
    pos_ = pos;
    vel_ = vel;
  }
  bool has_goal() const { return goal_index_.has_value(); }
  const MazeLayout& layout() const { return layout_; }
  bool with_walls() const { return with_walls_; }
  bool bounded() const { return bounded_; }
  /// True if the open segment p->q touches any blocking segment.
  bool blocked(Point2 p, Point2 q) const;
  bool inside_wall_free_region(Point2 p) const;

private:
  Vec observation() const;

  MazeLayout layout_;
  bool with_walls_;
  bool bounded_;
  std::optional<std::size_t> goal_index_;
  PointMassParams params_;
  EnvSpec spec_;
  std::vector<WallSegment> blocking_;
  Point2 pos_;
  Point2 vel_;
};

}  // namespace lsp
