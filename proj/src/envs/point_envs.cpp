#include "lsp/envs/point_envs.hpp"

#include <algorithm>
#include <cmath>

namespace lsp {

bool EnvSpec::has_channel(const std::string& name) const {
  return std::find(reward_channels.begin(), reward_channels.end(), name) != reward_channels.end();
}

Vec Environment::clip_action(std::span<const double> action) const {
  const EnvSpec& s = spec();
  if (action.size() != s.action_dim)
    throw EnvError(name() + ": action has " + std::to_string(action.size()) +
                   " components, expected " + std::to_string(s.action_dim));
  Vec out(action.begin(), action.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::isnan(out[i])) throw EnvError(name() + ": NaN action");
    out[i] = std::clamp(out[i], s.action_low[i], s.action_high[i]);
  }
  return out;
}

MazeLayout MazeLayout::standard() {
  MazeLayout m;
  // U open to the top: floor at y = 1.8 from x = 1.4 to 2.6, sides up to y = 2.8.
  // The start box sits below it, so the top goal needs a detour round a side.
  m.interior_walls = {
      {{1.4, 1.8}, {2.6, 1.8}},
      {{1.4, 1.8}, {1.4, 2.8}},
      {{2.6, 1.8}, {2.6, 2.8}},
  };
  m.start_lo = {1.6, 0.8};
  m.start_hi = {2.4, 1.2};
  m.goals = {Point2{0.4, 2.6}, Point2{2.0, 3.4}, Point2{3.6, 2.6}};
  return m;
}

namespace {

double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(Point2 p, Point2 a, Point2 b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const double d1 = cross(q1, q2, p1);
  const double d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1);
  const double d4 = cross(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment(p1, q1, q2)) return true;
  if (d2 == 0 && on_segment(p2, q1, q2)) return true;
  if (d3 == 0 && on_segment(q1, p1, p2)) return true;
  if (d4 == 0 && on_segment(q2, p1, p2)) return true;
  return false;
}

}  // namespace

PointMassEnv::PointMassEnv(MazeLayout layout, bool with_walls,
                           std::optional<std::size_t> goal_index, PointMassParams params,
                           bool bounded)
    : layout_(std::move(layout)),
      with_walls_(with_walls),
      bounded_(bounded),
      goal_index_(goal_index),
      params_(params) {
  if (goal_index_ && *goal_index_ >= layout_.goals.size())
    throw EnvError("point mass: goal index " + std::to_string(*goal_index_) + " out of range");
  spec_.observation_dim = 6;
  spec_.action_dim = 2;
  spec_.max_episode_steps = params_.max_episode_steps;
  spec_.reward_channels = {"velocity_norm"};
  if (goal_index_) spec_.reward_channels.push_back("sparse_goal");
  spec_.action_low.assign(2, -params_.action_bound);
  spec_.action_high.assign(2, params_.action_bound);

  const double w = layout_.width, h = layout_.height;
  if (bounded_) blocking_ = {{{0, 0}, {w, 0}}, {{w, 0}, {w, h}}, {{w, h}, {0, h}}, {{0, h}, {0, 0}}};
  if (with_walls_)
    blocking_.insert(blocking_.end(), layout_.interior_walls.begin(), layout_.interior_walls.end());
  pos_ = {(layout_.start_lo.x + layout_.start_hi.x) / 2, (layout_.start_lo.y + layout_.start_hi.y) / 2};
}

std::unique_ptr<PointMassEnv> PointMassEnv::maze(std::size_t goal_index, PointMassParams params,
                                                 MazeLayout layout) {
  return std::make_unique<PointMassEnv>(std::move(layout), true, goal_index, params);
}

std::unique_ptr<PointMassEnv> PointMassEnv::open_arena(PointMassParams params, MazeLayout layout) {
  return std::make_unique<PointMassEnv>(std::move(layout), false, std::nullopt, params);
}

std::string PointMassEnv::name() const {
  if (!goal_index_) return with_walls_ ? "point_mass_walls" : bounded_ ? "point_mass" : "point_plane";
  return "point_maze_goal" + std::to_string(*goal_index_);
}

std::unique_ptr<Environment> PointMassEnv::clone() const {
  return std::make_unique<PointMassEnv>(*this);
}

std::unique_ptr<Environment> PointMassEnv::pretraining_variant() const {
  return std::make_unique<PointMassEnv>(layout_, false, std::nullopt, params_, false);
}

bool PointMassEnv::blocked(Point2 p, Point2 q) const {
  return std::any_of(blocking_.begin(), blocking_.end(),
                     [&](const WallSegment& w) { return segments_intersect(p, q, w.a, w.b); });
}

bool PointMassEnv::inside_wall_free_region(Point2 p) const {
  if (bounded_ && (p.x <= 0 || p.y <= 0 || p.x >= layout_.width || p.y >= layout_.height))
    return false;
  for (const auto& w : blocking_)
    if (cross(w.a, w.b, p) == 0 && on_segment(p, w.a, w.b)) return false;
  return true;
}

Vec PointMassEnv::reset(Rng& rng) {
  pos_ = {rng.uniform(layout_.start_lo.x, layout_.start_hi.x),
          rng.uniform(layout_.start_lo.y, layout_.start_hi.y)};
  vel_ = {0.0, 0.0};
  return observation();
}

StepResult PointMassEnv::step(std::span<const double> action) {
  const Vec a = clip_action(action);
  Point2 v{(1.0 - params_.friction) * vel_.x + params_.dt * a[0],
           (1.0 - params_.friction) * vel_.y + params_.dt * a[1]};
  const double speed = std::hypot(v.x, v.y);
  if (speed > params_.v_max) {
    v.x *= params_.v_max / speed;
    v.y *= params_.v_max / speed;
  }
  const Point2 next{pos_.x + params_.dt * v.x, pos_.y + params_.dt * v.y};
  if (blocked(pos_, next)) {
    vel_ = {0.0, 0.0};
  } else {
    pos_ = next;
    vel_ = v;
  }

  StepResult r;
  r.rewards["velocity_norm"] = std::hypot(vel_.x, vel_.y);
  if (goal_index_) {
    const Point2 g = layout_.goals[*goal_index_];
    const bool reached = std::hypot(pos_.x - g.x, pos_.y - g.y) <= layout_.goal_radius;
    r.rewards["sparse_goal"] = reached ? 1000.0 : 0.0;
    r.terminal = reached;
  }
  r.observation = observation();
  return r;
}

Vec PointMassEnv::observation() const {
  Vec o{pos_.x, pos_.y, vel_.x, vel_.y, 0.0, 0.0};
  if (goal_index_) {
    const Point2 g = layout_.goals[*goal_index_];
    o[4] = g.x - pos_.x;
    o[5] = g.y - pos_.y;
  }
  return o;
}

}  // namespace lsp
