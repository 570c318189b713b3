#include "grft/scorer/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace grft {

namespace {

double half_diagonal(const OrientedBox& b) { return 0.5 * std::hypot(b.length, b.width); }

bool maybe_overlap(const OrientedBox& a, const OrientedBox& b) {
  const double r = half_diagonal(a) + half_diagonal(b);
  return (a.center - b.center).squaredNorm() <= r * r;
}

}  // namespace

int check_collision(const OrientedBox& ego, std::span<const OrientedBox> others) {
  for (const auto& o : others) {
    if (maybe_overlap(ego, o) && boxes_overlap(ego, o)) return 0;
  }
  return 1;
}

int check_drivable(const OrientedBox& ego, const DrivableArea& drivable) {
  for (const auto& c : ego.corners()) {
    if (!drivable.contains(c)) return 0;
  }
  return 1;
}

int check_drivable(const OrientedBox& ego, const std::vector<Polygon>& drivable) {
  for (const auto& c : ego.corners()) {
    if (!point_drivable(c, drivable)) return 0;
  }
  return 1;
}

double compute_ttc(const OrientedBox& ego, const Vec2& ego_velocity, std::span<const MovingBox> others,
                   const ScorerConfig& cfg) {
  const Vec2 forward(std::cos(ego.heading), std::sin(ego.heading));
  const int steps = static_cast<int>(std::lround(cfg.ttc_horizon / kStepDt));
  for (const auto& o : others) {
    if ((o.box.center - ego.center).dot(forward) <= 0.0) continue;
    // Cheap reject: closing distance over the horizon cannot bring the boxes together.
    const double reach = half_diagonal(ego) + half_diagonal(o.box) +
                         (ego_velocity - o.velocity).norm() * cfg.ttc_horizon;
    if ((o.box.center - ego.center).norm() > reach) continue;
    for (int k = 1; k <= steps; ++k) {
      const double t = k * kStepDt;
      if (t >= cfg.ttc_threshold) break;
      OrientedBox e = ego;
      e.center += ego_velocity * t;
      OrientedBox b = o.box;
      b.center += o.velocity * t;
      if (boxes_overlap(e, b)) return 0.0;
    }
  }
  return 1.0;
}

ComfortResult comfort_score(std::span<const EgoState> window, const ComfortBounds& bounds, double dt) {
  if (window.size() < 3) return {1.0, true};
  std::vector<double> accel(window.size() - 1);
  for (std::size_t i = 0; i + 1 < window.size(); ++i) {
    accel[i] = (window[i + 1].speed - window[i].speed) / dt;
    const double yaw_rate = wrap_angle(window[i + 1].heading - window[i].heading) / dt;
    const double lat = 0.5 * (window[i].speed + window[i + 1].speed) * yaw_rate;
    if (accel[i] < bounds.lon_accel_min || accel[i] > bounds.lon_accel_max) return {0.0, false};
    if (std::abs(yaw_rate) > bounds.yaw_rate_max || std::abs(lat) > bounds.lat_accel_max) return {0.0, false};
  }
  for (std::size_t i = 0; i + 1 < accel.size(); ++i) {
    if (std::abs(accel[i + 1] - accel[i]) / dt > bounds.jerk_max) return {0.0, false};
  }
  return {1.0, false};
}

double progress_score(double ego_progress, double expert_progress, const ScorerConfig& cfg) {
  if (expert_progress < cfg.progress_exempt) return 1.0;
  return std::clamp(ego_progress / std::max(expert_progress, cfg.progress_eps), 0.0, 1.0);
}

double aggregate_reward(const RewardComponents& c, const ScorerConfig& cfg) {
  const double soft = cfg.w1 * c.ttc + cfg.w2 * c.progress + cfg.w3 * c.comfort + cfg.w4 * c.speed;
  return c.col * c.dac * c.wd * soft / (cfg.w1 + cfg.w2 + cfg.w3 + cfg.w4);
}

double survival_reward(std::span<const double> per_step) {
  if (per_step.empty()) return 0.0;
  double sum = 0.0;
  for (double r : per_step) {
    if (r == 0.0) break;
    sum += r;
  }
  return sum / static_cast<double>(per_step.size());
}

double terminal_reward(std::span<const double> per_step) {
  if (per_step.empty()) return 0.0;
  double sum = 0.0;
  for (double r : per_step) {
    if (r == 0.0) return 0.0;
    sum += r;
  }
  return sum / static_cast<double>(per_step.size());
}

ScoringContext::ScoringContext(const Scenario& scenario)
    : scenario_(&scenario), drivable_(drivable_polygons(scenario)) {
  Polyline route = route_polyline(scenario);
  if (route.size() < 2) throw std::invalid_argument("ScoringContext: scenario route is empty");
  route_ = PolylineIndex(std::move(route));
  lanes_.reserve(scenario.lanes.size());
  for (const auto& lane : scenario.lanes) lanes_.emplace_back(lane.centerline);
  expert_arclength_.reserve(scenario.ego_log.size());
  for (const auto& e : scenario.ego_log) expert_arclength_.push_back(route_.project(e.position()).arclength);
}

double ScoringContext::route_arclength(const Vec2& p) const { return route_.project(p).arclength; }

const MapLane* ScoringContext::nearest_lane(const Vec2& p, PolylineProjection* proj) const {
  const MapLane* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    const auto pr = lanes_[i].project(p);
    if (pr.distance < best_d) {
      best_d = pr.distance;
      best = &scenario_->lanes[i];
      if (proj) *proj = pr;
    }
  }
  return best;
}

std::vector<OrientedBox> ScoringContext::obstacles(std::size_t frame) const {
  std::vector<OrientedBox> out(scenario_->statics.begin(), scenario_->statics.end());
  for (const auto& a : scenario_->agents) {
    if (a.poses.at(frame).valid) out.push_back(a.box_at(frame));
  }
  return out;
}

std::vector<MovingBox> ScoringContext::moving_obstacles(std::size_t frame) const {
  std::vector<MovingBox> out;
  out.reserve(scenario_->statics.size() + scenario_->agents.size());
  for (const auto& s : scenario_->statics) out.push_back({s, Vec2::Zero()});
  for (const auto& a : scenario_->agents) {
    const auto& p = a.poses.at(frame);
    if (p.valid) out.push_back({a.box_at(frame), p.speed * Vec2(std::cos(p.heading), std::sin(p.heading))});
  }
  return out;
}

OrientedBox ego_box(const EgoState& s, const ScorerConfig& cfg) {
  return {s.position(), s.heading, cfg.ego_length, cfg.ego_width};
}

RewardComponents score_step(const ScoringContext& ctx, std::size_t frame, const EgoState& state,
                            std::span<const EgoState> history, double ego_progress, double expert_progress,
                            int& wrong_way_steps, const ScorerConfig& cfg) {
  RewardComponents c;
  const OrientedBox box = ego_box(state, cfg);
  const auto obstacles = ctx.obstacles(frame);
  c.col = check_collision(box, obstacles);
  c.dac = check_drivable(box, ctx.drivable());

  PolylineProjection proj;
  const MapLane* lane = ctx.nearest_lane(state.position(), &proj);
  const Vec2 heading(std::cos(state.heading), std::sin(state.heading));
  if (lane && heading.dot(lane->direction_hint[proj.segment]) < 0.0) {
    ++wrong_way_steps;
  } else {
    wrong_way_steps = 0;
  }
  c.wd = wrong_way_steps * kStepDt > cfg.wrong_direction_time + 1e-9 ? 0.0 : 1.0;

  const auto moving = ctx.moving_obstacles(frame);
  c.ttc = compute_ttc(box, state.speed * heading, moving, cfg);
  const std::size_t w = std::min(history.size(), static_cast<std::size_t>(std::max(cfg.comfort_window, 1)));
  c.comfort = comfort_score(history.subspan(history.size() - w), cfg.comfort).score;
  c.progress = progress_score(ego_progress, expert_progress, cfg);
  c.speed = lane && state.speed > lane->speed_limit + cfg.speed_tolerance ? 0.0 : 1.0;
  return c;
}

TrajectoryScore score_trajectory(const Trajectory& plan, const ScoringContext& ctx, std::size_t start_frame,
                                 const EgoState& start_state, const ScorerConfig& cfg) {
  const auto horizon = static_cast<std::size_t>(cfg.reward_horizon);
  if (cfg.reward_horizon < 1) throw std::invalid_argument("score_trajectory: reward horizon < 1");
  if (start_frame + horizon >= ctx.scenario().frame_count()) {
    throw std::out_of_range("score_trajectory: horizon overruns the scenario");
  }
  if (plan.size() < horizon) throw std::invalid_argument("score_trajectory: plan shorter than reward horizon");

  const auto headings = trajectory_headings(plan, start_state.heading);
  std::vector<EgoState> history;
  history.reserve(horizon + 1);
  history.push_back(start_state);
  const double ego_start = ctx.route_arclength(start_state.position());
  const double expert_start = ctx.expert_arclength(start_frame);

  TrajectoryScore out;
  out.steps.reserve(horizon);
  std::vector<double> rewards;
  rewards.reserve(horizon);
  int wrong_way = 0;
  for (std::size_t k = 0; k < horizon; ++k) {
    EgoState s;
    s.x = plan[k].x;
    s.y = plan[k].y;
    s.heading = headings[k];
    s.speed = plan[k].velocity().norm();
    history.push_back(s);
    const std::size_t frame = start_frame + k + 1;
    StepScore step;
    step.components = score_step(ctx, frame, s, history, ctx.route_arclength(s.position()) - ego_start,
                                 ctx.expert_arclength(frame) - expert_start, wrong_way, cfg);
    step.reward = aggregate_reward(step.components, cfg);
    rewards.push_back(step.reward);
    out.steps.push_back(step);
  }
  out.value = cfg.reward_type == RewardType::kSurvival ? survival_reward(rewards) : terminal_reward(rewards);
  return out;
}

void write_components_csv(std::ostream& out, std::span<const StepScore> steps) {
  out << "step,col,dac,wd,ttc,comfort,progress,speed,reward\n";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& c = steps[i].components;
    out << i << ',' << c.col << ',' << c.dac << ',' << c.wd << ',' << c.ttc << ',' << c.comfort << ','
        << c.progress << ',' << c.speed << ',' << steps[i].reward << '\n';
  }
}

}  // namespace grft
