#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "grft/core/geometry.hpp"
#include "grft/core/types.hpp"
#include "grft/scenario/scenario.hpp"

namespace grft {

struct ComfortBounds {
  double lon_accel_min = -4.05;  // [m/s^2]
  double lon_accel_max = 2.40;
  double lat_accel_max = 4.89;
  double jerk_max = 8.37;  // [m/s^3]
  double yaw_rate_max = 0.95;  // [rad/s]
};

enum class RewardType { kSurvival, kTerminal };

struct ScorerConfig {
  double w1 = 5.0;  // TTC
  double w2 = 5.0;  // progress
  double w3 = 2.0;  // comfort
  double w4 = 4.0;  // speed
  double ttc_horizon = 1.0;
  double ttc_threshold = 0.95;
  ComfortBounds comfort;
  int comfort_window = 4;  // ego states per comfort evaluation
  int reward_horizon = 40;  // T_r steps
  double speed_tolerance = 0.5;  // [m/s] above the lane limit
  double wrong_direction_time = 0.5;  // [s] sustained before WD fires
  double progress_eps = 0.1;  // [m]
  double progress_exempt = 5.0;  // [m] expert progress below this scores 1
  double ego_length = 4.6;
  double ego_width = 2.0;
  RewardType reward_type = RewardType::kSurvival;
};

/// Terminal flags use 1 = no violation.
struct RewardComponents {
  double col = 1.0;
  double dac = 1.0;
  double wd = 1.0;
  double ttc = 1.0;
  double comfort = 1.0;
  double progress = 1.0;
  double speed = 1.0;

  bool terminal() const { return col == 0.0 || dac == 0.0 || wd == 0.0; }
  bool operator==(const RewardComponents&) const = default;
};

/// Box with a constant velocity for TTC projection.
struct MovingBox {
  OrientedBox box;
  Vec2 velocity = Vec2::Zero();
};

int check_collision(const OrientedBox& ego, std::span<const OrientedBox> others);
int check_drivable(const OrientedBox& ego, const DrivableArea& drivable);
int check_drivable(const OrientedBox& ego, const std::vector<Polygon>& drivable);

/// Constant-velocity projection at 0.1 s steps up to ttc_horizon; 0 if a contact occurs strictly
/// before ttc_threshold. Only objects whose centre is ahead of the ego centre are considered.
double compute_ttc(const OrientedBox& ego, const Vec2& ego_velocity, std::span<const MovingBox> others,
                   const ScorerConfig& cfg = {});

struct ComfortResult {
  double score = 1.0;
  bool warmup = false;  // fewer than three states
};

/// Finite differences over consecutive states: lon accel and yaw rate from speed/heading,
/// lateral accel = speed * yaw rate, jerk from successive accelerations.
ComfortResult comfort_score(std::span<const EgoState> window, const ComfortBounds& bounds = {}, double dt = kStepDt);

double progress_score(double ego_progress, double expert_progress, const ScorerConfig& cfg = {});

double aggregate_reward(const RewardComponents& c, const ScorerConfig& cfg = {});

/// Survival reward: mean over the full length of the rewards before the first zero.
double survival_reward(std::span<const double> per_step);

/// All-or-zero ablation: 0 if any step reward is 0, else the mean.
double terminal_reward(std::span<const double> per_step);

/// Per-scenario lookup structures shared by the open-loop scorer and the simulator.
/// Holds a pointer to the scenario, which must outlive it.
class ScoringContext {
 public:
  explicit ScoringContext(const Scenario& scenario);

  const Scenario& scenario() const { return *scenario_; }
  const DrivableArea& drivable() const { return drivable_; }
  double route_arclength(const Vec2& p) const;
  double expert_arclength(std::size_t frame) const { return expert_arclength_.at(frame); }
  const MapLane* nearest_lane(const Vec2& p, PolylineProjection* proj = nullptr) const;
  /// Valid agents and statics at a frame.
  std::vector<OrientedBox> obstacles(std::size_t frame) const;
  std::vector<MovingBox> moving_obstacles(std::size_t frame) const;

 private:
  const Scenario* scenario_;
  DrivableArea drivable_;
  PolylineIndex route_;
  std::vector<PolylineIndex> lanes_;
  std::vector<double> expert_arclength_;
};

OrientedBox ego_box(const EgoState& s, const ScorerConfig& cfg);

/// One step of the shared metric evaluation. `wrong_way_steps` carries the consecutive
/// against-lane count across calls; `history` ends with `state` and feeds comfort.
RewardComponents score_step(const ScoringContext& ctx, std::size_t frame, const EgoState& state,
                            std::span<const EgoState> history, double ego_progress, double expert_progress,
                            int& wrong_way_steps, const ScorerConfig& cfg);

struct StepScore {
  RewardComponents components;
  double reward = 0.0;
};

struct TrajectoryScore {
  double value = 0.0;  // survival or terminal reward per cfg.reward_type
  std::vector<StepScore> steps;
};

/// Open-loop rollout of a world-frame plan against log replay for T_r steps starting after
/// `start_frame` (plan step k lands on frame start_frame + k + 1). Throws std::out_of_range
/// when the window passes the last frame and std::invalid_argument for a plan shorter than T_r.
TrajectoryScore score_trajectory(const Trajectory& plan, const ScoringContext& ctx, std::size_t start_frame,
                                 const EgoState& start_state, const ScorerConfig& cfg = {});

void write_components_csv(std::ostream& out, std::span<const StepScore> steps);

}  // namespace grft
