#pragma once

#include <vector>

#include <Eigen/Core>

#include "grft/core/types.hpp"

namespace grft {

struct Control {
  double accel = 0.0;  // [m/s^2]
  double steer = 0.0;  // [rad]

  bool operator==(const Control&) const = default;
};

struct VehicleParams {
  double wheelbase = 3.089;
  double accel_max = 4.0;
  double steer_max = 0.6;
};

struct LqrConfig {
  VehicleParams vehicle;
  Eigen::Matrix2d q_lat = (Eigen::Matrix2d() << 1.0, 0.0, 0.0, 2.0).finished();
  double r_lat = 8.0;
  double q_lon = 1.0;
  double r_lon = 2.0;
  double riccati_tol = 1e-9;
  int riccati_max_iter = 10000;
  int lon_lookahead = 10;  // plan step whose speed is the longitudinal target
  double dt = kStepDt;
};

/// Clamps u to the vehicle bounds, then integrates one forward-Euler step.
EgoState bicycle_step(const EgoState& state, const Control& u, double dt, const VehicleParams& vehicle = {});

struct DareSolution {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;  // u = -K x
  int iterations = 0;
};

/// Fixed-point iteration P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA from P = Q until the largest
/// entry change is below tol. Throws std::runtime_error after max_iter iterations and
/// std::invalid_argument on inconsistent dimensions.
DareSolution solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, double tol = 1e-9, int max_iter = 10000);

struct TrackResult {
  Control control;
  bool degenerate = false;
};

/// Decoupled LQR on errors against the first plan step. Lateral: (offset along the plan's left
/// normal, heading error) with curvature feed-forward and speed-scheduled gains. Longitudinal:
/// speed error against plan step `lon_lookahead`. Plans with fewer than two points or non-finite
/// values give zero control and set `degenerate`.
TrackResult lqr_track(const EgoState& state, const Trajectory& plan, const LqrConfig& cfg = {});

/// Elementwise lqr_track; throws std::invalid_argument on a length mismatch.
std::vector<TrackResult> track_batch(const std::vector<EgoState>& states, const std::vector<Trajectory>& plans,
                                     const LqrConfig& cfg = {});

}  // namespace grft
