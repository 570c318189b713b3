#include "grft/dynamics/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include <Eigen/LU>

#include "grft/core/geometry.hpp"

namespace grft {

EgoState bicycle_step(const EgoState& state, const Control& u, double dt, const VehicleParams& vehicle) {
  const double accel = std::clamp(u.accel, -vehicle.accel_max, vehicle.accel_max);
  const double steer = std::clamp(u.steer, -vehicle.steer_max, vehicle.steer_max);
  EgoState next = state;
  const double v = state.speed;
  next.x = state.x + v * std::cos(state.heading) * dt;
  next.y = state.y + v * std::sin(state.heading) * dt;
  next.heading = wrap_angle(state.heading + v * std::tan(steer) / vehicle.wheelbase * dt);
  next.speed = std::max(0.0, v + accel * dt);
  next.accel = accel;
  next.steer = steer;
  return next;
}

DareSolution solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, double tol, int max_iter) {
  const auto n = A.rows();
  const auto m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m || R.cols() != m) {
    throw std::invalid_argument("solve_dare: inconsistent dimensions");
  }
  DareSolution sol;
  Eigen::MatrixXd P = Q;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd BtP = B.transpose() * P;
    const Eigen::MatrixXd K = (R + BtP * B).partialPivLu().solve(BtP * A);
    Eigen::MatrixXd next = Q + A.transpose() * P * A - A.transpose() * P * B * K;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) throw std::runtime_error("solve_dare: diverged");
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (change < tol) {
      sol.P = P;
      const Eigen::MatrixXd BtPn = B.transpose() * P;
      sol.K = (R + BtPn * B).partialPivLu().solve(BtPn * A);
      sol.iterations = it;
      return sol;
    }
  }
  throw std::runtime_error("solve_dare: no convergence after " + std::to_string(max_iter) + " iterations");
}

namespace {

constexpr double kGridMin = 0.5;
constexpr double kGridStep = 0.5;
constexpr int kGridSize = 80;  // 0.5 .. 40 m/s

struct GainTable {
  std::vector<Eigen::RowVector2d> lateral;
  double lon = 0.0;

  Eigen::RowVector2d lateral_at(double v) const {
    const double u = std::clamp((v - kGridMin) / kGridStep, 0.0, static_cast<double>(kGridSize - 1));
    const auto i = std::min(static_cast<std::size_t>(u), lateral.size() - 2);
    const double f = u - static_cast<double>(i);
    return (1.0 - f) * lateral[i] + f * lateral[i + 1];
  }
};

using GainKey = std::tuple<double, double, double, double, double, double, double, double, double, int>;

std::shared_ptr<const GainTable> gains_for(const LqrConfig& cfg) {
  static std::mutex mu;
  static std::map<GainKey, std::shared_ptr<const GainTable>> cache;
  const GainKey key{cfg.vehicle.wheelbase, cfg.q_lat(0, 0), cfg.q_lat(0, 1), cfg.q_lat(1, 1), cfg.r_lat,
                    cfg.q_lon, cfg.r_lon, cfg.dt, cfg.riccati_tol, cfg.riccati_max_iter};
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  auto table = std::make_shared<GainTable>();
  const Eigen::MatrixXd R_lat = Eigen::MatrixXd::Constant(1, 1, cfg.r_lat);
  for (int k = 0; k < kGridSize; ++k) {
    const double v = kGridMin + kGridStep * k;
    Eigen::MatrixXd A(2, 2), B(2, 1);
    A << 1.0, v * cfg.dt, 0.0, 1.0;
    B << 0.0, v * cfg.dt / cfg.vehicle.wheelbase;
    const auto sol = solve_dare(A, B, cfg.q_lat, R_lat, cfg.riccati_tol, cfg.riccati_max_iter);
    table->lateral.push_back(sol.K.row(0));
  }
  const auto lon = solve_dare(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Constant(1, 1, cfg.dt),
                              Eigen::MatrixXd::Constant(1, 1, cfg.q_lon), Eigen::MatrixXd::Constant(1, 1, cfg.r_lon),
                              cfg.riccati_tol, cfg.riccati_max_iter);
  table->lon = lon.K(0, 0);
  cache.emplace(key, table);
  return table;
}

bool plan_finite(const Trajectory& plan) {
  for (const auto& w : plan.points) {
    if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.vx) || !std::isfinite(w.vy)) return false;
  }
  return true;
}

}  // namespace

TrackResult lqr_track(const EgoState& state, const Trajectory& plan, const LqrConfig& cfg) {
  TrackResult out;
  if (plan.size() < 2 || !plan_finite(plan)) {
    out.degenerate = true;
    return out;
  }
  const auto gains = gains_for(cfg);
  const VehicleParams& veh = cfg.vehicle;

  // Longitudinal: speed error at the lookahead step.
  const std::size_t look = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.lon_lookahead, 1)) - 1,
                                                 plan.size() - 1);
  const double v_target = plan[look].velocity().norm();
  out.control.accel = std::clamp(gains->lon * (v_target - state.speed), -veh.accel_max, veh.accel_max);

  // Lateral: errors against the first plan step in the plan's Frenet frame.
  const FrenetFrame frame = frenet_frame(plan);
  if (frame.degenerate) return out;  // stationary plan: hold the wheel straight
  const Vec2 t0 = frame.tangents[0];
  const Vec2 n0 = frame.normals[0];
  const double ref_heading = std::atan2(t0.y(), t0.x());
  const double e_lat = n0.dot(state.position() - plan[0].position());
  const double e_head = wrap_angle(state.heading - ref_heading);

  const double ds = (plan[1].position() - plan[0].position()).norm();
  const Vec2 t1 = frame.tangents[1];
  const double curvature = ds > 1e-6 ? std::atan2(t0.x() * t1.y() - t0.y() * t1.x(), t0.dot(t1)) / ds : 0.0;
  const double feedforward = std::atan(veh.wheelbase * curvature);
  const Eigen::RowVector2d K = gains->lateral_at(state.speed);
  const double steer = feedforward - (K(0) * e_lat + K(1) * e_head);
  out.control.steer = std::clamp(steer, -veh.steer_max, veh.steer_max);
  return out;
}

std::vector<TrackResult> track_batch(const std::vector<EgoState>& states, const std::vector<Trajectory>& plans,
                                     const LqrConfig& cfg) {
  if (states.size() != plans.size()) throw std::invalid_argument("track_batch: length mismatch");
  std::vector<TrackResult> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) out.push_back(lqr_track(states[i], plans[i], cfg));
  return out;
}

}  // namespace grft
