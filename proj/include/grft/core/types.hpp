#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace grft {

/// Simulation and planning step [s]. Every trajectory and scenario frame uses it.
inline constexpr double kStepDt = 0.1;

/// Default planning horizon (8 s).
inline constexpr std::size_t kDefaultHorizon = 80;

/// Speed below which a waypoint's heading is carried forward instead of atan2(vy, vx).
inline constexpr double kHeadingSpeedFloor = 0.1;

using Vec2 = Eigen::Vector2d;

struct EgoState {
  double x = 0.0;        // [m]
  double y = 0.0;        // [m]
  double heading = 0.0;  // [rad], wrapped to (-pi, pi]
  double speed = 0.0;    // [m/s], non-negative
  double accel = 0.0;    // [m/s^2]
  double steer = 0.0;    // [rad]

  Vec2 position() const { return {x, y}; }
  bool operator==(const EgoState&) const = default;
};

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return {vx, vy}; }
  bool operator==(const Waypoint&) const = default;
};

/// Fixed-rate planned future. points[0] is one step (0.1 s) ahead of the state it was planned from.
struct Trajectory {
  std::vector<Waypoint> points;
  double dt = kStepDt;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Waypoint& operator[](std::size_t i) const { return points[i]; }
  Waypoint& operator[](std::size_t i) { return points[i]; }
  bool operator==(const Trajectory&) const = default;
};

/// Per-step unit tangents and left normals of a reference trajectory.
struct FrenetFrame {
  std::vector<Vec2> tangents;
  std::vector<Vec2> normals;
  bool degenerate = false;  // set when every point of the reference coincides

  std::size_t size() const { return tangents.size(); }
};

struct OrientedBox {
  Vec2 center = Vec2::Zero();
  double heading = 0.0;
  double length = 1.0;
  double width = 1.0;

  /// Corners in counter-clockwise order starting at front-left.
  std::vector<Vec2> corners() const;
  bool operator==(const OrientedBox&) const = default;
};

/// Frozen hand-crafted scene encoding: `scene` is a flat token matrix, `navi` the route summary.
struct SceneEmbedding {
  Eigen::VectorXd scene;
  Eigen::VectorXd navi;
};

}  // namespace grft
