#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "grft/core/types.hpp"

namespace grft {

using Polygon = std::vector<Vec2>;
using Polyline = std::vector<Vec2>;

/// Maps theta to (-pi, pi].
double wrap_angle(double theta);

/// Tangent at step i points from point i to i+1 (the last step reuses the previous one);
/// the normal is the tangent rotated by +90 degrees. Coincident consecutive points carry the
/// last valid tangent forward; an all-coincident reference yields (1, 0) and sets `degenerate`.
/// Throws std::invalid_argument for fewer than two points.
FrenetFrame frenet_frame(const Trajectory& reference);

/// Per-step headings derived from the velocity channels. Below kHeadingSpeedFloor the previous
/// heading is carried; `initial_heading` seeds the carry for a slow first step.
std::vector<double> trajectory_headings(const Trajectory& traj, double initial_heading);

/// Rigid transform helpers between a pose-local frame (x forward, y left) and the world.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 to_world(const Vec2& local) const;
  Vec2 to_local(const Vec2& world) const;
  Vec2 rotate_to_world(const Vec2& v) const;
  Vec2 rotate_to_local(const Vec2& v) const;
};

Trajectory trajectory_to_world(const Trajectory& local, const Pose2& pose);
Trajectory trajectory_to_local(const Trajectory& world, const Pose2& pose);

/// Crossing-number point-in-polygon test. Boundary points follow the half-open rule.
bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly);

/// True when no two non-adjacent edges intersect.
bool polygon_is_simple(std::span<const Vec2> poly);

/// Separating-axis overlap test; touching boxes count as overlapping.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

struct PolylineProjection {
  double arclength = 0.0;  // along the polyline to the foot point
  double lateral = 0.0;    // signed, positive to the left
  double distance = 0.0;   // |lateral| unless the foot is clamped to an endpoint
  std::size_t segment = 0;
  Vec2 tangent = Vec2::UnitX();
};

/// Nearest-point projection onto a polyline with at least two points.
PolylineProjection project_onto_polyline(const Vec2& p, std::span<const Vec2> line);

/// Cumulative arclength per vertex.
std::vector<double> polyline_arclengths(std::span<const Vec2> line);

/// Point and unit tangent at arclength s (clamped to the polyline's extent).
Vec2 polyline_point_at(std::span<const Vec2> line, double s, Vec2* tangent = nullptr);

/// Bucketed nearest-point queries; results equal project_onto_polyline exactly.
class PolylineIndex {
 public:
  PolylineIndex() = default;
  explicit PolylineIndex(Polyline line, double cell = 5.0);

  PolylineProjection project(const Vec2& p) const;
  const Polyline& line() const { return line_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

 private:
  Polyline line_;
  std::vector<double> cumulative_;
  double cell_ = 5.0;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> buckets_;
};

/// Point-in-polygon with edges bucketed into 1 m horizontal bands; equals point_in_polygon exactly.
class PolygonIndex {
 public:
  explicit PolygonIndex(Polygon poly);

  bool contains(const Vec2& p) const;
  const Polygon& polygon() const { return poly_; }

 private:
  Polygon poly_;
  Vec2 lo_, hi_;
  std::vector<std::vector<std::uint32_t>> bands_;
};

/// Union of polygons.
class DrivableArea {
 public:
  DrivableArea() = default;
  explicit DrivableArea(const std::vector<Polygon>& polys);

  bool contains(const Vec2& p) const;

 private:
  std::vector<PolygonIndex> parts_;
};

}  // namespace grft
