#include "grft/core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace grft {

std::vector<Vec2> OrientedBox::corners() const {
  const Vec2 f(std::cos(heading), std::sin(heading));
  const Vec2 l(-f.y(), f.x());
  const Vec2 hf = 0.5 * length * f;
  const Vec2 hl = 0.5 * width * l;
  return {center + hf + hl, center - hf + hl, center - hf - hl, center + hf - hl};
}

double wrap_angle(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta, kTwoPi);  // (-2pi, 2pi)
  if (r <= -std::numbers::pi) {
    r += kTwoPi;
  } else if (r > std::numbers::pi) {
    r -= kTwoPi;
  }
  return r;
}

FrenetFrame frenet_frame(const Trajectory& reference) {
  const std::size_t n = reference.size();
  if (n < 2) {
    throw std::invalid_argument("frenet_frame: reference needs at least two points");
  }
  FrenetFrame frame;
  frame.tangents.resize(n);
  frame.normals.resize(n);

  std::vector<bool> valid(n, false);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec2 d = reference[i + 1].position() - reference[i].position();
    const double len = d.norm();
    if (len > 1e-9) {
      frame.tangents[i] = d / len;
      valid[i] = true;
    }
  }
  // Last step reuses the previous one.
  frame.tangents[n - 1] = frame.tangents[n - 2];
  valid[n - 1] = valid[n - 2];

  const auto first = std::find(valid.begin(), valid.end(), true);
  if (first == valid.end()) {
    frame.degenerate = true;
    std::fill(frame.tangents.begin(), frame.tangents.end(), Vec2::UnitX());
  } else {
    // Leading gaps take the first valid tangent; later gaps carry the previous one.
    const std::size_t k = static_cast<std::size_t>(first - valid.begin());
    for (std::size_t i = 0; i < k; ++i) frame.tangents[i] = frame.tangents[k];
    for (std::size_t i = k + 1; i < n; ++i) {
      if (!valid[i]) frame.tangents[i] = frame.tangents[i - 1];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& t = frame.tangents[i];
    frame.normals[i] = Vec2(-t.y(), t.x());
  }
  return frame;
}

std::vector<double> trajectory_headings(const Trajectory& traj, double initial_heading) {
  std::vector<double> out(traj.size());
  double prev = initial_heading;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& p = traj[i];
    if (std::hypot(p.vx, p.vy) > kHeadingSpeedFloor) {
      prev = std::atan2(p.vy, p.vx);
    }
    out[i] = prev;
  }
  return out;
}

Vec2 Pose2::to_world(const Vec2& local) const {
  return Vec2(x, y) + rotate_to_world(local);
}

Vec2 Pose2::to_local(const Vec2& world) const {
  return rotate_to_local(world - Vec2(x, y));
}

Vec2 Pose2::rotate_to_world(const Vec2& v) const {
  const double c = std::cos(heading), s = std::sin(heading);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

Vec2 Pose2::rotate_to_local(const Vec2& v) const {
  const double c = std::cos(heading), s = std::sin(heading);
  return {c * v.x() + s * v.y(), -s * v.x() + c * v.y()};
}

Trajectory trajectory_to_world(const Trajectory& local, const Pose2& pose) {
  Trajectory out;
  out.dt = local.dt;
  out.points.reserve(local.size());
  for (const auto& p : local.points) {
    const Vec2 q = pose.to_world(p.position());
    const Vec2 v = pose.rotate_to_world(p.velocity());
    out.points.push_back({q.x(), q.y(), v.x(), v.y()});
  }
  return out;
}

Trajectory trajectory_to_local(const Trajectory& world, const Pose2& pose) {
  Trajectory out;
  out.dt = world.dt;
  out.points.reserve(world.size());
  for (const auto& p : world.points) {
    const Vec2 q = pose.to_local(p.position());
    const Vec2 v = pose.rotate_to_local(p.velocity());
    out.points.push_back({q.x(), q.y(), v.x(), v.y()});
  }
  return out;
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross(b - a, c - a);
  // Relative tolerance: long collinear edges far from the origin carry rounding in the cross product.
  if (std::abs(v) <= 1e-10 * ((b - a).norm() * (c - a).norm() + 1e-12)) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) - 1e-12 <= p.x() && p.x() <= std::max(a.x(), b.x()) + 1e-12 &&
         std::min(a.y(), b.y()) - 1e-12 <= p.y() && p.y() <= std::max(a.y(), b.y()) + 1e-12;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

bool polygon_is_simple(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a1 = poly[i];
    const Vec2& a2 = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip the edge itself and its two neighbours.
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      const Vec2& b1 = poly[j];
      const Vec2& b2 = poly[(j + 1) % n];
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const Vec2 axes[4] = {
      {std::cos(a.heading), std::sin(a.heading)},
      {-std::sin(a.heading), std::cos(a.heading)},
      {std::cos(b.heading), std::sin(b.heading)},
      {-std::sin(b.heading), std::cos(b.heading)},
  };
  for (const Vec2& axis : axes) {
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (const Vec2& c : ca) {
      const double p = axis.dot(c);
      amin = std::min(amin, p);
      amax = std::max(amax, p);
    }
    for (const Vec2& c : cb) {
      const double p = axis.dot(c);
      bmin = std::min(bmin, p);
      bmax = std::max(bmax, p);
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

std::vector<double> polyline_arclengths(std::span<const Vec2> line) {
  std::vector<double> s(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) s[i] = s[i - 1] + (line[i] - line[i - 1]).norm();
  return s;
}

PolylineProjection project_onto_polyline(const Vec2& p, std::span<const Vec2> line) {
  if (line.size() < 2) throw std::invalid_argument("project_onto_polyline: need two points");
  PolylineProjection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec2 a = line[i];
    const Vec2 d = line[i + 1] - a;
    const double len2 = d.squaredNorm();
    const double len = std::sqrt(len2);
    double t = len2 > 0 ? (p - a).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 foot = a + t * d;
    const double d2 = (p - foot).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.segment = i;
      best.arclength = acc + t * len;
      best.tangent = len > 0 ? Vec2(d / len) : Vec2::UnitX();
      best.lateral = cross(best.tangent, p - a);
      best.distance = std::sqrt(d2);
    }
    acc += len;
  }
  return best;
}

Vec2 polyline_point_at(std::span<const Vec2> line, double s, Vec2* tangent) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec2 d = line[i + 1] - line[i];
    const double len = d.norm();
    const bool last = i + 2 == line.size();
    if (s <= acc + len || last) {
      const Vec2 t = len > 0 ? Vec2(d / len) : Vec2::UnitX();
      if (tangent) *tangent = t;
      const double u = std::clamp(s - acc, 0.0, len);
      return line[i] + u * t;
    }
    acc += len;
  }
  if (tangent) *tangent = Vec2::UnitX();
  return line.front();
}

}  // namespace grft

namespace grft {
namespace {

std::int64_t cell_key(std::int64_t ix, std::int64_t iy) { return (ix << 32) ^ (iy & 0xffffffffLL); }

}  // namespace

PolylineIndex::PolylineIndex(Polyline line, double cell) : line_(std::move(line)), cell_(cell) {
  if (line_.size() < 2) throw std::invalid_argument("PolylineIndex: need two points");
  cumulative_.assign(line_.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < line_.size(); ++i) {
    acc += (line_[i + 1] - line_[i]).norm();
    cumulative_[i + 1] = acc;
    const Vec2 lo = line_[i].cwiseMin(line_[i + 1]) / cell_;
    const Vec2 hi = line_[i].cwiseMax(line_[i + 1]) / cell_;
    for (auto ix = static_cast<std::int64_t>(std::floor(lo.x())); ix <= static_cast<std::int64_t>(std::floor(hi.x())); ++ix) {
      for (auto iy = static_cast<std::int64_t>(std::floor(lo.y())); iy <= static_cast<std::int64_t>(std::floor(hi.y())); ++iy) {
        buckets_[cell_key(ix, iy)].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }
}

PolylineProjection PolylineIndex::project(const Vec2& p) const {
  const auto cx = static_cast<std::int64_t>(std::floor(p.x() / cell_));
  const auto cy = static_cast<std::int64_t>(std::floor(p.y() / cell_));
  std::vector<std::uint32_t> cand;
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      auto it = buckets_.find(cell_key(cx + dx, cy + dy));
      if (it != buckets_.end()) cand.insert(cand.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  // Same arithmetic and tie-breaking as project_onto_polyline; the running arclength there is
  // the same left-to-right sum stored in cumulative_.
  PolylineProjection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::uint32_t i : cand) {
    const Vec2 a = line_[i];
    const Vec2 d = line_[i + 1] - a;
    const double len2 = d.squaredNorm();
    const double len = std::sqrt(len2);
    double t = len2 > 0 ? (p - a).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 foot = a + t * d;
    const double d2 = (p - foot).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.segment = i;
      best.arclength = cumulative_[i] + t * len;
      best.tangent = len > 0 ? Vec2(d / len) : Vec2::UnitX();
      best.lateral = cross(best.tangent, p - a);
      best.distance = std::sqrt(d2);
    }
  }
  if (best_d2 <= cell_ * cell_) return best;
  return project_onto_polyline(p, line_);
}

PolygonIndex::PolygonIndex(Polygon poly) : poly_(std::move(poly)) {
  if (poly_.empty()) {
    lo_ = Vec2::Zero();
    hi_ = -Vec2::Ones();
    return;
  }
  lo_ = hi_ = poly_.front();
  for (const auto& v : poly_) {
    lo_ = lo_.cwiseMin(v);
    hi_ = hi_.cwiseMax(v);
  }
  const auto nbands = static_cast<std::size_t>(std::floor(hi_.y() - lo_.y())) + 1;
  bands_.resize(nbands);
  const std::size_t n = poly_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double y0 = std::min(poly_[i].y(), poly_[j].y()) - lo_.y();
    const double y1 = std::max(poly_[i].y(), poly_[j].y()) - lo_.y();
    const auto b0 = static_cast<std::size_t>(std::floor(y0));
    const auto b1 = std::min(static_cast<std::size_t>(std::floor(y1)), nbands - 1);
    for (std::size_t b = b0; b <= b1; ++b) bands_[b].push_back(static_cast<std::uint32_t>(i));
  }
}

bool PolygonIndex::contains(const Vec2& p) const {
  if (p.x() < lo_.x() || p.y() < lo_.y() || p.x() > hi_.x() || p.y() > hi_.y()) return false;
  const auto b = std::min(static_cast<std::size_t>(std::floor(p.y() - lo_.y())), bands_.size() - 1);
  const std::size_t n = poly_.size();
  bool inside = false;
  for (std::uint32_t i : bands_[b]) {
    const Vec2& a = poly_[i];
    const Vec2& c = poly_[i == 0 ? n - 1 : i - 1];
    if ((a.y() > p.y()) != (c.y() > p.y())) {
      const double x_cross = (c.x() - a.x()) * (p.y() - a.y()) / (c.y() - a.y()) + a.x();
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

DrivableArea::DrivableArea(const std::vector<Polygon>& polys) {
  parts_.reserve(polys.size());
  for (const auto& p : polys) parts_.emplace_back(p);
}

bool DrivableArea::contains(const Vec2& p) const {
  for (const auto& part : parts_) {
    if (part.contains(p)) return true;
  }
  return false;
}

}  // namespace grft
