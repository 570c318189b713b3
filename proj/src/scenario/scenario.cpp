#include "grft/scenario/scenario.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace grft {

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kStraight: return "straight";
    case ScenarioKind::kCurve: return "curve";
    case ScenarioKind::kIntersection: return "intersection";
    case ScenarioKind::kBlockedLane: return "blocked_lane";
    case ScenarioKind::kConeGap: return "cone_gap";
  }
  return "unknown";
}

std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) {
  for (auto k : {ScenarioKind::kStraight, ScenarioKind::kCurve, ScenarioKind::kIntersection,
                 ScenarioKind::kBlockedLane, ScenarioKind::kConeGap}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(DifficultyTier tier) {
  switch (tier) {
    case DifficultyTier::kUntagged: return "untagged";
    case DifficultyTier::kFail: return "fail";
    case DifficultyTier::kLt90: return "lt90";
    case DifficultyTier::kEasy: return "easy";
  }
  return "unknown";
}

OrientedBox AgentTrack::box_at(std::size_t frame) const {
  const AgentPose& p = poses.at(frame);
  return OrientedBox{Vec2(p.x, p.y), p.heading, length, width};
}

const MapLane* Scenario::find_lane(std::uint32_t id) const {
  for (const auto& lane : lanes) {
    if (lane.id == id) return &lane;
  }
  return nullptr;
}

namespace {

// Centerline endpoints sit on the polygon's end caps; the closed polygon counts as inside.
bool near_boundary(const Vec2& p, const Polygon& poly) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Polyline edge = {poly[i], poly[(i + 1) % poly.size()]};
    if ((edge[1] - edge[0]).norm() > 0 && project_onto_polyline(p, edge).distance < 1e-6) return true;
  }
  return false;
}

}  // namespace

void validate_scenario(const Scenario& s) {
  if (s.ego_log.size() != kFrameCount) throw std::invalid_argument("scenario: frame count != 171");
  if (s.dt != kStepDt) throw std::invalid_argument("scenario: frame spacing != 0.1 s");
  const Vec2 ego = s.ego_log[kCurrentFrame].position();
  for (const auto& e : s.ego_log) {
    if (e.speed < 0.0) throw std::invalid_argument("scenario: negative ego speed");
  }
  for (const auto& lane : s.lanes) {
    if (lane.centerline.size() < 2) throw std::invalid_argument("scenario: lane with < 2 points");
    if (lane.direction_hint.size() != lane.centerline.size()) {
      throw std::invalid_argument("scenario: direction hint count mismatch");
    }
    if (!polygon_is_simple(lane.polygon)) throw std::invalid_argument("scenario: lane polygon not simple");
    for (const auto& c : lane.centerline) {
      if (!point_in_polygon(c, lane.polygon) && !near_boundary(c, lane.polygon)) {
        throw std::invalid_argument("scenario: centerline outside lane polygon");
      }
    }
    if (project_onto_polyline(ego, lane.centerline).distance > s.crop_radius) {
      throw std::invalid_argument("scenario: lane outside crop radius");
    }
  }
  for (const auto& st : s.statics) {
    if (!(st.length > 0 && st.width > 0)) throw std::invalid_argument("scenario: degenerate static");
    if ((st.center - ego).norm() > s.crop_radius) {
      throw std::invalid_argument("scenario: static outside crop radius");
    }
  }
  for (const auto& a : s.agents) {
    if (a.poses.size() != s.ego_log.size()) throw std::invalid_argument("scenario: agent pose count");
    // Invalid frames only as a contiguous prefix and/or suffix.
    std::size_t first = a.poses.size(), last = 0;
    for (std::size_t i = 0; i < a.poses.size(); ++i) {
      if (a.poses[i].valid) {
        first = std::min(first, i);
        last = i;
      }
    }
    for (std::size_t i = first; i <= last && first < a.poses.size(); ++i) {
      if (!a.poses[i].valid) throw std::invalid_argument("scenario: agent validity has holes");
    }
  }
  for (auto id : s.route) {
    if (!s.find_lane(id)) throw std::invalid_argument("scenario: route references unknown lane");
  }
}

std::vector<Polygon> drivable_polygons(const Scenario& s) {
  std::vector<Polygon> out;
  out.reserve(s.lanes.size());
  for (const auto& lane : s.lanes) out.push_back(lane.polygon);
  return out;
}

bool point_drivable(const Vec2& p, const std::vector<Polygon>& drivable) {
  for (const auto& poly : drivable) {
    if (point_in_polygon(p, poly)) return true;
  }
  return false;
}

Polyline route_polyline(const Scenario& s) {
  Polyline out;
  for (auto id : s.route) {
    const MapLane* lane = s.find_lane(id);
    if (!lane) continue;
    for (const auto& p : lane->centerline) {
      if (out.empty() || (out.back() - p).norm() > 1e-6) out.push_back(p);
    }
  }
  return out;
}

const MapLane* nearest_lane(const Scenario& s, const Vec2& p, PolylineProjection* proj) {
  const MapLane* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& lane : s.lanes) {
    const auto pr = project_onto_polyline(p, lane.centerline);
    if (pr.distance < best_d) {
      best_d = pr.distance;
      best = &lane;
      if (proj) *proj = pr;
    }
  }
  return best;
}

}  // namespace grft
