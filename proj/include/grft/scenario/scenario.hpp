#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grft/core/geometry.hpp"
#include "grft/core/types.hpp"

namespace grft {

inline constexpr std::size_t kPastFrames = 20;
inline constexpr std::size_t kFutureFrames = 150;
inline constexpr std::size_t kFrameCount = kPastFrames + 1 + kFutureFrames;  // 171
inline constexpr std::size_t kCurrentFrame = kPastFrames;                   // 20
inline constexpr double kCropRadius = 200.0;

enum class AgentKind : std::uint8_t { kVehicle = 0, kPedestrian = 1, kCyclist = 2 };

enum class ScenarioKind : std::uint8_t {
  kStraight = 0,
  kCurve = 1,
  kIntersection = 2,
  kBlockedLane = 3,
  kConeGap = 4,
};

/// Fine-tuning data tiers: baseline collisions, baseline score below 90, everything else.
enum class DifficultyTier : std::uint8_t { kUntagged = 0, kFail = 1, kLt90 = 2, kEasy = 3 };

std::string_view to_string(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario_kind(std::string_view name);
std::string_view to_string(DifficultyTier tier);

struct AgentPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  bool valid = false;

  bool operator==(const AgentPose&) const = default;
};

struct AgentTrack {
  std::uint32_t id = 0;
  AgentKind kind = AgentKind::kVehicle;
  double length = 4.5;
  double width = 1.9;
  std::vector<AgentPose> poses;  // one per frame

  OrientedBox box_at(std::size_t frame) const;
  bool operator==(const AgentTrack&) const = default;
};

struct MapLane {
  std::uint32_t id = 0;
  Polyline centerline;
  Polygon polygon;
  std::vector<Vec2> direction_hint;  // unit tangent per centerline point
  double speed_limit = 15.0;

  bool operator==(const MapLane&) const = default;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::kStraight;
  std::uint64_t seed = 0;
  DifficultyTier tier = DifficultyTier::kUntagged;
  double dt = kStepDt;
  double crop_radius = kCropRadius;
  std::vector<EgoState> ego_log;  // one per frame
  std::vector<AgentTrack> agents;
  std::vector<OrientedBox> statics;
  std::vector<MapLane> lanes;
  std::vector<std::uint32_t> route;

  std::size_t frame_count() const { return ego_log.size(); }
  const MapLane* find_lane(std::uint32_t id) const;
  bool operator==(const Scenario&) const = default;
};

/// Throws std::invalid_argument naming the first violated invariant.
void validate_scenario(const Scenario& s);

/// Lane polygons; a point is drivable when it lies in any of them.
std::vector<Polygon> drivable_polygons(const Scenario& s);

bool point_drivable(const Vec2& p, const std::vector<Polygon>& drivable);

/// Concatenated centerlines of the route lanes (consecutive duplicates removed).
Polyline route_polyline(const Scenario& s);

/// Lane whose centerline is nearest to p, or nullptr for an empty map.
const MapLane* nearest_lane(const Scenario& s, const Vec2& p, PolylineProjection* proj = nullptr);

}  // namespace grft
