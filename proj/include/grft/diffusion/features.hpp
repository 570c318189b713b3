#pragma once

#include <Eigen/Core>

#include "grft/core/geometry.hpp"
#include "grft/core/types.hpp"
#include "grft/scenario/scenario.hpp"

namespace grft {

struct FeatureConfig {
  int max_objects = 8;
  double object_radius = 60.0;  // [m]
  double probe_range = 8.0;     // lateral free-space probe [m]
  double probe_step = 0.2;
};

inline constexpr int kTokenWidth = 9;
inline constexpr int kNaviDim = 11;

/// Per-scenario lookups for the hand-crafted encoder. The scene is (1 + max_objects) tokens of
/// width 9 in the ego frame:
///   ego token   [speed/10, accel/4, steer/0.6, limit/20, 0, 0, 0, 0, 1]
///   object token[x/50, y/10, cos dh, sin dh, vx/10, vy/10, length/5, width/5, 1]  (nearest first)
/// navi is [route lateral/4, heading error, (heading, lateral/8) of the route 10/30/60 m ahead,
/// free space left/8, right/8, limit/20].
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const Scenario& s, FeatureConfig cfg = {});

  SceneEmbedding extract(std::size_t frame, const EgoState& ego) const;

  int scene_dim() const { return (1 + cfg_.max_objects) * kTokenWidth; }
  static int navi_dim() { return kNaviDim; }
  const FeatureConfig& config() const { return cfg_; }

 private:
  const Scenario* s_;
  FeatureConfig cfg_;
  PolylineIndex route_;
  DrivableArea drivable_;
};

}  // namespace grft
