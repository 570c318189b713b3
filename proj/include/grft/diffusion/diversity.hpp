#pragma once

#include <cstdint>
#include <vector>

#include "grft/core/types.hpp"

namespace grft {

struct FootprintConfig {
  double cell = 0.25;  // [m]
  double length = 4.6;
  double width = 2.0;
};

/// Sorted unique grid cells whose centres lie inside any footprint box along the trajectory.
/// Box headings come from the velocity channels (trajectory_headings with initial heading 0).
std::vector<std::int64_t> footprint_cells(const Trajectory& t, const FootprintConfig& cfg = {});

double footprint_iou(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);

/// 1 - mean pairwise IoU of the swept footprints; 0 for fewer than two trajectories.
double diversity_score(const std::vector<Trajectory>& group, const FootprintConfig& cfg = {});

}  // namespace grft
