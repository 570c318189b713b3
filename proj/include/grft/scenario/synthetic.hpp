#pragma once

#include <cstdint>

#include "grft/scenario/scenario.hpp"

namespace grft {

struct SyntheticConfig {
  double lane_width = 3.6;
  double cone_gap_width = 3.2;  // free space between the inner cone faces [m]
  double blocked_stop_probability = 0.25;  // expert brakes instead of changing lanes
};

/// Deterministic synthetic log-replay scenario. The expert ego follows lane centerlines
/// (or a smooth evasive offset around obstacles) at plausible speeds; agents replay
/// pre-scripted constant-speed motion.
Scenario generate_synthetic(std::uint64_t seed, ScenarioKind kind, const SyntheticConfig& cfg = {});

}  // namespace grft
