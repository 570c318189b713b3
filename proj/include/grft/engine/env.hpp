#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "grft/diffusion/features.hpp"
#include "grft/dynamics/dynamics.hpp"
#include "grft/scenario/scenario.hpp"
#include "grft/scorer/scorer.hpp"

namespace grft {

/// A scenario with its read-only lookup structures. Shared across workers.
struct ScenarioBundle {
  ScenarioBundle(Scenario s, const FeatureConfig& fcfg);
  ScenarioBundle(const ScenarioBundle&) = delete;
  ScenarioBundle& operator=(const ScenarioBundle&) = delete;

  Scenario scenario;
  ScoringContext ctx;
  FeatureExtractor features;
};

using BundlePtr = std::shared_ptr<const ScenarioBundle>;

std::vector<BundlePtr> make_bundles(std::vector<Scenario> scenarios, const FeatureConfig& fcfg = {});

enum class DoneReason { kNone, kCollision, kOffroad, kHorizon };
std::string_view to_string(DoneReason r);

struct EngineConfig {
  ScorerConfig scorer;
  LqrConfig lqr;
  std::size_t start_frame = kCurrentFrame;
  std::size_t end_frame = kFrameCount - 1;  // horizon reached when frame == end_frame
};

struct EnvState {
  BundlePtr bundle;
  std::size_t frame = 0;
  std::size_t end_frame = 0;
  EgoState ego;
  std::vector<EgoState> history;  // last comfort_window states, newest last
  double ego_start = 0.0;         // route arclength at reset
  double expert_start = 0.0;
  int wrong_way_steps = 0;
  int steps = 0;
  double reward_sum = 0.0;
  RewardComponents component_sums{0, 0, 0, 0, 0, 0, 0};
  DoneReason done = DoneReason::kNone;

  bool is_done() const { return done != DoneReason::kNone; }
  const Scenario& scenario() const { return bundle->scenario; }
};

/// Ego placed on the logged state at cfg.start_frame.
EnvState env_reset(const BundlePtr& bundle, const EngineConfig& cfg);

struct StepOutcome {
  double reward = 0.0;
  RewardComponents components;
};

/// Tracks the world-frame plan for one 0.1 s step (LQR + bicycle), advances the log replay and
/// scores the new state. Collision or off-road ends the episode with reward 0. Throws
/// std::logic_error on a done env.
StepOutcome env_step(EnvState& env, const Trajectory& world_plan, const EngineConfig& cfg);

}  // namespace grft
