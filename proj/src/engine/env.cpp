#include "grft/engine/env.hpp"

#include <stdexcept>

namespace grft {

ScenarioBundle::ScenarioBundle(Scenario s, const FeatureConfig& fcfg)
    : scenario(std::move(s)), ctx(scenario), features(scenario, fcfg) {}

std::vector<BundlePtr> make_bundles(std::vector<Scenario> scenarios, const FeatureConfig& fcfg) {
  std::vector<BundlePtr> out;
  out.reserve(scenarios.size());
  for (auto& s : scenarios) out.push_back(std::make_shared<const ScenarioBundle>(std::move(s), fcfg));
  return out;
}

std::string_view to_string(DoneReason r) {
  switch (r) {
    case DoneReason::kNone: return "none";
    case DoneReason::kCollision: return "collision";
    case DoneReason::kOffroad: return "offroad";
    case DoneReason::kHorizon: return "horizon";
  }
  return "none";
}

EnvState env_reset(const BundlePtr& bundle, const EngineConfig& cfg) {
  const Scenario& s = bundle->scenario;
  if (cfg.start_frame >= cfg.end_frame || cfg.end_frame >= s.frame_count()) {
    throw std::out_of_range("env_reset: frame window outside the scenario");
  }
  EnvState env;
  env.bundle = bundle;
  env.frame = cfg.start_frame;
  env.end_frame = cfg.end_frame;
  env.ego = s.ego_log[cfg.start_frame];
  env.history = {env.ego};
  env.ego_start = bundle->ctx.route_arclength(env.ego.position());
  env.expert_start = bundle->ctx.expert_arclength(cfg.start_frame);
  return env;
}

StepOutcome env_step(EnvState& env, const Trajectory& world_plan, const EngineConfig& cfg) {
  if (env.is_done()) throw std::logic_error("env_step: episode already done");
  const auto track = lqr_track(env.ego, world_plan, cfg.lqr);
  env.ego = bicycle_step(env.ego, track.control, cfg.lqr.dt, cfg.lqr.vehicle);
  ++env.frame;
  ++env.steps;
  env.history.push_back(env.ego);
  const auto window = static_cast<std::size_t>(std::max(cfg.scorer.comfort_window, 1));
  if (env.history.size() > window) env.history.erase(env.history.begin());

  const auto& ctx = env.bundle->ctx;
  StepOutcome out;
  out.components = score_step(ctx, env.frame, env.ego, env.history, ctx.route_arclength(env.ego.position()) - env.ego_start,
                              ctx.expert_arclength(env.frame) - env.expert_start, env.wrong_way_steps, cfg.scorer);
  out.reward = aggregate_reward(out.components, cfg.scorer);
  auto& c = env.component_sums;
  c.col += out.components.col;
  c.dac += out.components.dac;
  c.wd += out.components.wd;
  c.ttc += out.components.ttc;
  c.comfort += out.components.comfort;
  c.progress += out.components.progress;
  c.speed += out.components.speed;
  env.reward_sum += out.reward;
  if (out.components.col == 0.0) {
    env.done = DoneReason::kCollision;
  } else if (out.components.dac == 0.0) {
    env.done = DoneReason::kOffroad;
  } else if (env.frame >= env.end_frame) {
    env.done = DoneReason::kHorizon;
  }
  return out;
}

}  // namespace grft
