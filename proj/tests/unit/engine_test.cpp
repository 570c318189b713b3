#include "grft/engine/evaluate.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "grft/core/rng.hpp"
#include "grft/scenario/synthetic.hpp"

namespace grft {
namespace {

Scenario straight_road(double speed) {
  Scenario s;
  MapLane lane;
  lane.id = 1;
  lane.speed_limit = 15.0;
  for (int i = 0; i <= 400; ++i) {
    lane.centerline.push_back({-50.0 + i, 0.0});
    lane.direction_hint.push_back({1.0, 0.0});
  }
  lane.polygon = {{-50, -1.8}, {350, -1.8}, {350, 1.8}, {-50, 1.8}};
  s.lanes.push_back(lane);
  s.route = {1};
  s.ego_log.resize(kFrameCount);
  for (std::size_t i = 0; i < kFrameCount; ++i) {
    s.ego_log[i] = {speed * 0.1 * (static_cast<double>(i) - 20.0), 0.0, 0.0, speed, 0.0, 0.0};
  }
  return s;
}

BundlePtr single(Scenario s) { return make_bundles({std::move(s)}).front(); }

// Lane centerline at the current speed, in the world frame.
Trajectory centerline_plan(const EnvState& env) {
  Trajectory t;
  for (int k = 1; k <= 80; ++k) t.points.push_back({env.ego.x + env.ego.speed * 0.1 * k, 0.0, env.ego.speed, 0.0});
  return t;
}

TEST(EnvStep, CenterlineOnEmptyRoad) {
  const auto b = single(straight_road(10.0));
  const EngineConfig cfg;
  EnvState env = env_reset(b, cfg);
  for (int k = 0; k < 10; ++k) {
    const auto out = env_step(env, centerline_plan(env), cfg);
    EXPECT_EQ(out.reward, aggregate_reward(out.components, cfg.scorer));
    EXPECT_FALSE(out.components.terminal());
    EXPECT_GT(out.reward, 0.9);
    EXPECT_EQ(env.done, DoneReason::kNone);
  }
  EXPECT_EQ(env.frame, kCurrentFrame + 10);
}

TEST(EnvStep, StaticBoxContactStep) {
  // Ego moves 1 m per step from x = 0; its front bumper (half length 2.3) reaches the rear face
  // of a box placed 12.8 m ahead of the ego centre at step 11 (10.5 m of travel needed).
  Scenario s = straight_road(10.0);
  const double rear_face = 2.3 + 10.5;
  s.statics.push_back({{rear_face + 1.0, 0.0}, 0.0, 2.0, 1.0});
  const auto b = single(std::move(s));
  const EngineConfig cfg;
  EnvState env = env_reset(b, cfg);
  int contact = -1;
  for (int k = 1; k <= 20 && !env.is_done(); ++k) {
    const auto out = env_step(env, centerline_plan(env), cfg);
    if (env.is_done()) {
      contact = k;
      EXPECT_EQ(out.reward, 0.0);
    } else {
      EXPECT_GT(out.reward, 0.0);
    }
  }
  EXPECT_EQ(contact, 11);
  EXPECT_EQ(env.done, DoneReason::kCollision);
}

TEST(EnvStep, HorizonAndAbsorbingDone) {
  const auto b = single(straight_road(10.0));
  EngineConfig cfg;
  cfg.end_frame = kCurrentFrame + 5;
  EnvState env = env_reset(b, cfg);
  int steps = 0;
  while (!env.is_done()) {
    env_step(env, centerline_plan(env), cfg);
    ++steps;
  }
  EXPECT_EQ(steps, 5);
  EXPECT_EQ(env.done, DoneReason::kHorizon);
  const EnvState before = env;
  EXPECT_THROW(env_step(env, centerline_plan(env), cfg), std::logic_error);
  EXPECT_EQ(env.ego, before.ego);
  EXPECT_EQ(env.frame, before.frame);
  EXPECT_EQ(env.reward_sum, before.reward_sum);
}

TEST(EnvStep, ResetRejectsBadWindow) {
  const auto b = single(straight_road(10.0));
  EngineConfig cfg;
  cfg.end_frame = kFrameCount;
  EXPECT_THROW(env_reset(b, cfg), std::out_of_range);
}

TEST(EnvStep, ReplayIsBitwise) {
  const auto b = single(generate_synthetic(3, ScenarioKind::kCurve));
  const EngineConfig cfg;
  const ExpertPlanner expert;
  EnvState env = env_reset(b, cfg);
  std::vector<Trajectory> log;
  std::vector<EgoState> states;
  while (!env.is_done()) {
    const auto local = expert.plan({*b, env.frame, env.ego, 0});
    log.push_back(trajectory_to_world(local, Pose2{env.ego.x, env.ego.y, env.ego.heading}));
    env_step(env, log.back(), cfg);
    states.push_back(env.ego);
  }
  EnvState replay = env_reset(b, cfg);
  for (std::size_t i = 0; i < log.size(); ++i) {
    env_step(replay, log[i], cfg);
    ASSERT_EQ(replay.ego, states[i]) << i;
  }
  EXPECT_EQ(replay.reward_sum, env.reward_sum);
  EXPECT_EQ(replay.done, env.done);
}

TEST(EnvStep, RewardAccounting) {
  const auto b = single(generate_synthetic(5, ScenarioKind::kBlockedLane));
  const EngineConfig cfg;
  const ConstantVelocityPlanner cv;
  EnvState env = env_reset(b, cfg);
  double sum = 0.0;
  while (!env.is_done()) {
    const auto local = cv.plan({*b, env.frame, env.ego, 0});
    sum += env_step(env, trajectory_to_world(local, Pose2{env.ego.x, env.ego.y, env.ego.heading}), cfg).reward;
  }
  EXPECT_EQ(sum, env.reward_sum);
  const auto rec = run_episode(cv, b, 0, cfg);
  EXPECT_EQ(rec.reward_sum, env.reward_sum);
  EXPECT_EQ(rec.steps, env.steps);
  EXPECT_EQ(rec.score, 100.0 * env.reward_sum / 150.0);
}

std::vector<BundlePtr> synthetic_set(ScenarioKind kind, int n, std::uint64_t base) {
  std::vector<Scenario> v;
  for (int i = 0; i < n; ++i) v.push_back(generate_synthetic(base + static_cast<std::uint64_t>(i), kind));
  return make_bundles(std::move(v));
}

TEST(Evaluate, ExpertCeilingOnStraightRoads) {
  const auto set = synthetic_set(ScenarioKind::kStraight, 6, 100);
  const auto r = evaluate(ExpertPlanner{}, set, {0}, EngineConfig{});
  EXPECT_GE(r.mean_score, 95.0);
  EXPECT_EQ(r.collision_rate, 0.0);
  EXPECT_EQ(r.offroad_rate, 0.0);
}

TEST(Evaluate, AlwaysCollide) {
  const auto set = synthetic_set(ScenarioKind::kBlockedLane, 6, 200);
  const auto r = evaluate(AlwaysCollidePlanner{}, set, {0}, EngineConfig{});
  EXPECT_EQ(r.collision_rate, 1.0);
  for (const auto& e : r.episodes) {
    EXPECT_EQ(e.done, DoneReason::kCollision);
    // Steps after contact count 0: the score is bounded by the pre-contact share of the window.
    EXPECT_LE(e.score, 100.0 * (e.steps - 1) / 150.0 + 1e-12);
  }
}

TEST(Evaluate, DeterministicAcrossRunsAndWorkers) {
  const auto set = synthetic_set(ScenarioKind::kConeGap, 4, 300);
  const std::vector<std::uint64_t> seeds = {1, 2};
  const auto a = evaluate(ConstantVelocityPlanner{}, set, seeds, EngineConfig{}, 1);
  const auto b = evaluate(ConstantVelocityPlanner{}, set, seeds, EngineConfig{}, 1);
  const auto c = evaluate(ConstantVelocityPlanner{}, set, seeds, EngineConfig{}, 3);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(to_json(a).dump(), to_json(c).dump());
  ASSERT_EQ(a.episodes.size(), 8u);
  EXPECT_EQ(a.episodes[2].scenario, "cone_gap-301");
}

TEST(Bench, PositiveFiniteRate) {
  const auto set = synthetic_set(ScenarioKind::kStraight, 2, 400);
  const auto rows = bench_throughput({1, 2}, set, 50);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.steps, 50L * r.workers);
    EXPECT_GT(r.steps_per_second, 0.0);
    EXPECT_TRUE(std::isfinite(r.steps_per_second));
  }
}

}  // namespace
}  // namespace grft
