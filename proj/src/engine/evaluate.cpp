#include "grft/engine/evaluate.hpp"

#include <chrono>
#include <stdexcept>

#include "grft/core/parallel.hpp"
#include "grft/core/rng.hpp"

namespace grft {

std::string scenario_name(const Scenario& s) {
  return std::string(to_string(s.kind)) + "-" + std::to_string(s.seed);
}

EpisodeRecord run_episode(const Planner& planner, const BundlePtr& bundle, std::uint64_t seed,
                          const EngineConfig& cfg, bool keep_trace) {
  EnvState env = env_reset(bundle, cfg);
  EpisodeRecord rec;
  rec.scenario = scenario_name(bundle->scenario);
  rec.seed = seed;
  if (keep_trace) rec.trace.push_back(env.ego);
  while (!env.is_done()) {
    const Trajectory local = planner.plan({*bundle, env.frame, env.ego, derive_seed(seed, env.frame)});
    const Trajectory world = trajectory_to_world(local, Pose2{env.ego.x, env.ego.y, env.ego.heading});
    env_step(env, world, cfg);
    if (keep_trace) rec.trace.push_back(env.ego);
  }
  const double window = static_cast<double>(cfg.end_frame - cfg.start_frame);
  rec.reward_sum = env.reward_sum;
  rec.steps = env.steps;
  rec.done = env.done;
  rec.score = 100.0 * env.reward_sum / window;
  const double n = std::max(1, env.steps);
  const auto& c = env.component_sums;
  rec.metric_means = {c.col / n, c.dac / n, c.wd / n, c.ttc / n, c.comfort / n, c.progress / n, c.speed / n};
  return rec;
}

EvalReport evaluate(const Planner& planner, const std::vector<BundlePtr>& bundles,
                    const std::vector<std::uint64_t>& seeds, const EngineConfig& cfg, int workers,
                    bool keep_traces) {
  EvalReport r;
  const std::size_t n = bundles.size() * seeds.size();
  r.episodes.resize(n);
  parallel_for(n, workers, [&](int, std::size_t i) {
    r.episodes[i] = run_episode(planner, bundles[i / seeds.size()], seeds[i % seeds.size()], cfg, keep_traces);
  });
  if (n == 0) return r;
  RewardComponents sum{0, 0, 0, 0, 0, 0, 0};
  for (const auto& e : r.episodes) {
    r.mean_score += e.score;
    r.mean_reward += e.reward_sum;
    r.collision_rate += e.done == DoneReason::kCollision ? 1.0 : 0.0;
    r.offroad_rate += e.done == DoneReason::kOffroad ? 1.0 : 0.0;
    sum.col += e.metric_means.col;
    sum.dac += e.metric_means.dac;
    sum.wd += e.metric_means.wd;
    sum.ttc += e.metric_means.ttc;
    sum.comfort += e.metric_means.comfort;
    sum.progress += e.metric_means.progress;
    sum.speed += e.metric_means.speed;
  }
  const double dn = static_cast<double>(n);
  r.mean_score /= dn;
  r.mean_reward /= dn;
  r.collision_rate /= dn;
  r.offroad_rate /= dn;
  r.metric_means = {sum.col / dn, sum.dac / dn, sum.wd / dn, sum.ttc / dn, sum.comfort / dn, sum.progress / dn,
                    sum.speed / dn};
  return r;
}

nlohmann::json to_json(const RewardComponents& c) {
  return {{"col", c.col},     {"dac", c.dac},         {"wd", c.wd},      {"ttc", c.ttc},
          {"comfort", c.comfort}, {"progress", c.progress}, {"speed", c.speed}};
}

nlohmann::json to_json(const EpisodeRecord& e) {
  return {{"scenario", e.scenario}, {"seed", e.seed},       {"score", e.score},
          {"reward_sum", e.reward_sum}, {"steps", e.steps}, {"done", std::string(to_string(e.done))},
          {"metrics", to_json(e.metric_means)}};
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json eps = nlohmann::json::array();
  for (const auto& e : r.episodes) eps.push_back(to_json(e));
  return {{"summary",
           {{"episodes", r.episodes.size()},
            {"mean_score", r.mean_score},
            {"mean_reward", r.mean_reward},
            {"collision_rate", r.collision_rate},
            {"offroad_rate", r.offroad_rate},
            {"metrics", to_json(r.metric_means)},
            {"note", "surrogate 0-100 score on synthetic scenarios; not comparable to public benchmark scores"}}},
          {"episodes", eps}};
}

std::vector<ThroughputRow> bench_throughput(const std::vector<int>& worker_counts,
                                            const std::vector<BundlePtr>& bundles, long steps_per_worker,
                                            const EngineConfig& cfg) {
  if (bundles.empty()) throw std::invalid_argument("bench_throughput: no scenarios");
  const ConstantVelocityPlanner planner;
  auto run = [&](int w, long steps) {
    parallel_for(static_cast<std::size_t>(w), w, [&](int, std::size_t i) {
      std::size_t next = i % bundles.size();
      EnvState env = env_reset(bundles[next], cfg);
      for (long k = 0; k < steps; ++k) {
        if (env.is_done()) {
          next = (next + 1) % bundles.size();
          env = env_reset(bundles[next], cfg);
        }
        const Trajectory local = planner.plan({*env.bundle, env.frame, env.ego, 0});
        env_step(env, trajectory_to_world(local, Pose2{env.ego.x, env.ego.y, env.ego.heading}), cfg);
      }
    });
  };
  run(1, std::min(steps_per_worker, 500L));  // warm caches and the allocator before timing
  std::vector<ThroughputRow> rows;
  for (int w : worker_counts) {
    const auto t0 = std::chrono::steady_clock::now();
    run(w, steps_per_worker);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const long steps = steps_per_worker * w;
    rows.push_back({w, steps, secs, static_cast<double>(steps) / secs});
  }
  return rows;
}

}  // namespace grft
