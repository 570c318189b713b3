#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "grft/engine/env.hpp"
#include "grft/engine/planner.hpp"

namespace grft {

std::string scenario_name(const Scenario& s);

struct EpisodeRecord {
  std::string scenario;
  std::uint64_t seed = 0;
  double score = 0.0;  // 100 x mean step reward over the full window; steps after a terminal event count 0
  double reward_sum = 0.0;
  int steps = 0;
  DoneReason done = DoneReason::kNone;
  RewardComponents metric_means;  // over executed steps
  std::vector<EgoState> trace;    // executed states when requested
};

struct EvalReport {
  std::vector<EpisodeRecord> episodes;
  double mean_score = 0.0;
  double collision_rate = 0.0;
  double offroad_rate = 0.0;
  double mean_reward = 0.0;  // mean episode reward sum
  RewardComponents metric_means;
};

/// Runs one closed-loop episode.
EpisodeRecord run_episode(const Planner& planner, const BundlePtr& bundle, std::uint64_t seed,
                          const EngineConfig& cfg, bool keep_trace = false);

/// Every (scenario, seed) pair, scenario-major, spread over `workers` threads.
EvalReport evaluate(const Planner& planner, const std::vector<BundlePtr>& bundles,
                    const std::vector<std::uint64_t>& seeds, const EngineConfig& cfg, int workers = 1,
                    bool keep_traces = false);

nlohmann::json to_json(const EpisodeRecord& e);
nlohmann::json to_json(const RewardComponents& c);
/// {"summary": {...}, "episodes": [...]}. Scores are a surrogate scale, not comparable to
/// public benchmark numbers; the summary carries that note.
nlohmann::json to_json(const EvalReport& r);

struct ThroughputRow {
  int workers = 0;
  long steps = 0;
  double seconds = 0.0;
  double steps_per_second = 0.0;
};

/// Each worker steps its own env with the constant-velocity planner for steps_per_worker steps,
/// resetting on episode end.
std::vector<ThroughputRow> bench_throughput(const std::vector<int>& worker_counts,
                                            const std::vector<BundlePtr>& bundles, long steps_per_worker,
                                            const EngineConfig& cfg = {});

}  // namespace grft
