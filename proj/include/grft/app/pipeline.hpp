#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grft/app/config.hpp"
#include "grft/engine/evaluate.hpp"
#include "grft/rl/rft.hpp"

namespace grft {

std::vector<Scenario> generate_set(const ScenarioSetConfig& set, const SyntheticConfig& synth);

/// Scenarios from a directory of .nmx files when given, else the synthetic set.
std::vector<Scenario> load_or_generate(const std::optional<std::filesystem::path>& dir, const ScenarioSetConfig& set,
                                       const SyntheticConfig& synth);

/// Tags each scenario from its first episode in `report` (scenario-major, one or more seeds):
/// collision -> fail, score < 90 -> lt90, otherwise easy.
void tag_tiers(std::vector<Scenario>& scenarios, const EvalReport& report, std::size_t seeds_per_scenario);

/// "fail": fail only; "lt90": fail and lt90; "all": everything. Throws on other names.
std::vector<Scenario> select_tier(const std::vector<Scenario>& tagged, const std::string& tier);

struct PretrainResult {
  Denoiser denoiser;
  std::vector<PretrainLog> logs;
  GuidanceResponse response;  // measured on straight roads after training
  double seconds = 0.0;
};

PretrainResult run_pretrain(const AppConfig& cfg, const std::vector<Scenario>& scenarios,
                            const std::function<void(const PretrainLog&)>& on_epoch = {});

/// Straight-road scenarios used for the guidance calibration factor.
std::vector<Scenario> calibration_scenarios(std::uint64_t seed);

EvalReport evaluate_denoiser(const AppConfig& cfg, const Denoiser& den, const std::vector<BundlePtr>& bundles);

struct RftRunResult {
  std::optional<EvalReport> before;
  std::optional<EvalReport> after;
  std::vector<IterationMetrics> metrics;
  Denoiser denoiser;
  Explorer explorer;
  double seconds = 0.0;
};

struct RftRunHooks {
  std::function<void(const IterationMetrics&)> on_iteration;
  std::function<void(const RftTrainer&)> on_checkpoint;  // every rft.checkpoint_every iterations
};

/// Fine-tunes `pretrained` on `train` and evaluates on `eval` (unguided, eta 0) before and after
/// when `eval` is non-empty. The explorer is freshly initialised from cfg.seed unless given.
RftRunResult run_rft(const AppConfig& cfg, const Denoiser& pretrained, const std::vector<Scenario>& train,
                     const std::vector<BundlePtr>& eval, const std::optional<Explorer>& explorer = {},
                     const RftRunHooks& hooks = {});

struct AblationRow {
  std::string grid;
  nlohmann::json setting;
  std::vector<std::uint64_t> seeds;
  std::vector<double> score_after, collision_after, reward_after;
  double score_before = 0.0, collision_before = 0.0, reward_before = 0.0;

  double mean_score() const;
  double mean_collision() const;
  double mean_reward() const;
};

nlohmann::json to_json(const AblationRow& r);

/// Grids: "lambda" (lambda_lat x lambda_lon), "reward" (survival, terminal), "horizon"
/// (reward_horizons), "group" (group_sizes), "tier" (fail, lt90, all). Every setting runs
/// ablate.iterations fine-tuning iterations per seed on the rft scenarios and is evaluated on
/// `eval`. Throws std::invalid_argument for an unknown grid.
std::vector<AblationRow> run_ablation(const AppConfig& cfg, const std::string& grid, const Denoiser& pretrained,
                                      const std::vector<Scenario>& train, const std::vector<BundlePtr>& eval,
                                      const std::function<void(const AblationRow&)>& on_row = {});

}  // namespace grft
