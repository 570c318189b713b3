#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "grft/diffusion/denoiser.hpp"
#include "grft/diffusion/features.hpp"
#include "grft/diffusion/guidance.hpp"
#include "grft/diffusion/pretrain.hpp"
#include "grft/diffusion/schedule.hpp"
#include "grft/engine/env.hpp"
#include "grft/explorer/explorer.hpp"
#include "grft/rl/rft.hpp"
#include "grft/scenario/synthetic.hpp"

namespace grft {

/// Synthetic set: scenario i of kinds[k] uses seed seed_base + 500 k + i.
struct ScenarioSetConfig {
  std::vector<std::string> kinds;
  int per_kind = 0;
  std::uint64_t seed_base = 0;
};

struct RftRunConfig {
  int iterations = 200;
  int envs = 8;
  int steps_per_iter = 8;
  int end_frame = 130;
  int diversity_groups = 8;
  int checkpoint_every = 50;
  bool train_explorer = true;
  bool train_denoiser = true;
  PpoConfig ppo;
  GrpoConfig grpo;
};

struct BenchConfig {
  std::vector<int> workers{1, 2, 4, 8};
  long steps_per_worker = 2000;
};

struct AblateConfig {
  int iterations = 40;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<double> lambda_lat{1.0, 2.5, 5.0};
  std::vector<double> lambda_lon{0.10, 0.25, 0.50};
  std::vector<int> group_sizes{4, 8, 16};
  std::vector<int> reward_horizons{20, 40, 60};
};

struct AppConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir = "runs/default";

  SyntheticConfig synthetic;
  ScenarioSetConfig train_set{{"straight", "curve", "intersection", "blocked_lane", "cone_gap"}, 100, 0};
  ScenarioSetConfig eval_set{{"blocked_lane", "cone_gap"}, 25, 9000};
  FeatureConfig features;
  DenoiserConfig denoiser;
  DatasetConfig dataset;
  PretrainConfig pretrain;
  ScheduleConfig schedule;
  GuidanceConfig guidance;
  ScorerConfig scorer;
  LqrConfig lqr;
  int eval_start_frame = static_cast<int>(kCurrentFrame);
  int eval_end_frame = static_cast<int>(kFrameCount - 1);
  std::vector<std::uint64_t> eval_seeds{1};
  ExplorerConfig explorer;
  RftRunConfig rft;
  BenchConfig bench;
  AblateConfig ablate;

  /// Derived sizes (scene/navi dims, horizon) filled in and ranges checked.
  void finalize();

  EngineConfig eval_engine() const;
  RftConfig rft_config() const;
};

/// Raised for malformed or unknown config entries.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const AppConfig& c);
/// Missing keys keep their defaults; unknown keys throw ConfigError naming the path.
AppConfig config_from_json(const nlohmann::json& j);
AppConfig load_config(const std::filesystem::path& path);

}  // namespace grft
