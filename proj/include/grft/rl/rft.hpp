#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "json.hpp"

#include "grft/diffusion/denoiser.hpp"
#include "grft/diffusion/guidance.hpp"
#include "grft/diffusion/schedule.hpp"
#include "grft/engine/env.hpp"
#include "grft/explorer/explorer.hpp"
#include "grft/rl/grpo.hpp"
#include "grft/rl/ppo.hpp"

namespace grft {

struct RftConfig {
  PpoConfig ppo;
  GrpoConfig grpo;
  GuidanceConfig guidance;
  ScheduleConfig schedule;  // eta_ddim 1 for training chains
  EngineConfig engine;      // episodes stop early enough for the T_r scoring window
  int iterations = 200;     // sets the cosine-decay length of both optimizers
  int workers = 1;
  std::uint64_t seed = 0;
  int diversity_groups = 8;  // groups per iteration scored for diversity
  bool train_explorer = true;
  bool train_denoiser = true;

  RftConfig() { engine.end_frame = 130; }
};

struct IterationMetrics {
  int iteration = 0;
  long env_steps = 0;  // cumulative
  double step_reward_mean = 0.0;
  double group_reward_mean = 0.0;
  double group_reward_std = 0.0;
  int episodes = 0;  // finished this iteration
  double episode_reward_mean = 0.0;
  double collision_rate = 0.0;
  double offroad_rate = 0.0;
  double eta_lat_mean = 0.0;
  double eta_lon_mean = 0.0;
  double diversity = 0.0;
  int faults = 0;
  PpoStats ppo;
  GrpoStats grpo;
  double seconds = 0.0;
};

nlohmann::json to_json(const IterationMetrics& m);

/// Dual-branch fine-tuning. Rollouts run `ppo.envs` environments in parallel on `workers`
/// threads against read-only snapshots of the denoiser and explorer; each env owns its state and
/// random stream, so results depend only on the master seed. Updates run on the calling thread.
class RftTrainer {
 public:
  RftTrainer(const Denoiser& pretrained, const Explorer& explorer, std::vector<BundlePtr> bundles, RftConfig cfg);

  IterationMetrics iterate();

  const Denoiser& denoiser() const { return *policy_; }
  const Denoiser& reference() const { return *reference_; }
  const Explorer& explorer() const { return explorer_; }
  const RftConfig& config() const { return cfg_; }
  int iteration() const { return iteration_; }

 private:
  struct EnvSlot {
    EnvState state;
    Rng rng;
  };
  struct Rollout;

  void reset_env(EnvSlot& slot) const;
  Rollout rollout(EnvSlot& slot) const;

  RftConfig cfg_;
  NoiseSchedule sched_;
  std::shared_ptr<Denoiser> policy_;
  std::shared_ptr<const Denoiser> reference_;
  Explorer explorer_;
  std::vector<BundlePtr> bundles_;
  std::vector<EnvSlot> envs_;
  nn::Adam ppo_opt_;
  nn::Adam grpo_opt_;
  Rng update_rng_;
  int iteration_ = 0;
  long env_steps_ = 0;
};

}  // namespace grft
