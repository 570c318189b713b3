#pragma once

#include <vector>

#include <Eigen/Core>

#include "grft/core/rng.hpp"
#include "grft/diffusion/denoiser.hpp"
#include "grft/diffusion/sampler.hpp"
#include "grft/diffusion/schedule.hpp"
#include "grft/nn/optim.hpp"

namespace grft {

struct GrpoConfig {
  int group_size = 8;
  double denoise_gamma = 0.8;
  double c_b = 0.4;
  int epochs = 1;
  int steps_per_epoch = 6;
  /// Weight of (1/S) sum_s KL(pi_theta || pi_ref) at the rollout chains' inputs; 0 disables.
  double kl_coef = 0.0;
  nn::AdamConfig adam{2.5e-4, 0.9, 0.999, 1e-8, 1.0, 0};
};

void validate(const GrpoConfig& cfg);

/// (R - mean) / (std + 1e-8), population std.
Eigen::VectorXd group_advantages(const std::vector<double>& rewards);

/// (1/S) sum_s gamma^{s-1} log N(x_{s-1}; mu_theta(x_s), sigma_s^2 I) per row (B x 1). Steps with
/// sigma_s = 0 (the final step when alpha_bar_0 = 1) are deterministic and contribute nothing.
/// Throws std::invalid_argument if the schedule has eta = 0.
nn::Tape::Var chain_log_likelihood(nn::Tape& tape, Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond,
                                   const std::vector<nn::Mat>& chain, double gamma);
/// Tape-free value of the same quantity.
Eigen::VectorXd chain_log_likelihood(const Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond,
                                     const std::vector<nn::Mat>& chain, double gamma);

struct GrpoLoss {
  nn::Tape::Var policy;  // -(1/G) sum_k A_k L_k, averaged over groups
  nn::Tape::Var bc;      // -(1/G) sum_k L~_k, averaged over groups (unweighted by c_b)
  nn::Tape::Var kl;      // (1/G) sum_k KL_k, averaged over groups; 0 without a reference
  nn::Tape::Var total;
};

/// bc_chains[i] holds reference chains for groups[i]; may be empty when c_b = 0.
GrpoLoss grpo_loss(nn::Tape& tape, Denoiser& den, const NoiseSchedule& sched,
                   const std::vector<const TrajectoryGroup*>& groups, const std::vector<std::vector<nn::Mat>>& bc_chains,
                   const GrpoConfig& cfg, const Denoiser* reference = nullptr);

struct GrpoStats {
  double policy_loss = 0.0;
  double bc_loss = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
  int updates = 0;
};

/// Regenerates BC chains under the frozen reference (eta = 1), then runs epochs x steps_per_epoch
/// Adam steps over a shuffled partition of the groups.
GrpoStats grpo_update(Denoiser& den, const Denoiser& reference, const NoiseSchedule& sched,
                      const std::vector<TrajectoryGroup>& groups, const GrpoConfig& cfg, nn::Adam& opt, Rng& rng);

}  // namespace grft
