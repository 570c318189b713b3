#pragma once

#include <vector>

#include <Eigen/Core>

#include "grft/core/rng.hpp"
#include "grft/diffusion/guidance.hpp"
#include "grft/explorer/explorer.hpp"
#include "grft/nn/optim.hpp"

namespace grft {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double c_v = 0.5;
  double c_e = 0.01;
  int epochs = 4;
  int minibatch = 4096;
  int envs = 8;
  int steps_per_iter = 32;
  bool normalize_advantages = true;
  nn::AdamConfig adam{2.5e-4, 0.9, 0.999, 1e-8, 0.5, 0};
};

void validate(const PpoConfig& cfg);

/// One explorer decision: the state it saw, the scales it drew and what followed.
struct Transition {
  Eigen::RowVectorXd scene;
  Eigen::RowVectorXd navi;
  Eigen::RowVectorXd ref_tokens;
  GuidanceScales scales;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

struct GaeResult {
  Eigen::VectorXd advantages;  // normalised when requested
  Eigen::VectorXd targets;     // raw advantages + values
};

/// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t, A_t = delta_t + gamma lambda (1 - done_t) A_{t+1};
/// V_T = bootstrap. Throws std::invalid_argument on a length mismatch.
GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values, const std::vector<bool>& dones,
                      double bootstrap, double gamma, double lambda, bool normalize);

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  int dropped = 0;  // samples with a non-finite ratio
  int updates = 0;
};

PolicyBatch transition_batch(const std::vector<Transition>& batch, const std::vector<std::size_t>& rows);

struct PpoLoss {
  nn::Tape::Var policy;   // -mean min(r A, clip(r) A), gradient through the active branch
  nn::Tape::Var value;    // mean (V - target)^2
  nn::Tape::Var entropy;  // mean policy entropy
  nn::Tape::Var total;    // policy + c_v value - c_e entropy
  nn::Tape::Var ratio;    // B x 1
  double surrogate = 0.0;  // mean min(r A, clip(r) A)
  int clipped = 0;
};

PpoLoss ppo_loss(nn::Tape& tape, Explorer& explorer, const std::vector<Transition>& batch,
                 const std::vector<std::size_t>& rows, const Eigen::VectorXd& advantages,
                 const Eigen::VectorXd& targets, const PpoConfig& cfg);

/// Clipped surrogate + value + entropy over `epochs` shuffled passes. advantages/targets are
/// aligned with `batch`.
PpoStats ppo_update(Explorer& explorer, nn::Adam& opt, const std::vector<Transition>& batch,
                    const Eigen::VectorXd& advantages, const Eigen::VectorXd& targets, const PpoConfig& cfg,
                    Rng& rng);

}  // namespace grft
