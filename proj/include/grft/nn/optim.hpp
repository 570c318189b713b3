#pragma once

#include <vector>

#include "grft/nn/param_store.hpp"

namespace grft::nn {

struct AdamConfig {
  double lr = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  long total_steps = 0;        // cosine decay to 0 over this many steps; 0 keeps lr constant
};

struct StepStats {
  double grad_norm = 0.0;  // before clipping
  double lr = 0.0;
  bool skipped = false;  // non-finite gradient
};

/// Scales all gradients so their global norm is at most max_norm; returns the norm before scaling.
double clip_grad_norm(ParamStore& store, double max_norm);

class Adam {
 public:
  Adam() = default;
  Adam(const ParamStore& store, AdamConfig cfg);

  /// Learning rate at step index t (0-based): lr * 0.5 * (1 + cos(pi * t / total_steps)).
  double learning_rate(long t) const;

  /// Global-norm clipping, then one Adam update with the scheduled learning rate. Non-finite
  /// gradients skip the update entirely. An all-zero gradient decays the moments and leaves
  /// the parameters untouched.
  StepStats step(ParamStore& store);

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  long t_ = 0;
};

}  // namespace grft::nn
