#pragma once

#include <vector>

namespace grft {

enum class TimestepSpacing { kLinear, kQuadratic };

struct ScheduleConfig {
  int steps = 5;            // S
  int train_steps = 1000;   // DDPM discretisation the inference steps are drawn from
  double beta_start = 1e-4;
  double beta_end = 0.02;
  TimestepSpacing spacing = TimestepSpacing::kQuadratic;
  double eta_ddim = 1.0;
  bool canonical_ddim_variance = false;
};

/// Linear-beta VP schedule subsampled to S inference steps. Index s runs 0..S with
/// alpha_bar(0) = 1 (clean data) and alpha_bar strictly decreasing in s.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(const ScheduleConfig& cfg = {});

  int steps() const { return cfg_.steps; }
  double alpha_bar(int s) const { return alpha_bar_.at(static_cast<std::size_t>(s)); }
  int timestep(int s) const { return timesteps_.at(static_cast<std::size_t>(s)); }
  double eta() const { return cfg_.eta_ddim; }
  const ScheduleConfig& config() const { return cfg_; }

  /// DDIM sigma as written in the eta form: eta * sqrt((1 - a_{s-1}) / (1 - a_s)); with canonical_ddim_variance the
  /// textbook eta * sqrt((1 - a_{s-1}) / (1 - a_s)) * sqrt(1 - a_s / a_{s-1}).
  double sigma(int s) const;
  /// Same with an explicit eta (used for chains sampled at a different stochasticity).
  double sigma(int s, double eta) const;

 private:
  ScheduleConfig cfg_;
  std::vector<int> timesteps_;      // timesteps_[0] = -1 marks clean data
  std::vector<double> alpha_bar_;
};

}  // namespace grft
