#pragma once

#include <vector>

#include "grft/core/rng.hpp"
#include "grft/core/types.hpp"
#include "grft/diffusion/denoiser.hpp"
#include "grft/diffusion/guidance.hpp"
#include "grft/diffusion/normalize.hpp"
#include "grft/diffusion/schedule.hpp"

namespace grft {

/// Coefficient on eps in the DDIM update: sqrt(1 - a_{s-1} - sigma^2). A negative radicand is clamped to
/// zero and reported through `clamped`.
double eps_coefficient(const NoiseSchedule& sched, int s, double sigma, bool* clamped = nullptr);

/// Deterministic part of the DDIM update (the Gaussian mean of x_{s-1}) for every row.
nn::Mat ddim_mean(const NoiseSchedule& sched, int s, const nn::Mat& x_s, const nn::Mat& x0_hat, double sigma);

/// One DDIM update with fresh noise z (rows of x_s shape). z may be empty when sigma = 0.
nn::Mat ddim_step(const NoiseSchedule& sched, int s, const nn::Mat& x_s, const nn::Mat& x0_hat, double sigma,
                  const nn::Mat& z, bool* clamped = nullptr);

/// Training-guidance inputs for a group: the reference plan (physical, ego frame) and one
/// pair of scales per row.
struct GuidanceSpec {
  Trajectory reference;
  std::vector<GuidanceScales> scales;
  GuidanceConfig config;
};

/// x0 <- x0 - guide_step * grad(Psi_lat + Psi_lon), with the gradient taken in physical
/// ego-frame units and mapped back through the per-channel scaling.
nn::Mat apply_guidance(const nn::Mat& x0_hat, const GuidanceSpec& g, const TrajectoryScaler& scaler);

struct SampleResult {
  std::vector<nn::Mat> chain;  // chain[s] = x_s, s = 0..S; every matrix is rows x traj_dim
  int clamped_steps = 0;       // reverse steps whose eps radicand was clamped
  const nn::Mat& x0() const { return chain.front(); }
};

/// Full S-step reverse process from x_S ~ N(0, I) (or the given x_init). Every row shares the
/// conditioning row cond (1 x cond_dim) unless cond has one row per sample.
SampleResult sample(const Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond, int rows, double eta,
                    Rng& rng, const GuidanceSpec* guidance = nullptr, const nn::Mat* x_init = nullptr);

/// Unguided deterministic (eta = 0) plan decoded to physical ego-frame units.
Trajectory reference_plan(const Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond, Rng& rng);

/// G guided samples around one reference plan, with the full chains kept for GRPO.
struct TrajectoryGroup {
  nn::Mat cond;                        // 1 x cond_dim
  Trajectory reference;                // physical, ego frame
  std::vector<GuidanceScales> scales;  // one per member
  std::vector<nn::Mat> chain;          // chain[s] is G x traj_dim
  std::vector<Trajectory> plans;       // decoded x_0 per member, physical, ego frame
  std::vector<double> rewards;         // filled by the caller

  int size() const { return static_cast<int>(scales.size()); }
};

/// Guided group sampling for given scales: one noise draw per member, S guided reverse steps with
/// the schedule's eta.
TrajectoryGroup guided_sample_group(const Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond,
                                    const Trajectory& reference, const std::vector<GuidanceScales>& scales,
                                    const GuidanceConfig& gcfg, Rng& rng);

/// Log-density of x_{s-1} under N(mean_theta(x_s), sigma^2 I), summed over dimensions, per row.
Eigen::VectorXd step_log_prob(const nn::Mat& x_prev, const nn::Mat& mean, double sigma);

}  // namespace grft
