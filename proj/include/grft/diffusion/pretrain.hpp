#pragma once

#include <functional>
#include <vector>

#include "grft/diffusion/denoiser.hpp"
#include "grft/diffusion/features.hpp"
#include "grft/diffusion/guidance.hpp"
#include "grft/diffusion/normalize.hpp"
#include "grft/diffusion/schedule.hpp"
#include "grft/nn/optim.hpp"
#include "grft/scenario/scenario.hpp"

namespace grft {

/// 1 x (scene + navi) conditioning row.
nn::Mat conditioning_row(const SceneEmbedding& e);

/// Expert future (frames f+1..f+H) expressed in the frame of `current`, velocities from the
/// logged speed and heading.
Trajectory expert_future(const Scenario& s, std::size_t frame, const EgoState& current, int horizon);

struct DatasetConfig {
  int horizon = 80;
  int frames_per_scenario = 24;
  double perturb_prob = 0.7;
  double lateral_noise = 0.5;  // [m] std of the start offset
  double heading_noise = 0.06;
  double speed_noise = 0.1;  // relative
  double blend_time = 2.5;   // [s] the offset decays to zero over this span
  FeatureConfig features;
};

struct PretrainData {
  nn::Mat cond;    // N x cond_dim
  nn::Mat target;  // N x traj_dim, physical units (flatten_trajectory layout)
};

/// Frames drawn uniformly from [0, frame_count - 1 - horizon]. With probability perturb_prob the
/// start state is displaced and the target blends from the displaced pose back onto the expert
/// path, so the planner sees recovery examples.
PretrainData build_dataset(const std::vector<Scenario>& scenarios, const DatasetConfig& cfg, Rng& rng);

/// Mean squared error (per element) between D(x_s, s, c) and x0 with s uniform over the
/// schedule's inference steps and x_s = sqrt(a_s) x0 + sqrt(1 - a_s) eps. Records on the tape.
nn::Tape::Var pretrain_loss(nn::Tape& tape, Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond,
                            const nn::Mat& x0, Rng& rng);

struct PretrainConfig {
  int epochs = 40;
  int batch_size = 64;
  nn::AdamConfig adam{1e-3, 0.9, 0.999, 1e-8, 1.0, 0};
  bool fit_scaler = true;  // replace den's scaler with per-element statistics of the targets
};

struct PretrainLog {
  int epoch = 0;
  double loss = 0.0;
};

/// Minibatch Adam with cosine decay over all steps on targets encoded with den.scaler().
/// Returns the per-epoch mean loss.
std::vector<PretrainLog> pretrain(Denoiser& den, const NoiseSchedule& sched, const PretrainData& data,
                                  const PretrainConfig& cfg, Rng& rng,
                                  const std::function<void(const PretrainLog&)>& on_epoch = {});

/// Signed mean lateral offset (along the reference normals) of one plan from the reference.
double mean_lateral_offset(const Trajectory& plan, const Trajectory& reference);

struct GuidanceResponse {
  double offset_pos = 0.0;  // mean offset with eta_lat = +1
  double offset_neg = 0.0;  // mean offset with eta_lat = -1
  double calibration = 0.0;  // (offset_pos - offset_neg) / (2 lambda_lat)
};

/// Guided sampling with (+-1, 0) at the current frame of each scenario, eta_ddim = 0 noise-free
/// chains, offsets measured against the unguided reference.
GuidanceResponse measure_guidance_response(const Denoiser& den, const NoiseSchedule& sched,
                                           const std::vector<Scenario>& scenarios, const GuidanceConfig& gcfg,
                                           const FeatureConfig& fcfg, std::uint64_t seed);

}  // namespace grft
