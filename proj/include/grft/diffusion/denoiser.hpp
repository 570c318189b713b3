#pragma once

#include <filesystem>
#include <vector>

#include "grft/core/rng.hpp"
#include "grft/diffusion/normalize.hpp"
#include "grft/nn/param_store.hpp"
#include "grft/nn/tape.hpp"

namespace grft {

struct DenoiserConfig {
  int horizon = 80;
  int scene_dim = 81;
  int navi_dim = 11;
  int width = 256;
  int hidden_layers = 3;
  int time_dim = 16;
  /// x0 = sqrt(alpha_bar) * x_s + F(...) when set; by default the MLP outputs x0 directly.
  bool skip = false;
  /// Output head predicts this many coefficients per channel of a fixed orthonormal polynomial
  /// basis over the horizon; 0 predicts every waypoint value directly.
  int basis_size = 12;  // clamped to horizon; 0 = direct per-element output

  int traj_dim() const { return 4 * horizon; }
  int cond_dim() const { return scene_dim + navi_dim; }
};

/// Sinusoidal embedding of integer timesteps: [sin(t f_k), cos(t f_k)], f_k = 1000^(-k/(dim/2)).
nn::Mat time_embedding(const std::vector<int>& t, int dim);

/// traj_dim x (4 * basis_size) expansion: column c*K + j holds polynomial j of channel c sampled
/// on the waypoints and orthonormalised. Position polynomials have no constant term.
nn::Mat output_basis(int horizon, int basis_size);

/// MLP x0-predictor on [x_s, scene, navi, time embedding] with SiLU hidden layers.
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(const DenoiserConfig& cfg, Rng& rng);

  /// Inference path without a tape. x_s is B x traj_dim, cond B x cond_dim, one timestep and
  /// alpha_bar per row.
  nn::Mat predict(const nn::Mat& x_s, const nn::Mat& cond, const std::vector<int>& t,
                  const Eigen::VectorXd& alpha_bar) const;

  /// Same function recorded on a tape, with gradients flowing into params().
  nn::Tape::Var forward(nn::Tape& tape, nn::Tape::Var x_s, const nn::Mat& cond, const std::vector<int>& t,
                        const Eigen::VectorXd& alpha_bar);

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const DenoiserConfig& config() const { return cfg_; }
  const TrajectoryScaler& scaler() const { return scaler_; }
  void set_scaler(TrajectoryScaler s);

  /// Config travels in the checkpoint metadata.
  void save(const std::filesystem::path& path) const;
  static Denoiser load(const std::filesystem::path& path);

 private:
  DenoiserConfig cfg_;
  nn::ParamStore params_;
  nn::Mat basis_t_;  // (4K) x traj_dim, empty without a basis head
  TrajectoryScaler scaler_;

};

}  // namespace grft
