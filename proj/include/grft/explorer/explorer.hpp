#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "grft/core/rng.hpp"
#include "grft/core/types.hpp"
#include "grft/diffusion/guidance.hpp"
#include "grft/nn/param_store.hpp"
#include "grft/nn/tape.hpp"

namespace grft {

struct ExplorerConfig {
  int ref_tokens = 10;  // reference plan subsampled to this many waypoints
  int embed = 32;
  int hidden = 64;
  int scene_tokens = 9;
  int token_width = 9;
  int navi_dim = 11;

  int scene_dim() const { return scene_tokens * token_width; }
};

/// Parameters of Beta(a_lat, b_lat) and Beta(a_lon, b_lon); all > 1.
struct BetaParams {
  double a_lat = 1.0, b_lat = 1.0, a_lon = 1.0, b_lon = 1.0;
};

struct PolicyOutput {
  BetaParams beta;
  double value = 0.0;
};

/// Batched policy inputs, one row per state.
struct PolicyBatch {
  nn::Mat scene;  // B x scene_dim
  nn::Mat navi;   // B x navi_dim
  nn::Mat ref;    // B x (ref_tokens * 4)

  Eigen::Index rows() const { return scene.rows(); }
};

/// Waypoints (k + 1) * H / tokens - 1 of an ego-frame plan as [x/40, y/8, vx/10, vy/3] tokens.
Eigen::RowVectorXd reference_tokens(const Trajectory& ref, int tokens);
PolicyBatch make_policy_batch(const std::vector<std::pair<SceneEmbedding, Trajectory>>& states,
                              const ExplorerConfig& cfg);

/// Exploration policy. The reference plan is embedded per token, passed through one token-mixing
/// and one channel-mixing residual block and pooled to a query; single-head attention reads the
/// scene tokens (absent objects masked); [query, attended, navi] feeds a tanh trunk with
/// zero-initialised Beta and value heads.
class Explorer {
 public:
  struct Heads {
    nn::Tape::Var a;      // B x 2 (lat, lon)
    nn::Tape::Var b;      // B x 2
    nn::Tape::Var value;  // B x 1
  };

  Explorer() = default;
  Explorer(const ExplorerConfig& cfg, Rng& rng);

  Heads forward(nn::Tape& tape, const PolicyBatch& batch);
  std::vector<PolicyOutput> evaluate(const PolicyBatch& batch) const;
  PolicyOutput evaluate(const SceneEmbedding& features, const Trajectory& ref) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const ExplorerConfig& config() const { return cfg_; }

  void save(const std::filesystem::path& path) const;
  static Explorer load(const std::filesystem::path& path);

 private:
  template <class Leaf>
  Heads build(nn::Tape& tape, const PolicyBatch& batch, Leaf leaf) const;

  ExplorerConfig cfg_;
  nn::ParamStore params_;
};

struct ScaleSample {
  GuidanceScales scales;
  double log_prob = 0.0;
};

/// Beta log-density at u in (0, 1).
double beta_log_density(double a, double b, double u);
double beta_entropy(double a, double b);

/// u ~ Beta per dimension, eta = 2u - 1; log_prob is the density of eta (sum over both dimensions).
ScaleSample sample_scales(const BetaParams& beta, Rng& rng);

struct LogProbEntropy {
  double log_prob = 0.0;
  double entropy = 0.0;
};
/// Scales are clamped to +-(1 - 1e-9) first.
LogProbEntropy log_prob_and_entropy(const BetaParams& beta, const GuidanceScales& scales);

/// Tape versions over a batch: eta is B x 2 (lat, lon). Both return B x 1.
nn::Tape::Var scale_log_prob(nn::Tape& tape, nn::Tape::Var a, nn::Tape::Var b, const nn::Mat& eta);
nn::Tape::Var scale_entropy(nn::Tape& tape, nn::Tape::Var a, nn::Tape::Var b);

}  // namespace grft
