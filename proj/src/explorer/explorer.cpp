#include "grft/explorer/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/digamma.hpp>

#include "grft/nn/layers.hpp"

namespace grft {
namespace {

constexpr double kScaleClamp = 1.0 - 1e-9;

double to_unit(double eta) { return 0.5 * (std::clamp(eta, -kScaleClamp, kScaleClamp) + 1.0); }

// 1 at present tokens, 0 at padding (the last channel of every token is its presence flag).
nn::Mat attention_mask(const nn::Mat& scene, int tokens, int width) {
  nn::Mat m(scene.rows(), tokens);
  for (Eigen::Index r = 0; r < scene.rows(); ++r) {
    for (int k = 0; k < tokens; ++k) m(r, k) = scene(r, static_cast<Eigen::Index>(k) * width + width - 1) > 0.5 ? 0.0 : -1e9;
  }
  return m;
}

// (tokens * width) x tokens block matrix summing each token's channels.
nn::Mat token_sum_matrix(int tokens, int width) {
  nn::Mat s = nn::Mat::Zero(static_cast<Eigen::Index>(tokens) * width, tokens);
  for (int k = 0; k < tokens; ++k) s.block(static_cast<Eigen::Index>(k) * width, k, width, 1).setOnes();
  return s;
}

}  // namespace

Eigen::RowVectorXd reference_tokens(const Trajectory& ref, int tokens) {
  const int H = static_cast<int>(ref.size());
  if (tokens < 1 || H < tokens) throw std::invalid_argument("reference_tokens: plan shorter than token count");
  Eigen::RowVectorXd row(4 * tokens);
  for (int k = 0; k < tokens; ++k) {
    const auto& p = ref[static_cast<std::size_t>((k + 1) * H / tokens - 1)];
    row.segment(4 * k, 4) << p.x / 40.0, p.y / 8.0, p.vx / 10.0, p.vy / 3.0;
  }
  return row;
}

PolicyBatch make_policy_batch(const std::vector<std::pair<SceneEmbedding, Trajectory>>& states,
                              const ExplorerConfig& cfg) {
  const auto B = static_cast<Eigen::Index>(states.size());
  PolicyBatch out{nn::Mat(B, cfg.scene_dim()), nn::Mat(B, cfg.navi_dim), nn::Mat(B, 4 * cfg.ref_tokens)};
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto& [f, ref] = states[static_cast<std::size_t>(i)];
    if (f.scene.size() != cfg.scene_dim() || f.navi.size() != cfg.navi_dim) {
      throw std::invalid_argument("make_policy_batch: feature size mismatch");
    }
    out.scene.row(i) = f.scene.transpose();
    out.navi.row(i) = f.navi.transpose();
    out.ref.row(i) = reference_tokens(ref, cfg.ref_tokens);
  }
  return out;
}

Explorer::Explorer(const ExplorerConfig& cfg, Rng& rng) : cfg_(cfg) {
  const int E = cfg.embed;
  auto square = [&](const std::string& name, int rows, int cols, double gain) {
    const double limit = gain * std::sqrt(6.0 / (rows + cols));
    nn::Mat w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-limit, limit);
    params_.add(name, std::move(w));
  };
  square("exp.ref_embed", 4, E, 1.0);
  square("exp.token_mix", cfg.ref_tokens, cfg.ref_tokens, 0.5);
  square("exp.channel_mix", E, E, 0.5);
  square("exp.key", cfg.token_width, E, 1.0);
  square("exp.value", cfg.token_width, E, 1.0);
  nn::add_dense(params_, "exp.trunk", 2 * E + cfg.navi_dim, cfg.hidden, rng);
  nn::add_dense(params_, "exp.beta", cfg.hidden, 4, rng, /*zero_init=*/true);
  nn::add_dense(params_, "exp.v", cfg.hidden, 1, rng, /*zero_init=*/true);
}

template <class Leaf>
Explorer::Heads Explorer::build(nn::Tape& tape, const PolicyBatch& batch, Leaf leaf) const {
  const int T = cfg_.ref_tokens, E = cfg_.embed, N = cfg_.scene_tokens, W = cfg_.token_width;
  if (batch.scene.cols() != cfg_.scene_dim() || batch.navi.cols() != cfg_.navi_dim || batch.ref.cols() != 4 * T ||
      batch.navi.rows() != batch.rows() || batch.ref.rows() != batch.rows()) {
    throw std::invalid_argument("Explorer: batch shape mismatch");
  }
  auto dense = [&](const std::string& name, nn::Tape::Var x) {
    return tape.add_bias(tape.matmul(x, leaf(name + ".w")), leaf(name + ".b"));
  };

  // Reference encoder: token embedding, token mixing, channel mixing, mean pool.
  auto h = tape.silu(tape.mix(tape.constant(batch.ref), leaf("exp.ref_embed"), T, 4, 1));
  h = tape.add(h, tape.silu(tape.mix(h, leaf("exp.token_mix"), T, E, 0)));
  h = tape.add(h, tape.silu(tape.mix(h, leaf("exp.channel_mix"), T, E, 1)));
  const auto query = tape.mean_tokens(h, T, E);

  // Single-head cross-attention over scene tokens.
  const auto scene = tape.constant(batch.scene);
  const auto keys = tape.mix(scene, leaf("exp.key"), N, W, 1);
  const auto values = tape.mix(scene, leaf("exp.value"), N, W, 1);
  const nn::Mat sum_tokens = token_sum_matrix(N, E);
  std::vector<nn::Tape::Var> tiled(static_cast<std::size_t>(N), query);
  auto logits = tape.matmul(tape.mul(tape.concat_cols(tiled), keys), tape.constant(sum_tokens));
  logits = tape.add(tape.scale(logits, 1.0 / std::sqrt(static_cast<double>(E))),
                    tape.constant(attention_mask(batch.scene, N, W)));
  const auto weights = tape.row_softmax(logits);
  const auto spread = tape.matmul(weights, tape.constant(nn::Mat(sum_tokens.transpose())));
  const auto attended = tape.scale(tape.mean_tokens(tape.mul(spread, values), N, E), static_cast<double>(N));

  const auto trunk = tape.tanh(dense("exp.trunk", tape.concat_cols({query, attended, tape.constant(batch.navi)})));
  const auto z = tape.add_scalar(tape.softplus(dense("exp.beta", trunk)), 1.0);
  return {tape.slice_cols(z, 0, 2), tape.slice_cols(z, 2, 2), dense("exp.v", trunk)};
}

Explorer::Heads Explorer::forward(nn::Tape& tape, const PolicyBatch& batch) {
  return build(tape, batch, [&](const std::string& name) { return tape.param(params_, name); });
}

std::vector<PolicyOutput> Explorer::evaluate(const PolicyBatch& batch) const {
  nn::Tape tape;
  const Heads hd =
      build(tape, batch, [&](const std::string& name) { return tape.constant(params_.value(params_.index(name))); });
  const nn::Mat& a = tape.value(hd.a);
  const nn::Mat& b = tape.value(hd.b);
  const nn::Mat& v = tape.value(hd.value);
  std::vector<PolicyOutput> out(static_cast<std::size_t>(batch.rows()));
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = {{a(i, 0), b(i, 0), a(i, 1), b(i, 1)}, v(i, 0)};
  }
  return out;
}

PolicyOutput Explorer::evaluate(const SceneEmbedding& features, const Trajectory& ref) const {
  return evaluate(make_policy_batch({{features, ref}}, cfg_)).front();
}

void Explorer::save(const std::filesystem::path& path) const {
  nn::ParamStore copy = params_;
  auto& m = copy.metadata();
  m["explorer.ref_tokens"] = std::to_string(cfg_.ref_tokens);
  m["explorer.embed"] = std::to_string(cfg_.embed);
  m["explorer.hidden"] = std::to_string(cfg_.hidden);
  m["explorer.scene_tokens"] = std::to_string(cfg_.scene_tokens);
  m["explorer.token_width"] = std::to_string(cfg_.token_width);
  m["explorer.navi_dim"] = std::to_string(cfg_.navi_dim);
  copy.save(path);
}

Explorer Explorer::load(const std::filesystem::path& path) {
  Explorer e;
  e.params_ = nn::ParamStore::load(path);
  const auto& m = e.params_.metadata();
  auto get = [&](const char* key) {
    auto it = m.find(key);
    if (it == m.end()) throw std::runtime_error(path.string() + ": missing metadata " + key);
    return std::stoi(it->second);
  };
  e.cfg_.ref_tokens = get("explorer.ref_tokens");
  e.cfg_.embed = get("explorer.embed");
  e.cfg_.hidden = get("explorer.hidden");
  e.cfg_.scene_tokens = get("explorer.scene_tokens");
  e.cfg_.token_width = get("explorer.token_width");
  e.cfg_.navi_dim = get("explorer.navi_dim");
  return e;
}

double beta_log_density(double a, double b, double u) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u);
}

double beta_entropy(double a, double b) {
  using boost::math::digamma;
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) +
         (a + b - 2.0) * digamma(a + b);
}

LogProbEntropy log_prob_and_entropy(const BetaParams& p, const GuidanceScales& s) {
  const double log2 = std::numbers::ln2;
  return {beta_log_density(p.a_lat, p.b_lat, to_unit(s.eta_lat)) + beta_log_density(p.a_lon, p.b_lon, to_unit(s.eta_lon)) -
              2.0 * log2,
          beta_entropy(p.a_lat, p.b_lat) + beta_entropy(p.a_lon, p.b_lon) + 2.0 * log2};
}

ScaleSample sample_scales(const BetaParams& p, Rng& rng) {
  ScaleSample out;
  out.scales.eta_lat = 2.0 * rng.beta(p.a_lat, p.b_lat) - 1.0;
  out.scales.eta_lon = 2.0 * rng.beta(p.a_lon, p.b_lon) - 1.0;
  out.log_prob = log_prob_and_entropy(p, out.scales).log_prob;
  return out;
}

nn::Tape::Var scale_log_prob(nn::Tape& tape, nn::Tape::Var a, nn::Tape::Var b, const nn::Mat& eta) {
  const nn::Mat u = eta.unaryExpr([](double e) { return to_unit(e); });
  return tape.add_scalar(tape.row_sum(tape.beta_log_prob(a, b, u)), -2.0 * std::numbers::ln2);
}

nn::Tape::Var scale_entropy(nn::Tape& tape, nn::Tape::Var a, nn::Tape::Var b) {
  return tape.add_scalar(tape.row_sum(tape.beta_entropy(a, b)), 2.0 * std::numbers::ln2);
}

}  // namespace grft
