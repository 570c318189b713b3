#include "grft/diffusion/denoiser.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <stdexcept>
#include <string>

#include "grft/nn/layers.hpp"

namespace grft {

nn::Mat time_embedding(const std::vector<int>& t, int dim) {
  const int half = dim / 2;
  nn::Mat out(static_cast<Eigen::Index>(t.size()), dim);
  for (std::size_t r = 0; r < t.size(); ++r) {
    for (int k = 0; k < half; ++k) {
      const double f = std::pow(1000.0, -static_cast<double>(k) / half);
      out(static_cast<Eigen::Index>(r), k) = std::sin(t[r] * f);
      out(static_cast<Eigen::Index>(r), half + k) = std::cos(t[r] * f);
    }
  }
  return out;
}

nn::Mat output_basis(int horizon, int basis_size) {
  if (basis_size < 1 || basis_size > horizon) throw std::invalid_argument("output_basis: bad size");
  // Position channels use t, t^2, ... (zero at the ego), velocity channels 1, t, ...
  auto orthonormal = [&](int first_power) {
    Eigen::MatrixXd mono(horizon, basis_size);
    for (int k = 0; k < horizon; ++k) {
      const double t = static_cast<double>(k + 1) / horizon;
      for (int j = 0; j < basis_size; ++j) mono(k, j) = std::pow(t, first_power + j);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(mono);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(horizon, basis_size));
  };
  const Eigen::MatrixXd qp = orthonormal(1);
  const Eigen::MatrixXd qv = orthonormal(0);
  nn::Mat out = nn::Mat::Zero(4 * horizon, 4 * basis_size);
  for (int c = 0; c < 4; ++c) {
    const Eigen::MatrixXd& q = c < 2 ? qp : qv;
    for (int k = 0; k < horizon; ++k)
      for (int j = 0; j < basis_size; ++j) out(4 * k + c, c * basis_size + j) = q(k, j);
  }
  return out;
}

namespace {

std::string layer_name(int i) { return "den.h" + std::to_string(i); }

void check_inputs(const DenoiserConfig& cfg, const nn::Mat& cond, const std::vector<int>& t,
                  const Eigen::VectorXd& ab, Eigen::Index rows, Eigen::Index x_cols) {
  if (x_cols != cfg.traj_dim() || cond.cols() != cfg.cond_dim() || cond.rows() != rows ||
      static_cast<Eigen::Index>(t.size()) != rows || ab.size() != rows) {
    throw std::invalid_argument("Denoiser: input shape mismatch");
  }
}

}  // namespace

void Denoiser::set_scaler(TrajectoryScaler s) {
  if (s.size() != cfg_.traj_dim()) throw std::invalid_argument("Denoiser: scaler size mismatch");
  scaler_ = std::move(s);
}

Denoiser::Denoiser(const DenoiserConfig& cfg, Rng& rng)
    : cfg_(cfg), scaler_(TrajectoryScaler::channels(cfg.horizon)) {
  cfg_.basis_size = std::min(cfg_.basis_size, cfg_.horizon);
  int in = cfg.traj_dim() + cfg.cond_dim() + cfg.time_dim;
  for (int i = 0; i < cfg.hidden_layers; ++i) {
    nn::add_dense(params_, layer_name(i), in, cfg.width, rng);
    in = cfg.width;
  }
  if (cfg_.basis_size > 0) {
    nn::add_dense(params_, "den.out", in, 4 * cfg_.basis_size, rng);
    basis_t_ = output_basis(cfg.horizon, cfg_.basis_size).transpose();
  } else {
    nn::add_dense(params_, "den.out", in, cfg.traj_dim(), rng);
  }
}

nn::Mat Denoiser::predict(const nn::Mat& x_s, const nn::Mat& cond, const std::vector<int>& t,
                          const Eigen::VectorXd& alpha_bar) const {
  check_inputs(cfg_, cond, t, alpha_bar, x_s.rows(), x_s.cols());
  nn::Mat h(x_s.rows(), cfg_.traj_dim() + cfg_.cond_dim() + cfg_.time_dim);
  h << x_s, cond, time_embedding(t, cfg_.time_dim);
  auto apply = [&](const std::string& name, const nn::Mat& x) {
    nn::Mat y = x * params_.value(params_.index(name + ".w"));
    y.rowwise() += params_.value(params_.index(name + ".b")).row(0);
    return y;
  };
  for (int i = 0; i < cfg_.hidden_layers; ++i) {
    nn::Mat a = apply(layer_name(i), h);
    h = a.array() / (1.0 + (-a.array()).exp());
  }
  nn::Mat out = apply("den.out", h);
  if (basis_t_.size() > 0) out = out * basis_t_;
  if (cfg_.skip) out += alpha_bar.array().sqrt().matrix().asDiagonal() * x_s;
  return out;
}

nn::Tape::Var Denoiser::forward(nn::Tape& tape, nn::Tape::Var x_s, const nn::Mat& cond, const std::vector<int>& t,
                                const Eigen::VectorXd& alpha_bar) {
  const nn::Mat& xv = tape.value(x_s);
  check_inputs(cfg_, cond, t, alpha_bar, xv.rows(), xv.cols());
  auto h = tape.concat_cols({x_s, tape.constant(cond), tape.constant(time_embedding(t, cfg_.time_dim))});
  for (int i = 0; i < cfg_.hidden_layers; ++i) h = tape.silu(nn::dense(tape, params_, layer_name(i), h));
  auto out = nn::dense(tape, params_, "den.out", h);
  if (basis_t_.size() > 0) out = tape.matmul(out, tape.constant(basis_t_));
  if (cfg_.skip) out = tape.add(out, tape.mul_rows(tape.constant(alpha_bar.array().sqrt().matrix()), x_s));
  return out;
}

void Denoiser::save(const std::filesystem::path& path) const {
  nn::ParamStore copy = params_;
  auto& m = copy.metadata();
  m["denoiser.horizon"] = std::to_string(cfg_.horizon);
  m["denoiser.scene_dim"] = std::to_string(cfg_.scene_dim);
  m["denoiser.navi_dim"] = std::to_string(cfg_.navi_dim);
  m["denoiser.width"] = std::to_string(cfg_.width);
  m["denoiser.hidden_layers"] = std::to_string(cfg_.hidden_layers);
  m["denoiser.time_dim"] = std::to_string(cfg_.time_dim);
  m["denoiser.skip"] = cfg_.skip ? "1" : "0";
  m["denoiser.basis_size"] = std::to_string(cfg_.basis_size);
  m["denoiser.scaler"] = scaler_.serialize();
  copy.save(path);
}

Denoiser Denoiser::load(const std::filesystem::path& path) {
  Denoiser d;
  d.params_ = nn::ParamStore::load(path);
  const auto& m = d.params_.metadata();
  auto get = [&](const char* key) {
    auto it = m.find(key);
    if (it == m.end()) throw std::runtime_error(path.string() + ": missing metadata " + key);
    return std::stoi(it->second);
  };
  d.cfg_.horizon = get("denoiser.horizon");
  d.cfg_.scene_dim = get("denoiser.scene_dim");
  d.cfg_.navi_dim = get("denoiser.navi_dim");
  d.cfg_.width = get("denoiser.width");
  d.cfg_.hidden_layers = get("denoiser.hidden_layers");
  d.cfg_.time_dim = get("denoiser.time_dim");
  d.cfg_.skip = get("denoiser.skip") != 0;
  d.cfg_.basis_size = get("denoiser.basis_size");
  d.set_scaler(TrajectoryScaler::deserialize(m.at("denoiser.scaler")));
  if (d.cfg_.basis_size > 0) d.basis_t_ = output_basis(d.cfg_.horizon, d.cfg_.basis_size).transpose();
  return d;
}

}  // namespace grft
