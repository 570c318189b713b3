#include "grft/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace grft::nn {

double clip_grad_norm(ParamStore& store, double max_norm) {
  const double norm = store.grad_norm();
  if (max_norm > 0.0 && std::isfinite(norm) && norm > max_norm) {
    for (std::size_t i = 0; i < store.size(); ++i) store.grad(i) *= max_norm / norm;
  }
  return norm;
}

Adam::Adam(const ParamStore& store, AdamConfig cfg) : cfg_(cfg) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    m_.push_back(Mat::Zero(store.value(i).rows(), store.value(i).cols()));
    v_.push_back(Mat::Zero(store.value(i).rows(), store.value(i).cols()));
  }
}

double Adam::learning_rate(long t) const {
  if (cfg_.total_steps <= 0) return cfg_.lr;
  const double frac = std::clamp(static_cast<double>(t) / static_cast<double>(cfg_.total_steps), 0.0, 1.0);
  return cfg_.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

StepStats Adam::step(ParamStore& store) {
  if (store.size() != m_.size()) throw std::invalid_argument("Adam: parameter store layout changed");
  StepStats stats;
  stats.lr = learning_rate(t_);
  stats.grad_norm = clip_grad_norm(store, cfg_.max_grad_norm);
  if (!std::isfinite(stats.grad_norm)) {
    stats.skipped = true;
    return stats;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const bool zero = stats.grad_norm == 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Mat& g = store.grad(i);
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseAbs2();
    if (zero) continue;
    const Mat mhat = m_[i] / bc1;
    const Mat vhat = v_[i] / bc2;
    store.value(i).array() -= stats.lr * mhat.array() / (vhat.array().sqrt() + cfg_.eps);
  }
  return stats;
}

}  // namespace grft::nn
