#include "grft/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace grft {

void validate(const PpoConfig& cfg) {
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0) || !(cfg.gae_lambda > 0.0 && cfg.gae_lambda <= 1.0)) {
    throw std::invalid_argument("ppo: gamma and gae_lambda must lie in (0, 1]");
  }
  if (!(cfg.clip_eps > 0.0)) throw std::invalid_argument("ppo: clip_eps must be positive");
  if (cfg.epochs < 1 || cfg.minibatch < 1 || cfg.envs < 1 || cfg.steps_per_iter < 1) {
    throw std::invalid_argument("ppo: epochs, minibatch, envs and steps_per_iter must be positive");
  }
}

GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values, const std::vector<bool>& dones,
                      double bootstrap, double gamma, double lambda, bool normalize) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || static_cast<Eigen::Index>(dones.size()) != n) {
    throw std::invalid_argument("compute_gae: length mismatch");
  }
  GaeResult out;
  out.advantages.resize(n);
  double next_value = bootstrap;
  double next_adv = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double live = dones[static_cast<std::size_t>(t)] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[t] = next_adv;
    next_value = values[t];
  }
  out.targets = out.advantages + values;
  if (normalize && n > 1) {
    const double mean = out.advantages.mean();
    const double sd = std::sqrt((out.advantages.array() - mean).square().mean());
    out.advantages = ((out.advantages.array() - mean) / (sd + 1e-8)).matrix();
  }
  return out;
}

PolicyBatch transition_batch(const std::vector<Transition>& batch, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw std::invalid_argument("transition_batch: no rows");
  const auto& first = batch.at(rows.front());
  const auto B = static_cast<Eigen::Index>(rows.size());
  PolicyBatch pb{nn::Mat(B, first.scene.size()), nn::Mat(B, first.navi.size()), nn::Mat(B, first.ref_tokens.size())};
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto& tr = batch.at(rows[static_cast<std::size_t>(i)]);
    pb.scene.row(i) = tr.scene;
    pb.navi.row(i) = tr.navi;
    pb.ref.row(i) = tr.ref_tokens;
  }
  return pb;
}

PpoLoss ppo_loss(nn::Tape& tape, Explorer& explorer, const std::vector<Transition>& batch,
                 const std::vector<std::size_t>& rows, const Eigen::VectorXd& advantages,
                 const Eigen::VectorXd& targets, const PpoConfig& cfg) {
  const auto B = static_cast<Eigen::Index>(rows.size());
  nn::Mat eta(B, 2), old_lp(B, 1), adv(B, 1), target(B, 1);
  for (Eigen::Index i = 0; i < B; ++i) {
    const std::size_t r = rows[static_cast<std::size_t>(i)];
    eta.row(i) << batch[r].scales.eta_lat, batch[r].scales.eta_lon;
    old_lp(i, 0) = batch[r].log_prob;
    adv(i, 0) = advantages[static_cast<Eigen::Index>(r)];
    target(i, 0) = targets[static_cast<Eigen::Index>(r)];
  }
  PpoLoss out;
  const auto heads = explorer.forward(tape, transition_batch(batch, rows));
  const auto log_prob = scale_log_prob(tape, heads.a, heads.b, eta);
  out.ratio = tape.exp(tape.sub(log_prob, tape.constant(old_lp)));
  // min(r A, clip(r) A) has gradient A dr where the unclipped term is the minimum, 0 elsewhere.
  const nn::Mat& r = tape.value(out.ratio);
  nn::Mat coeff(B, 1);
  for (Eigen::Index i = 0; i < B; ++i) {
    const double unclipped = r(i, 0) * adv(i, 0);
    const double clip = std::clamp(r(i, 0), 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv(i, 0);
    coeff(i, 0) = unclipped <= clip ? adv(i, 0) : 0.0;
    out.surrogate += std::min(unclipped, clip) / static_cast<double>(B);
    out.clipped += std::abs(r(i, 0) - 1.0) > cfg.clip_eps ? 1 : 0;
  }
  out.policy = tape.scale(tape.mean(tape.mul(tape.constant(coeff), out.ratio)), -1.0);
  out.value = tape.mean(tape.square(tape.sub(heads.value, tape.constant(target))));
  out.entropy = tape.mean(scale_entropy(tape, heads.a, heads.b));
  out.total = tape.sub(tape.add(out.policy, tape.scale(out.value, cfg.c_v)), tape.scale(out.entropy, cfg.c_e));
  return out;
}

PpoStats ppo_update(Explorer& explorer, nn::Adam& opt, const std::vector<Transition>& batch,
                    const Eigen::VectorXd& advantages, const Eigen::VectorXd& targets, const PpoConfig& cfg,
                    Rng& rng) {
  validate(cfg);
  const std::size_t n = batch.size();
  if (static_cast<std::size_t>(advantages.size()) != n || static_cast<std::size_t>(targets.size()) != n) {
    throw std::invalid_argument("ppo_update: advantages/targets do not match the batch");
  }
  PpoStats stats;
  if (n == 0) return stats;
  const std::size_t mb = std::min<std::size_t>(static_cast<std::size_t>(cfg.minibatch), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  double clipped = 0.0, seen = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < n; start += mb) {
      std::vector<std::size_t> rows(order.begin() + static_cast<long>(start),
                                    order.begin() + static_cast<long>(std::min(n, start + mb)));
      // Drop samples whose ratio is not finite under the current parameters.
      const auto current = explorer.evaluate(transition_batch(batch, rows));
      std::vector<std::size_t> kept;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& tr = batch[rows[i]];
        const double lp = log_prob_and_entropy(current[i].beta, tr.scales).log_prob;
        if (std::isfinite(std::exp(lp - tr.log_prob))) {
          kept.push_back(rows[i]);
        } else {
          ++stats.dropped;
        }
      }
      if (kept.empty()) continue;
      explorer.params().zero_grad();
      nn::Tape tape;
      const PpoLoss loss = ppo_loss(tape, explorer, batch, kept, advantages, targets, cfg);
      tape.backward(loss.total);
      const auto step = opt.step(explorer.params());

      const nn::Mat& r = tape.value(loss.ratio);
      for (std::size_t i = 0; i < kept.size(); ++i) stats.approx_kl += -std::log(r(static_cast<Eigen::Index>(i), 0));
      clipped += loss.clipped;
      seen += static_cast<double>(kept.size());
      stats.policy_loss += -loss.surrogate;
      stats.value_loss += tape.scalar(loss.value);
      stats.entropy += tape.scalar(loss.entropy);
      stats.grad_norm += step.grad_norm;
      ++stats.updates;
    }
  }
  if (stats.updates > 0) {
    const double u = stats.updates;
    stats.policy_loss /= u;
    stats.value_loss /= u;
    stats.entropy /= u;
    stats.grad_norm /= u;
  }
  if (seen > 0) {
    stats.clip_fraction = clipped / seen;
    stats.approx_kl /= seen;
  }
  return stats;
}

}  // namespace grft
