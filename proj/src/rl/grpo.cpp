#include "grft/rl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace grft {
namespace {

nn::Mat tile_cond(const nn::Mat& cond, Eigen::Index rows) {
  return cond.rows() == rows ? cond : nn::Mat(cond.row(0).replicate(rows, 1));
}

void check_chain(const NoiseSchedule& sched, const std::vector<nn::Mat>& chain) {
  if (sched.eta() <= 0.0) throw std::invalid_argument("chain_log_likelihood: needs a stochastic schedule (eta > 0)");
  if (static_cast<int>(chain.size()) != sched.steps() + 1) throw std::invalid_argument("chain_log_likelihood: chain length");
}

// Gaussian normaliser of one step, per row: D log(sigma sqrt(2 pi)).
double log_norm(double sigma, Eigen::Index dim) {
  return static_cast<double>(dim) * (std::log(sigma) + 0.5 * std::log(2.0 * std::numbers::pi));
}

}  // namespace

void validate(const GrpoConfig& cfg) {
  if (cfg.group_size < 2) throw std::invalid_argument("grpo: group_size must be >= 2");
  if (!(cfg.denoise_gamma > 0.0 && cfg.denoise_gamma <= 1.0)) throw std::invalid_argument("grpo: denoise_gamma in (0, 1]");
  if (cfg.epochs < 1 || cfg.steps_per_epoch < 1) throw std::invalid_argument("grpo: epochs and steps_per_epoch >= 1");
  if (cfg.c_b < 0.0 || cfg.kl_coef < 0.0) throw std::invalid_argument("grpo: c_b and kl_coef must be non-negative");
}

Eigen::VectorXd group_advantages(const std::vector<double>& rewards) {
  const auto n = static_cast<Eigen::Index>(rewards.size());
  Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(rewards.data(), n);
  if (n == 0 || r.maxCoeff() == r.minCoeff()) return Eigen::VectorXd::Zero(n);
  const double mean = r.mean();
  const double sd = std::sqrt((r.array() - mean).square().mean());
  Eigen::VectorXd a = ((r.array() - mean) / (sd + 1e-8)).matrix();
  return a.array() - a.mean();
}

namespace {

struct ChainTerms {
  nn::Tape::Var ll;  // B x 1
  nn::Tape::Var kl;  // B x 1, empty without a reference
};

// Log-likelihood of the stored chain and, with a reference, (1/S) sum_s KL(pi_theta || pi_ref) at
// the chain's inputs. Both Gaussians share sigma_s, so the KL is |mu_theta - mu_ref|^2 / (2 sigma^2).
ChainTerms chain_terms(nn::Tape& tape, Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond,
                       const std::vector<nn::Mat>& chain, double gamma, const Denoiser* reference) {
  check_chain(sched, chain);
  const Eigen::Index B = chain.front().rows();
  const Eigen::Index D = chain.front().cols();
  const nn::Mat c = tile_cond(cond, B);
  const int S = sched.steps();
  ChainTerms out{tape.constant(nn::Mat::Zero(B, 1)), tape.constant(nn::Mat::Zero(B, 1))};
  for (int s = 1; s <= S; ++s) {
    const double sigma = sched.sigma(s);
    if (sigma <= 0.0) continue;
    const nn::Mat& x_s = chain[static_cast<std::size_t>(s)];
    const nn::Mat& x_prev = chain[static_cast<std::size_t>(s - 1)];
    const double a = sched.alpha_bar(s);
    const double e = eps_coefficient(sched, s, sigma);
    const double k1 = e / std::sqrt(1.0 - a);
    const double k0 = std::sqrt(sched.alpha_bar(s - 1)) - k1 * std::sqrt(a);
    const std::vector<int> t(static_cast<std::size_t>(B), sched.timestep(s));
    const Eigen::VectorXd ab = Eigen::VectorXd::Constant(B, a);
    const auto x0 = den.forward(tape, tape.constant(x_s), c, t, ab);
    const auto diff = tape.sub(tape.constant(x_prev - k1 * x_s), tape.scale(x0, k0));
    auto lp = tape.add_scalar(tape.scale(tape.row_sum(tape.square(diff)), -0.5 / (sigma * sigma)), -log_norm(sigma, D));
    out.ll = tape.add(out.ll, tape.scale(lp, std::pow(gamma, s - 1) / S));
    if (reference) {
      const auto d = tape.sub(x0, tape.constant(reference->predict(x_s, c, t, ab)));
      out.kl = tape.add(out.kl, tape.scale(tape.row_sum(tape.square(d)), 0.5 * k0 * k0 / (sigma * sigma) / S));
    }
  }
  return out;
}

}  // namespace

nn::Tape::Var chain_log_likelihood(nn::Tape& tape, Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond,
                                   const std::vector<nn::Mat>& chain, double gamma) {
  return chain_terms(tape, den, sched, cond, chain, gamma, nullptr).ll;
}

Eigen::VectorXd chain_log_likelihood(const Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond,
                                     const std::vector<nn::Mat>& chain, double gamma) {
  check_chain(sched, chain);
  const Eigen::Index B = chain.front().rows();
  const nn::Mat c = tile_cond(cond, B);
  const int S = sched.steps();
  Eigen::VectorXd total = Eigen::VectorXd::Zero(B);
  for (int s = 1; s <= S; ++s) {
    const double sigma = sched.sigma(s);
    if (sigma <= 0.0) continue;
    const nn::Mat& x_s = chain[static_cast<std::size_t>(s)];
    const nn::Mat x0 = den.predict(x_s, c, std::vector<int>(static_cast<std::size_t>(B), sched.timestep(s)),
                                   Eigen::VectorXd::Constant(B, sched.alpha_bar(s)));
    total += std::pow(gamma, s - 1) / S *
             step_log_prob(chain[static_cast<std::size_t>(s - 1)], ddim_mean(sched, s, x_s, x0, sigma), sigma);
  }
  return total;
}

GrpoLoss grpo_loss(nn::Tape& tape, Denoiser& den, const NoiseSchedule& sched,
                   const std::vector<const TrajectoryGroup*>& groups, const std::vector<std::vector<nn::Mat>>& bc_chains,
                   const GrpoConfig& cfg, const Denoiser* reference) {
  if (groups.empty()) throw std::invalid_argument("grpo_loss: no groups");
  const bool with_bc = !bc_chains.empty();
  if (with_bc && bc_chains.size() != groups.size()) throw std::invalid_argument("grpo_loss: bc chains per group");
  const int S = sched.steps();
  Eigen::Index rows = 0;
  for (const auto* g : groups) {
    if (static_cast<int>(g->chain.size()) != S + 1 || g->chain.front().rows() != g->size() ||
        static_cast<int>(g->rewards.size()) != g->size()) {
      throw std::invalid_argument("grpo_loss: group needs a full chain and one reward per member");
    }
    rows += g->size();
  }
  const Eigen::Index D = groups.front()->chain.front().cols();
  const double n = static_cast<double>(groups.size());

  // Every group's members stacked into one batch per denoising step.
  nn::Mat cond(rows, groups.front()->cond.cols());
  nn::Mat weight(rows, 1), bc_weight(rows, 1);
  std::vector<nn::Mat> chain(static_cast<std::size_t>(S + 1), nn::Mat(rows, D));
  std::vector<nn::Mat> bc(with_bc ? static_cast<std::size_t>(S + 1) : 0, nn::Mat(rows, D));
  Eigen::Index r0 = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = *groups[i];
    const Eigen::Index G = g.size();
    const Eigen::VectorXd adv = group_advantages(g.rewards);
    cond.middleRows(r0, G) = g.cond.row(0).replicate(G, 1);
    weight.middleRows(r0, G) = adv / (static_cast<double>(G) * n);
    bc_weight.middleRows(r0, G).setConstant(1.0 / (static_cast<double>(G) * n));
    for (int s = 0; s <= S; ++s) {
      chain[static_cast<std::size_t>(s)].middleRows(r0, G) = g.chain[static_cast<std::size_t>(s)];
      if (with_bc) {
        const auto& b = bc_chains[i].at(static_cast<std::size_t>(s));
        if (b.rows() != G) throw std::invalid_argument("grpo_loss: bc chain size must match the group");
        bc[static_cast<std::size_t>(s)].middleRows(r0, G) = b;
      }
    }
    r0 += G;
  }

  GrpoLoss out;
  const bool with_kl = reference != nullptr && cfg.kl_coef > 0.0;
  const auto terms = chain_terms(tape, den, sched, cond, chain, cfg.denoise_gamma, with_kl ? reference : nullptr);
  out.policy = tape.scale(tape.sum(tape.mul(tape.constant(weight), terms.ll)), -1.0);
  out.kl = tape.sum(tape.mul(tape.constant(bc_weight), terms.kl));
  if (with_bc) {
    const auto bc_ll = chain_log_likelihood(tape, den, sched, cond, bc, 1.0);
    out.bc = tape.scale(tape.sum(tape.mul(tape.constant(bc_weight), bc_ll)), -1.0);
  } else {
    out.bc = tape.constant(nn::Mat::Zero(1, 1));
  }
  out.total = tape.add(tape.add(out.policy, tape.scale(out.bc, cfg.c_b)), tape.scale(out.kl, cfg.kl_coef));
  return out;
}

GrpoStats grpo_update(Denoiser& den, const Denoiser& reference, const NoiseSchedule& sched,
                      const std::vector<TrajectoryGroup>& groups, const GrpoConfig& cfg, nn::Adam& opt, Rng& rng) {
  validate(cfg);
  GrpoStats stats;
  if (groups.empty()) return stats;
  if (sched.eta() <= 0.0) throw std::invalid_argument("grpo_update: training requires eta_ddim > 0");

  std::vector<std::vector<nn::Mat>> bc;
  if (cfg.c_b > 0.0) {
    bc.reserve(groups.size());
    for (const auto& g : groups) bc.push_back(sample(reference, sched, g.cond, g.size(), sched.eta(), rng).chain);
  }

  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t steps = std::min<std::size_t>(static_cast<std::size_t>(cfg.steps_per_epoch), groups.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t k = 0; k < steps; ++k) {
      // Near-equal contiguous slices of the shuffled order.
      const std::size_t lo = k * groups.size() / steps, hi = (k + 1) * groups.size() / steps;
      std::vector<const TrajectoryGroup*> part;
      std::vector<std::vector<nn::Mat>> part_bc;
      for (std::size_t i = lo; i < hi; ++i) {
        part.push_back(&groups[order[i]]);
        if (!bc.empty()) part_bc.push_back(bc[order[i]]);
      }
      den.params().zero_grad();
      nn::Tape tape;
      const auto loss = grpo_loss(tape, den, sched, part, part_bc, cfg, &reference);
      tape.backward(loss.total);
      const auto st = opt.step(den.params());
      stats.policy_loss += tape.scalar(loss.policy);
      stats.bc_loss += tape.scalar(loss.bc);
      stats.kl += tape.scalar(loss.kl);
      stats.grad_norm += st.grad_norm;
      ++stats.updates;
    }
  }
  const double u = std::max(1, stats.updates);
  stats.policy_loss /= u;
  stats.bc_loss /= u;
  stats.kl /= u;
  stats.grad_norm /= u;
  return stats;
}

}  // namespace grft
