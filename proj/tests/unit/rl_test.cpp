#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "grft/diffusion/pretrain.hpp"
#include "grft/diffusion/sampler.hpp"
#include "grft/rl/grpo.hpp"
#include "grft/rl/ppo.hpp"
#include "grft/rl/rft.hpp"
#include "grft/scenario/synthetic.hpp"

namespace grft {
namespace {

// Direct-sum definition: A_t = sum_k (gamma lambda)^k delta_{t+k}, stopping after a done step.
Eigen::VectorXd gae_oracle(const Eigen::VectorXd& r, const Eigen::VectorXd& v, const std::vector<bool>& d,
                           double boot, double gamma, double lambda) {
  const Eigen::Index n = r.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double acc = 0.0, coef = 1.0;
    for (Eigen::Index j = t; j < n; ++j) {
      const double next = j + 1 < n ? v[j + 1] : boot;
      const double delta = r[j] + (d[j] ? 0.0 : gamma * next) - v[j];
      acc += coef * delta;
      if (d[j]) break;
      coef *= gamma * lambda;
    }
    out[t] = acc;
  }
  return out;
}

TEST(Gae, ZeroRewardsAndValuesGiveZero) {
  const auto g = compute_gae(Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10), std::vector<bool>(10, false), 0.0,
                             0.99, 0.95, false);
  EXPECT_EQ(g.advantages.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gae, SingleDoneStep) {
  const auto g = compute_gae(Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Constant(1, 0.2), {true}, 5.0, 0.99,
                             0.95, false);
  EXPECT_DOUBLE_EQ(g.advantages[0], 0.7 - 0.2);
  EXPECT_DOUBLE_EQ(g.targets[0], 0.7);
}

TEST(Gae, MatchesDirectSumOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 50;
    Eigen::VectorXd r(n), v(n);
    std::vector<bool> d(n);
    for (int t = 0; t < n; ++t) {
      r[t] = rng.uniform();
      v[t] = rng.uniform(-2, 2);
      d[t] = rng.bernoulli(0.1);
    }
    const double boot = rng.uniform(-1, 1);
    const auto g = compute_gae(r, v, d, boot, 0.99, 0.95, false);
    const auto oracle = gae_oracle(r, v, d, boot, 0.99, 0.95);
    EXPECT_LT((g.advantages - oracle).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((g.targets - (oracle + v)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Gae, NormalizationAndLengthCheck) {
  Rng rng(2);
  Eigen::VectorXd r = Eigen::VectorXd::Random(30), v = Eigen::VectorXd::Random(30);
  const auto g = compute_gae(r, v, std::vector<bool>(30, false), 0.0, 0.99, 0.95, true);
  EXPECT_NEAR(g.advantages.mean(), 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt((g.advantages.array() - g.advantages.mean()).square().mean()), 1.0, 1e-6);
  EXPECT_THROW(compute_gae(r, v, std::vector<bool>(29, false), 0.0, 0.99, 0.95, false), std::invalid_argument);
}

// A fixed pseudo-state for bandit-style tests.
std::vector<Transition> bandit_batch(const Explorer& e, int n, Rng& rng, double (*reward)(double)) {
  const ExplorerConfig& c = e.config();
  Transition base;
  base.scene = Eigen::RowVectorXd::Zero(c.scene_dim());
  base.scene[c.token_width - 1] = 1.0;  // ego token present
  base.navi = Eigen::RowVectorXd::Zero(c.navi_dim);
  base.ref_tokens = Eigen::RowVectorXd::Zero(4 * c.ref_tokens);
  PolicyBatch pb{base.scene, base.navi, base.ref_tokens};
  const PolicyOutput po = e.evaluate(pb).front();
  std::vector<Transition> out;
  for (int i = 0; i < n; ++i) {
    Transition t = base;
    const auto s = sample_scales(po.beta, rng);
    t.scales = s.scales;
    t.log_prob = s.log_prob;
    t.value = po.value;
    t.reward = reward(s.scales.eta_lat);
    t.done = true;
    out.push_back(t);
  }
  return out;
}

double quadratic_bandit(double eta) { return -(eta - 0.5) * (eta - 0.5); }
double zero_reward(double) { return 0.0; }

TEST(Ppo, ZeroAdvantageLeavesParamsWithoutValueOrEntropyTerms) {
  Rng rng(3);
  Explorer e(ExplorerConfig{}, rng);
  const auto batch = bandit_batch(e, 32, rng, zero_reward);
  const nn::ParamStore before = e.params();
  PpoConfig cfg;
  cfg.c_v = 0.0;
  cfg.c_e = 0.0;
  nn::Adam opt(e.params(), cfg.adam);
  const auto st = ppo_update(e, opt, batch, Eigen::VectorXd::Zero(32), Eigen::VectorXd::Zero(32), cfg, rng);
  EXPECT_EQ(st.updates, cfg.epochs);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(e.params().value(i), before.value(i)) << before.name(i);
}

TEST(Ppo, OnPolicyGradientEqualsPolicyGradientEstimate) {
  Rng rng(4);
  Explorer e(ExplorerConfig{}, rng);
  // Non-trivial heads so gradients are generic.
  for (const char* name : {"exp.beta.w", "exp.beta.b"}) {
    auto& w = e.params().value(e.params().index(name));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-0.5, 0.5);
  }
  const auto batch = bandit_batch(e, 16, rng, quadratic_bandit);
  Eigen::VectorXd adv(16);
  for (int i = 0; i < 16; ++i) adv[i] = rng.normal();
  std::vector<std::size_t> rows(16);
  for (std::size_t i = 0; i < 16; ++i) rows[i] = i;
  PpoConfig cfg;

  e.params().zero_grad();
  nn::Tape t1;
  const auto loss = ppo_loss(t1, e, batch, rows, adv, Eigen::VectorXd::Zero(16), cfg);
  EXPECT_LT((t1.value(loss.ratio).array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(loss.clipped, 0);
  t1.backward(loss.policy);
  const nn::ParamStore g1 = e.params();

  // -mean(A log pi) has the same gradient at ratio 1.
  e.params().zero_grad();
  nn::Tape t2;
  const auto h = e.forward(t2, transition_batch(batch, rows));
  nn::Mat eta(16, 2);
  for (int i = 0; i < 16; ++i) eta.row(i) << batch[i].scales.eta_lat, batch[i].scales.eta_lon;
  const auto lp = scale_log_prob(t2, h.a, h.b, eta);
  t2.backward(t2.scale(t2.mean(t2.mul(t2.constant(nn::Mat(adv)), lp)), -1.0));
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_LT((g1.grad(i) - e.params().grad(i)).cwiseAbs().maxCoeff(), 1e-12) << g1.name(i);
  }
}

TEST(Ppo, BetaBanditLearnsOptimum) {
  Rng rng(5);
  Explorer e(ExplorerConfig{}, rng);
  PpoConfig cfg;
  cfg.adam.lr = 3e-3;
  nn::Adam opt(e.params(), cfg.adam);
  double mean = 0.0;
  for (int it = 0; it < 200; ++it) {
    const auto batch = bandit_batch(e, 64, rng, quadratic_bandit);
    Eigen::VectorXd r(64), v(64);
    for (int i = 0; i < 64; ++i) {
      r[i] = batch[i].reward;
      v[i] = batch[i].value;
    }
    const auto g = compute_gae(r, v, std::vector<bool>(64, true), 0.0, cfg.gamma, cfg.gae_lambda, true);
    ppo_update(e, opt, batch, g.advantages, g.targets, cfg, rng);
    PolicyBatch pb = transition_batch(batch, {0});
    const auto beta = e.evaluate(pb).front().beta;
    mean = 2.0 * beta.a_lat / (beta.a_lat + beta.b_lat) - 1.0;
  }
  EXPECT_NEAR(mean, 0.5, 0.1);
}

DenoiserConfig tiny_denoiser() {
  DenoiserConfig c;
  c.width = 24;
  c.hidden_layers = 2;
  c.basis_size = 6;
  return c;
}

TrajectoryGroup random_group(const Denoiser& den, const NoiseSchedule& sched, Rng& rng, int G) {
  nn::Mat cond = nn::Mat::Random(1, den.config().cond_dim());
  std::vector<GuidanceScales> scales(static_cast<std::size_t>(G));
  for (auto& s : scales) s = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  Trajectory ref;
  for (int k = 0; k < den.config().horizon; ++k) ref.points.push_back({0.8 * (k + 1), 0.0, 8.0, 0.0});
  auto g = guided_sample_group(den, sched, cond, ref, scales, GuidanceConfig{}, rng);
  for (int k = 0; k < G; ++k) g.rewards.push_back(rng.uniform());
  return g;
}

TEST(Grpo, AdvantagesZeroMeanAndDegenerateGroups) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(8);
    for (auto& x : r) x = rng.uniform();
    EXPECT_LT(std::abs(group_advantages(r).sum()), 1e-9);
  }
  EXPECT_EQ(group_advantages(std::vector<double>(8, 0.1)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Grpo, EqualRewardsWithoutBcGiveZeroGradient) {
  Rng rng(7);
  Denoiser den(tiny_denoiser(), rng);
  const NoiseSchedule sched;
  auto g = random_group(den, sched, rng, 8);
  g.rewards.assign(8, 0.37);
  GrpoConfig cfg;
  cfg.c_b = 0.0;
  den.params().zero_grad();
  nn::Tape t;
  const auto loss = grpo_loss(t, den, sched, {&g}, {}, cfg);
  t.backward(loss.total);
  EXPECT_EQ(den.params().grad_norm(), 0.0);
}

TEST(Grpo, ChainLikelihoodTapeMatchesValueAndFiniteDifference) {
  Rng rng(8);
  Denoiser den(tiny_denoiser(), rng);
  const NoiseSchedule sched;
  const auto g = random_group(den, sched, rng, 3);
  const Eigen::VectorXd direct = chain_log_likelihood(den, sched, g.cond, g.chain, 0.8);
  den.params().zero_grad();
  nn::Tape t;
  const auto ll = chain_log_likelihood(t, den, sched, g.cond, g.chain, 0.8);
  EXPECT_LT((t.value(ll).col(0) - direct).cwiseAbs().maxCoeff(), 1e-6 * direct.cwiseAbs().maxCoeff());
  t.backward(t.sum(ll));
  double worst = 0.0;
  for (std::size_t p = 0; p < den.params().size(); ++p) {
    auto& w = den.params().value(p);
    for (Eigen::Index i = 0; i < w.size(); i += std::max<Eigen::Index>(1, w.size() / 5)) {
      const double keep = w(i), h = 1e-5;
      w(i) = keep + h;
      const double up = chain_log_likelihood(den, sched, g.cond, g.chain, 0.8).sum();
      w(i) = keep - h;
      const double dn = chain_log_likelihood(den, sched, g.cond, g.chain, 0.8).sum();
      w(i) = keep;
      const double fd = (up - dn) / (2 * h);
      worst = std::max(worst, std::abs(fd - den.params().grad(p)(i)) / std::max(1.0, std::abs(fd)));
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Grpo, WinningChainLikelihoodIncreases) {
  Rng rng(9);
  Denoiser den(tiny_denoiser(), rng);
  const Denoiser reference = den;
  const NoiseSchedule sched;
  auto g = random_group(den, sched, rng, 2);
  g.rewards = {1.0, 0.0};
  const double before = chain_log_likelihood(den, sched, g.cond, g.chain, 1.0)[0];
  GrpoConfig cfg;
  cfg.steps_per_epoch = 1;
  nn::Adam opt(den.params(), cfg.adam);
  grpo_update(den, reference, sched, {g}, cfg, opt, rng);
  EXPECT_GT(chain_log_likelihood(den, sched, g.cond, g.chain, 1.0)[0], before);
}

// Independent KL: Gaussian steps with equal sigma, so KL = |mu_theta - mu_ref|^2 / (2 sigma^2).
double kl_oracle(const Denoiser& den, const Denoiser& ref, const NoiseSchedule& sched, const TrajectoryGroup& g) {
  const Eigen::Index B = g.size();
  const nn::Mat c = g.cond.replicate(B, 1);
  const int S = sched.steps();
  double total = 0.0;
  for (int s = 1; s <= S; ++s) {
    const double sigma = sched.sigma(s);
    if (sigma <= 0.0) continue;
    const auto& x = g.chain[static_cast<std::size_t>(s)];
    const std::vector<int> t(static_cast<std::size_t>(B), sched.timestep(s));
    const Eigen::VectorXd ab = Eigen::VectorXd::Constant(B, sched.alpha_bar(s));
    const nn::Mat d = ddim_mean(sched, s, x, den.predict(x, c, t, ab), sigma) -
                      ddim_mean(sched, s, x, ref.predict(x, c, t, ab), sigma);
    total += d.squaredNorm() / (2.0 * sigma * sigma) / S;
  }
  return total / static_cast<double>(B);
}

TEST(Grpo, KlToReferenceMatchesOracleAndGradient) {
  Rng rng(11);
  Denoiser den(tiny_denoiser(), rng);
  const Denoiser reference = den;
  const NoiseSchedule sched;
  auto g = random_group(den, sched, rng, 4);
  g.rewards.assign(4, 0.5);
  GrpoConfig cfg;
  cfg.c_b = 0.0;
  cfg.kl_coef = 1.0;
  {
    den.params().zero_grad();
    nn::Tape t;
    const auto loss = grpo_loss(t, den, sched, {&g}, {}, cfg, &reference);
    EXPECT_LT(t.value(loss.kl)(0, 0), 1e-20);
    t.backward(loss.total);
    EXPECT_LT(den.params().grad_norm(), 1e-12);
  }
  for (std::size_t p = 0; p < den.params().size(); ++p)
    den.params().value(p) += 0.05 * nn::Mat::Random(den.params().value(p).rows(), den.params().value(p).cols());
  den.params().zero_grad();
  nn::Tape t;
  const auto loss = grpo_loss(t, den, sched, {&g}, {}, cfg, &reference);
  const double kl = t.value(loss.kl)(0, 0);
  EXPECT_GT(kl, 0.0);
  EXPECT_NEAR(kl, kl_oracle(den, reference, sched, g), 1e-9 * kl);
  EXPECT_NEAR(t.value(loss.total)(0, 0), kl, 1e-9 * kl);
  t.backward(loss.total);
  double worst = 0.0;
  for (std::size_t p = 0; p < den.params().size(); ++p) {
    auto& w = den.params().value(p);
    for (Eigen::Index i = 0; i < w.size(); i += std::max<Eigen::Index>(1, w.size() / 4)) {
      const double keep = w(i), h = 1e-5;
      w(i) = keep + h;
      const double up = kl_oracle(den, reference, sched, g);
      w(i) = keep - h;
      const double dn = kl_oracle(den, reference, sched, g);
      w(i) = keep;
      const double fd = (up - dn) / (2 * h);
      worst = std::max(worst, std::abs(fd - den.params().grad(p)(i)) / std::max(1.0, std::abs(fd)));
    }
  }
  EXPECT_LT(worst, 1e-5);
  cfg.kl_coef = -1.0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
}

TEST(Grpo, DeterministicScheduleRejected) {
  Rng rng(10);
  Denoiser den(tiny_denoiser(), rng);
  ScheduleConfig sc;
  const NoiseSchedule sched(sc);
  const auto g = random_group(den, sched, rng, 2);
  sc.eta_ddim = 0.0;
  EXPECT_THROW(chain_log_likelihood(den, NoiseSchedule(sc), g.cond, g.chain, 1.0), std::invalid_argument);
}

TEST(GuidedGroup, IdenticalScalesAndNoiseGiveIdenticalMembers) {
  Rng rng(11);
  Denoiser den(tiny_denoiser(), rng);
  ScheduleConfig sc;
  sc.eta_ddim = 0.0;
  const NoiseSchedule sched(sc);
  const nn::Mat cond = nn::Mat::Random(1, den.config().cond_dim());
  Trajectory ref;
  for (int k = 0; k < 80; ++k) ref.points.push_back({0.8 * (k + 1), 0.0, 8.0, 0.0});
  Rng a(5), b(5);
  const auto g1 = guided_sample_group(den, sched, cond, ref, {{0.5, -0.2}}, GuidanceConfig{}, a);
  const auto g2 = guided_sample_group(den, sched, cond, ref, {{0.5, -0.2}}, GuidanceConfig{}, b);
  EXPECT_EQ(g1.chain.front(), g2.chain.front());
  EXPECT_EQ(g1.plans.size(), 1u);
}

struct RftFixture {
  std::vector<BundlePtr> bundles;
  Denoiser den;
  Explorer explorer;
  RftFixture() {
    std::vector<Scenario> s;
    s.push_back(generate_synthetic(1, ScenarioKind::kBlockedLane));
    s.push_back(generate_synthetic(2, ScenarioKind::kConeGap));
    bundles = make_bundles(std::move(s));
    Rng rng(12);
    den = Denoiser(tiny_denoiser(), rng);
    explorer = Explorer(ExplorerConfig{}, rng);
  }
  RftConfig config() const {
    RftConfig c;
    c.ppo.envs = 2;
    c.ppo.steps_per_iter = 3;
    c.grpo.group_size = 3;
    c.grpo.steps_per_epoch = 2;
    c.iterations = 2;
    c.seed = 77;
    return c;
  }
};

TEST(Rft, FixedSeedGivesIdenticalMetricStreams) {
  RftFixture fx;
  auto run = [&](int workers) {
    RftConfig c = fx.config();
    c.workers = workers;
    RftTrainer tr(fx.den, fx.explorer, fx.bundles, c);
    std::vector<nlohmann::json> out;
    for (int i = 0; i < 2; ++i) {
      auto j = to_json(tr.iterate());
      j.erase("seconds");
      out.push_back(j);
    }
    return std::make_pair(out, tr.denoiser().params());
  };
  const auto a = run(1);
  const auto b = run(1);
  const auto c = run(2);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.first, c.first);
  EXPECT_TRUE(a.second == b.second);
  EXPECT_EQ(a.first[1]["env_steps"], 12);
}

TEST(Rft, ReferenceFrozenAndPolicyMoves) {
  RftFixture fx;
  RftTrainer tr(fx.den, fx.explorer, fx.bundles, fx.config());
  for (int i = 0; i < 2; ++i) tr.iterate();
  EXPECT_TRUE(tr.reference().params() == fx.den.params());
  EXPECT_FALSE(tr.denoiser().params() == fx.den.params());
  EXPECT_FALSE(tr.explorer().params() == fx.explorer.params());
}

TEST(Rft, RejectsEpisodesOverrunningScoringWindow) {
  RftFixture fx;
  RftConfig c = fx.config();
  c.engine.end_frame = 150;
  EXPECT_THROW(RftTrainer(fx.den, fx.explorer, fx.bundles, c), std::invalid_argument);
}

}  // namespace
}  // namespace grft
