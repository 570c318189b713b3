#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "grft/core/geometry.hpp"
#include "grft/core/rng.hpp"
#include "grft/diffusion/denoiser.hpp"
#include "grft/diffusion/diversity.hpp"
#include "grft/diffusion/features.hpp"
#include "grft/diffusion/guidance.hpp"
#include "grft/diffusion/pretrain.hpp"
#include "grft/diffusion/sampler.hpp"
#include "grft/diffusion/schedule.hpp"
#include "grft/scenario/synthetic.hpp"

namespace grft {
namespace {

Eigen::MatrixX2d random_path(Rng& rng, int T) {
  Eigen::MatrixX2d m(T, 2);
  double x = 0, y = 0, h = rng.uniform(-3, 3);
  for (int k = 0; k < T; ++k) {
    h += rng.uniform(-0.2, 0.2);
    const double step = rng.uniform(0.3, 2.0);
    x += step * std::cos(h);
    y += step * std::sin(h);
    m.row(k) << x, y;
  }
  return m;
}

Trajectory as_trajectory(const Eigen::MatrixX2d& pos, const Eigen::MatrixX2d& vel) {
  Trajectory t;
  for (Eigen::Index k = 0; k < pos.rows(); ++k) t.points.push_back({pos(k, 0), pos(k, 1), vel(k, 0), vel(k, 1)});
  return t;
}

Trajectory straight(int T, double speed, double y = 0.0) {
  Trajectory t;
  for (int k = 0; k < T; ++k) t.points.push_back({speed * 0.1 * (k + 1), y, speed, 0.0});
  return t;
}

DenoiserConfig small_config() {
  DenoiserConfig c;
  c.horizon = 6;
  c.scene_dim = 5;
  c.navi_dim = 3;
  c.width = 12;
  c.hidden_layers = 2;
  c.time_dim = 4;
  return c;
}

// ---------------------------------------------------------------- schedule

TEST(Schedule, QuadraticTimestepsAndMonotoneAlphaBar) {
  NoiseSchedule s;
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  const int expect[] = {40, 160, 360, 639, 999};
  for (int i = 1; i <= 5; ++i) {
    EXPECT_NEAR(s.timestep(i), expect[i - 1], 1);
    EXPECT_LT(s.alpha_bar(i), s.alpha_bar(i - 1));
    EXPECT_GT(s.alpha_bar(i), 0.0);
  }
  // Independent product oracle for the last step.
  double prod = 1.0;
  for (int t = 0; t <= 999; ++t) prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * t / 999.0);
  EXPECT_NEAR(s.alpha_bar(5), prod, 1e-15);
}

TEST(Schedule, SigmaForms) {
  NoiseSchedule verbatim;
  ScheduleConfig cc;
  cc.canonical_ddim_variance = true;
  NoiseSchedule canonical(cc);
  for (int s = 1; s <= 5; ++s) {
    const double a = verbatim.alpha_bar(s), ap = verbatim.alpha_bar(s - 1);
    EXPECT_DOUBLE_EQ(verbatim.sigma(s), std::sqrt((1 - ap) / (1 - a)));
    EXPECT_DOUBLE_EQ(canonical.sigma(s), std::sqrt((1 - ap) / (1 - a) * (1 - a / ap)));
    EXPECT_EQ(verbatim.sigma(s, 0.0), 0.0);
    bool clamped = true;
    eps_coefficient(canonical, s, canonical.sigma(s), &clamped);
    EXPECT_FALSE(clamped);
  }
  EXPECT_EQ(verbatim.sigma(1), 0.0);  // alpha_bar(0) = 1
  bool clamped = false;
  eps_coefficient(verbatim, 3, verbatim.sigma(3), &clamped);
  EXPECT_TRUE(clamped);
}

TEST(Schedule, RejectsBadConfig) {
  ScheduleConfig c;
  c.eta_ddim = 1.5;
  EXPECT_THROW(NoiseSchedule{c}, std::invalid_argument);
  c = {};
  c.steps = 0;
  EXPECT_THROW(NoiseSchedule{c}, std::invalid_argument);
}

// ---------------------------------------------------------------- energies

TEST(Energy, GradientsMatchFiniteDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = rng.uniform_int(2, 30);
    const Eigen::MatrixX2d ref = random_path(rng, T);
    const Eigen::MatrixX2d vref = random_path(rng, T) * 0.3;
    Eigen::MatrixX2d x = ref + Eigen::MatrixX2d::Random(T, 2) * 2.0;
    Eigen::MatrixX2d v = vref + Eigen::MatrixX2d::Random(T, 2) * 2.0;
    const FrenetFrame frame = frenet_frame(as_trajectory(ref, vref));
    GuidanceConfig cfg;
    cfg.lon_target = trial % 2 ? LonTarget::kRelative : LonTarget::kVerbatim;
    const double el = rng.uniform(-1, 1), eo = rng.uniform(-1, 1);
    const auto lat = energy_lat(x, ref, frame, el, cfg);
    const auto lon = energy_lon(v, vref, frame, eo, cfg);
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < T; ++k) {
      for (int c = 0; c < 2; ++c) {
        Eigen::MatrixX2d xp = x, xm = x, vp = v, vm = v;
        xp(k, c) += h;
        xm(k, c) -= h;
        vp(k, c) += h;
        vm(k, c) -= h;
        const double gl = (energy_lat(xp, ref, frame, el, cfg).value - energy_lat(xm, ref, frame, el, cfg).value) / (2 * h);
        const double go = (energy_lon(vp, vref, frame, eo, cfg).value - energy_lon(vm, vref, frame, eo, cfg).value) / (2 * h);
        EXPECT_NEAR(lat.grad(k, c), gl, 1e-6 * std::max(1.0, std::abs(gl)));
        EXPECT_NEAR(lon.grad(k, c), go, 1e-6 * std::max(1.0, std::abs(go)));
      }
    }
  }
}

TEST(Energy, LateralIsTranslationInvariantAndZeroAtTarget) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 20;
    const Eigen::MatrixX2d ref = random_path(rng, T);
    const Eigen::MatrixX2d x = ref + Eigen::MatrixX2d::Random(T, 2);
    const FrenetFrame frame = frenet_frame(as_trajectory(ref, ref));
    const double eta = rng.uniform(-1, 1);
    GuidanceConfig cfg;
    const Eigen::RowVector2d d(rng.uniform(-50, 50), rng.uniform(-50, 50));
    const Eigen::MatrixX2d xs = x.rowwise() + d;
    const Eigen::MatrixX2d rs = ref.rowwise() + d;
    EXPECT_NEAR(energy_lat(x, ref, frame, eta, cfg).value, energy_lat(xs, rs, frame, eta, cfg).value, 1e-9);

    Eigen::MatrixX2d target = ref;
    for (int k = 0; k < T; ++k) target.row(k) += cfg.lambda_lat * eta * frame.normals[k].transpose();
    EXPECT_NEAR(energy_lat(target, ref, frame, eta, cfg).value, 0.0, 1e-20);
  }
}

TEST(Energy, LongitudinalTargets) {
  const Trajectory ref = straight(10, 10.0);
  const auto pos = positions(ref);
  const auto vel = velocities(ref);
  const FrenetFrame frame = frenet_frame(ref);
  GuidanceConfig cfg;
  cfg.lon_target = LonTarget::kRelative;
  EXPECT_EQ(energy_lon(vel, vel, frame, 0.0, cfg).value, 0.0);
  EXPECT_NEAR(energy_lon(vel * 1.25, vel, frame, 1.0, cfg).value, 0.0, 1e-20);
  cfg.lon_target = LonTarget::kVerbatim;
  EXPECT_NEAR(energy_lon(vel * 0.25, vel, frame, 1.0, cfg).value, 0.0, 1e-20);
  // (10 - 0)^2 per step for eta = 0 under the verbatim target.
  EXPECT_NEAR(energy_lon(vel, vel, frame, 0.0, cfg).value, 100.0, 1e-9);
  (void)pos;
}

TEST(Energy, Validation) {
  EXPECT_THROW(validate_scales({1.2, 0.0}), std::invalid_argument);
  EXPECT_THROW(validate_scales({0.0, -1.01}), std::invalid_argument);
  EXPECT_THROW(validate_scales({std::nan(""), 0.0}), std::invalid_argument);
  EXPECT_NO_THROW(validate_scales({-1.0, 1.0}));
  GuidanceConfig c;
  c.lambda_lon = 1.5;
  EXPECT_THROW(validate_guidance(c), std::invalid_argument);
  const Trajectory ref = straight(5, 1.0);
  EXPECT_THROW(energy_lat(positions(straight(4, 1.0)), positions(ref), frenet_frame(ref), 0, {}),
               std::invalid_argument);
}

TEST(Guidance, HalfNewtonStepLandsOnTarget) {
  // With guide_step = T/2 a single update from the reference lands exactly on ref + lambda*eta*n.
  const int T = 40;
  Trajectory ref;
  for (int k = 0; k < T; ++k) {
    const double a = 0.02 * k;
    ref.points.push_back({30 * std::sin(a), 30 * (1 - std::cos(a)), 8 * std::cos(a), 8 * std::sin(a)});
  }
  const TrajectoryScaler scaler = TrajectoryScaler::channels(T);
  GuidanceSpec g;
  g.reference = ref;
  g.config.guide_step = T / 2.0;
  g.config.enable_lon = false;
  g.scales = {{0.6, 0.0}, {-1.0, 0.0}};
  nn::Mat x0(2, 4 * T);
  x0.row(0) = scaler.encode(ref);
  x0.row(1) = scaler.encode(ref);
  const nn::Mat out = apply_guidance(x0, g, scaler);
  const FrenetFrame f = frenet_frame(ref);
  for (int r = 0; r < 2; ++r) {
    const Trajectory t = scaler.decode(out.row(r));
    for (int k = 0; k < T; ++k) {
      const Vec2 want = ref[k].position() + g.config.lambda_lat * g.scales[r].eta_lat * f.normals[k];
      EXPECT_NEAR((t[k].position() - want).norm(), 0.0, 1e-9);
      EXPECT_NEAR(t[k].vx, ref[k].vx, 1e-12);
    }
  }
}

// ---------------------------------------------------------------- DDIM

TEST(Ddim, FinalStepReturnsX0) {
  NoiseSchedule sched;
  Rng rng(3);
  nn::Mat xs = nn::Mat::Random(3, 8), x0 = nn::Mat::Random(3, 8), z = nn::Mat::Random(3, 8);
  for (double eta : {0.0, 0.5, 1.0}) {
    EXPECT_EQ(ddim_step(sched, 1, xs, x0, sched.sigma(1, eta), z), x0);
  }
}

TEST(Ddim, CanonicalMeanRecoversNoiseDirection) {
  ScheduleConfig cc;
  cc.canonical_ddim_variance = true;
  NoiseSchedule sched(cc);
  nn::Mat x0 = nn::Mat::Random(2, 6), eps = nn::Mat::Random(2, 6);
  for (int s = 2; s <= 5; ++s) {
    const double a = sched.alpha_bar(s), ap = sched.alpha_bar(s - 1);
    const nn::Mat xs = std::sqrt(a) * x0 + std::sqrt(1 - a) * eps;
    for (double eta : {0.0, 0.7}) {
      const double sig = sched.sigma(s, eta);
      const nn::Mat want = std::sqrt(ap) * x0 + std::sqrt(1 - ap - sig * sig) * eps;
      EXPECT_LT((ddim_mean(sched, s, xs, x0, sig) - want).norm(), 1e-12);
    }
  }
}

TEST(Ddim, StepLogProbMatchesScalarGaussian) {
  nn::Mat x(1, 3), m(1, 3);
  x << 0.5, -1.0, 2.0;
  m << 0.0, 0.0, 1.0;
  const double sigma = 0.7;
  double want = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = x(0, i) - m(0, i);
    want += -0.5 * d * d / (sigma * sigma) - std::log(sigma * std::sqrt(2 * M_PI));
  }
  EXPECT_NEAR(step_log_prob(x, m, sigma)[0], want, 1e-12);
  EXPECT_THROW(step_log_prob(x, m, 0.0), std::invalid_argument);
}

class SamplerTest : public ::testing::Test {
 protected:
  SamplerTest() {
    Rng rng(1);
    den = Denoiser(small_config(), rng);
    cond = nn::Mat::Random(1, small_config().cond_dim());
  }
  Denoiser den;
  nn::Mat cond;
  NoiseSchedule sched;
};

TEST_F(SamplerTest, EtaZeroIsDeterministicGivenSeed) {
  Rng a(9), b(9);
  const auto ra = sample(den, sched, cond, 3, 0.0, a);
  const auto rb = sample(den, sched, cond, 3, 0.0, b);
  for (std::size_t s = 0; s < ra.chain.size(); ++s) EXPECT_EQ(ra.chain[s], rb.chain[s]);
  EXPECT_EQ(ra.clamped_steps, 0);
}

TEST_F(SamplerTest, VerbatimEtaOneReportsClamps) {
  Rng a(9);
  const auto r = sample(den, sched, cond, 2, 1.0, a);
  EXPECT_EQ(r.clamped_steps, 4);  // every step but the last
}

TEST_F(SamplerTest, ZeroGuideStepIsBitwiseUnguided) {
  GuidanceSpec g;
  g.reference = straight(6, 5.0);
  g.config.guide_step = 0.0;
  g.scales = {{1.0, -1.0}, {-0.3, 0.5}};
  for (double eta : {0.0, 1.0}) {
    Rng a(4), b(4);
    const auto plain = sample(den, sched, cond, 2, eta, a);
    const auto guided = sample(den, sched, cond, 2, eta, b, &g);
    for (std::size_t s = 0; s < plain.chain.size(); ++s) EXPECT_EQ(plain.chain[s], guided.chain[s]);
  }
}

TEST_F(SamplerTest, GuidanceRejectsBadScales) {
  GuidanceSpec g;
  g.reference = straight(6, 5.0);
  g.scales = {{1.5, 0.0}};
  Rng a(1);
  EXPECT_THROW(sample(den, sched, cond, 1, 1.0, a, &g), std::invalid_argument);
}

// ---------------------------------------------------------------- denoiser

TEST(DenoiserNet, TapeMatchesInferencePath) {
  Rng rng(2);
  Denoiser den(small_config(), rng);
  const nn::Mat x = nn::Mat::Random(4, 24), c = nn::Mat::Random(4, 8);
  const std::vector<int> t = {40, 160, 360, 999};
  const Eigen::VectorXd ab = Eigen::VectorXd::LinSpaced(4, 0.9, 0.01);
  nn::Tape tape;
  const auto v = den.forward(tape, tape.constant(x), c, t, ab);
  EXPECT_LT((tape.value(v) - den.predict(x, c, t, ab)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DenoiserNet, ZeroWeightsWithoutSkipOutputZero) {
  Rng rng(2);
  auto cfg = small_config();
  cfg.skip = false;
  Denoiser den(cfg, rng);
  for (std::size_t i = 0; i < den.params().size(); ++i) den.params().value(i).setZero();
  const nn::Mat out = den.predict(nn::Mat::Random(2, 24), nn::Mat::Random(2, 8), {1, 2}, Eigen::VectorXd::Ones(2));
  EXPECT_EQ(out.norm(), 0.0);
}

TEST(DenoiserNet, CheckpointRoundTrip) {
  Rng rng(2);
  Denoiser den(small_config(), rng);
  const auto path = std::filesystem::temp_directory_path() / "grft_denoiser_rt.bin";
  den.save(path);
  const Denoiser back = Denoiser::load(path);
  std::filesystem::remove(path);
  const nn::Mat x = nn::Mat::Random(2, 24), c = nn::Mat::Random(2, 8);
  EXPECT_EQ(den.predict(x, c, {3, 4}, Eigen::VectorXd::Constant(2, 0.5)),
            back.predict(x, c, {3, 4}, Eigen::VectorXd::Constant(2, 0.5)));
  EXPECT_EQ(back.config().width, 12);
  EXPECT_EQ(back.config().hidden_layers, 2);
}

TEST(Pretrain, LossZeroForZeroDenoiserOnZeroData) {
  Rng rng(2);
  auto cfg = small_config();
  cfg.skip = false;
  Denoiser den(cfg, rng);
  for (std::size_t i = 0; i < den.params().size(); ++i) den.params().value(i).setZero();
  nn::Tape tape;
  NoiseSchedule sched;
  const auto loss = pretrain_loss(tape, den, sched, nn::Mat::Random(5, 8), nn::Mat::Zero(5, 24), rng);
  EXPECT_EQ(tape.scalar(loss), 0.0);
}

TEST(Pretrain, LossGradientMatchesFiniteDifference) {
  Rng init(8);
  Denoiser den(small_config(), init);
  NoiseSchedule sched;
  const nn::Mat c = nn::Mat::Random(3, 8), x0 = nn::Mat::Random(3, 24);
  auto eval = [&](bool grad) {
    Rng rng(77);
    nn::Tape tape;
    const auto l = pretrain_loss(tape, den, sched, c, x0, rng);
    if (grad) tape.backward(l);
    return tape.scalar(l);
  };
  den.params().zero_grad();
  eval(true);
  const double h = 1e-6;
  for (std::size_t p = 0; p < den.params().size(); ++p) {
    auto& w = den.params().value(p);
    for (Eigen::Index i = 0; i < w.size(); i += 7) {
      const double keep = w(i);
      w(i) = keep + h;
      const double fp = eval(false);
      w(i) = keep - h;
      const double fm = eval(false);
      w(i) = keep;
      EXPECT_NEAR(den.params().grad(p)(i), (fp - fm) / (2 * h), 1e-6);
    }
  }
}

TEST(Pretrain, FitsSmallDataset) {
  Rng rng(4);
  Denoiser den(small_config(), rng);
  NoiseSchedule sched;
  PretrainData data;
  data.cond = nn::Mat::Random(32, 8);
  data.target = nn::Mat::Zero(32, 24);
  for (int r = 0; r < 32; ++r) data.target.row(r).setConstant(data.cond(r, 0));  // target depends on cond
  PretrainConfig pc;
  pc.epochs = 200;
  pc.batch_size = 16;
  pc.adam.lr = 3e-3;
  const auto logs = pretrain(den, sched, data, pc, rng);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 20; ++i) {
    head += logs[i].loss;
    tail += logs[logs.size() - 1 - i].loss;
  }
  EXPECT_LT(tail, 0.5 * head);
}

// ---------------------------------------------------------------- diversity

TEST(Diversity, IdenticalAndDisjoint) {
  const Trajectory a = straight(10, 5.0);
  EXPECT_EQ(diversity_score({a, a, a}), 0.0);
  EXPECT_EQ(diversity_score({a}), 0.0);
  EXPECT_EQ(diversity_score({a, straight(10, 5.0, 50.0)}), 1.0);
}

TEST(Diversity, SingleBoxOverlapMatchesAreaOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const double shift = rng.uniform(0.5, 4.0);
    Trajectory a, b;
    a.points = {{0.0, 0.0, 1.0, 0.0}};
    b.points = {{shift, 0.0, 1.0, 0.0}};
    const double overlap = (4.6 - shift) * 2.0;
    const double oracle = overlap / (2 * 4.6 * 2.0 - overlap);
    EXPECT_NEAR(1.0 - diversity_score({a, b}), oracle, 0.03);
  }
}

TEST(Diversity, HalfOverlapCorridorsMatchMaskOracle) {
  // Two straight corridors 2 m wide, offset laterally by 1 m. The oracle rasterises both swept
  // footprints on a dense boolean grid and counts cells.
  auto corridor = [](double y) {
    Trajectory t;
    for (int k = 0; k < 30; ++k) t.points.push_back({0.03 + 0.5 * (k + 1), y, 5.0, 0.0});
    return t;
  };
  const double ya = 0.1, yb = 1.1, cell = 0.25;
  const Trajectory a = corridor(ya), b = corridor(yb);
  auto inside = [&](const Trajectory& t, double y, double cx, double cy) {
    for (const auto& p : t.points)
      if (std::abs(cx - p.x) <= 2.3 && std::abs(cy - y) <= 1.0) return true;
    return false;
  };
  long inter = 0, uni = 0;
  for (int ix = -40; ix < 120; ++ix) {
    for (int iy = -20; iy < 20; ++iy) {
      const double cx = (ix + 0.5) * cell, cy = (iy + 0.5) * cell;
      const bool in_a = inside(a, ya, cx, cy), in_b = inside(b, yb, cx, cy);
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  ASSERT_GT(inter, 0);
  const double oracle = 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
  EXPECT_NEAR(diversity_score({a, b}), oracle, 1e-9);
  EXPECT_NEAR(oracle, 1.0 - 4.0 / 12.0, 0.02);  // 4 shared rows out of 12
}

TEST(Diversity, RangeAndPermutationInvariance) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Trajectory> g;
    for (int k = 0; k < 4; ++k) g.push_back(straight(15, rng.uniform(2, 10), rng.uniform(-3, 3)));
    const double d = diversity_score(g);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    std::reverse(g.begin(), g.end());
    EXPECT_NEAR(diversity_score(g), d, 1e-15);
  }
}

// ---------------------------------------------------------------- features and data

TEST(Features, ShapesAndEgoToken) {
  const Scenario s = generate_synthetic(3, ScenarioKind::kStraight);
  FeatureExtractor fx(s);
  const auto e = fx.extract(kCurrentFrame, s.ego_log[kCurrentFrame]);
  ASSERT_EQ(e.scene.size(), 81);
  ASSERT_EQ(e.navi.size(), kNaviDim);
  EXPECT_NEAR(e.scene[0], s.ego_log[kCurrentFrame].speed / 10.0, 1e-12);
  EXPECT_EQ(e.scene[8], 1.0);
  EXPECT_NEAR(e.navi[0], 0.0, 0.05);  // expert starts on the route centreline
}

TEST(Features, ObjectsSortedByDistanceAndRouteOffsetSign) {
  const Scenario s = generate_synthetic(12, ScenarioKind::kConeGap);
  FeatureExtractor fx(s);
  EgoState ego = s.ego_log[kCurrentFrame];
  const auto e = fx.extract(kCurrentFrame, ego);
  double prev = 0.0;
  for (int i = 1; i <= 8; ++i) {
    const auto tok = e.scene.segment(i * kTokenWidth, kTokenWidth);
    if (tok[8] == 0.0) break;
    const double d = std::hypot(50 * tok[0], 10 * tok[1]);
    EXPECT_GE(d + 1e-9, prev);
    prev = d;
  }
  ego.x -= std::sin(ego.heading) * 1.0;
  ego.y += std::cos(ego.heading) * 1.0;
  EXPECT_GT(fx.extract(kCurrentFrame, ego).navi[0], 0.2);
}

TEST(Dataset, UnperturbedTargetsAreExpertFutures) {
  const Scenario s = generate_synthetic(21, ScenarioKind::kCurve);
  DatasetConfig cfg;
  cfg.perturb_prob = 0.0;
  cfg.frames_per_scenario = 3;
  Rng rng(1);
  const auto d = build_dataset({s}, cfg, rng);
  ASSERT_EQ(d.target.rows(), 3);
  // Match each target against the expert future of some frame.
  for (Eigen::Index r = 0; r < 3; ++r) {
    double best = 1e9;
    for (std::size_t f = 0; f + 81 < s.frame_count(); ++f) {
      best = std::min(best, (flatten_trajectory(expert_future(s, f, s.ego_log[f], 80)) - d.target.row(r)).norm());
    }
    EXPECT_LT(best, 1e-12);
  }
  const Trajectory fut = expert_future(s, 20, s.ego_log[20], 80);
  EXPECT_NEAR(fut[0].x, s.ego_log[20].speed * 0.1, 0.1);
  EXPECT_NEAR(fut[0].y, 0.0, 0.05);
  EXPECT_THROW(expert_future(s, 100, s.ego_log[100], 80), std::out_of_range);
}

}  // namespace
}  // namespace grft
