#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "grft/core/rng.hpp"
#include "grft/nn/layers.hpp"
#include "grft/nn/optim.hpp"
#include "grft/nn/tape.hpp"

namespace grft::nn {
namespace {

Mat random_mat(Rng& rng, int r, int c, double s = 1.0) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = s * rng.normal();
  return m;
}

/// Max over tensors of ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8).
double grad_check(ParamStore& store, const std::function<Tape::Var(Tape&)>& f) {
  store.zero_grad();
  {
    Tape t;
    t.backward(f(t));
  }
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t p = 0; p < store.size(); ++p) {
    Mat num(store.value(p).rows(), store.value(p).cols());
    for (Eigen::Index i = 0; i < num.size(); ++i) {
      const double keep = store.value(p)(i);
      store.value(p)(i) = keep + h;
      Tape tp;
      const double fp = tp.scalar(f(tp));
      store.value(p)(i) = keep - h;
      Tape tm;
      const double fm = tm.scalar(f(tm));
      store.value(p)(i) = keep;
      num(i) = (fp - fm) / (2 * h);
    }
    const double scale = std::max({store.grad(p).norm(), num.norm(), 1e-8});
    worst = std::max(worst, (store.grad(p) - num).norm() / scale);
  }
  return worst;
}

TEST(Tape, IdentityAndZeroDense) {
  Rng rng(1);
  const Mat x = random_mat(rng, 3, 4);
  Tape t;
  EXPECT_EQ(t.value(t.constant(x)), x);
  ParamStore store;
  add_dense(store, "d", 4, 2, rng, /*zero_init=*/true);
  store.value(store.index("d.b")) << 0.5, -1.5;
  const auto y = dense(t, store, "d", t.constant(x));
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(t.value(y)(r, 0), 0.5);
    EXPECT_EQ(t.value(y)(r, 1), -1.5);
  }
}

TEST(Tape, TwoLayerTanhMatchesOracle) {
  Rng rng(2);
  ParamStore store;
  add_dense(store, "l1", 5, 7, rng);
  add_dense(store, "l2", 7, 3, rng);
  const Mat x = random_mat(rng, 4, 5);
  Tape t;
  const auto y = dense(t, store, "l2", t.tanh(dense(t, store, "l1", t.constant(x))));
  const Mat h = ((x * store.value(0)).rowwise() + store.value(1).row(0)).array().tanh();
  const Mat ref = (h * store.value(2)).rowwise() + store.value(3).row(0);
  EXPECT_LT((t.value(y) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Tape, LinearGradIsOuterProduct) {
  Rng rng(3);
  ParamStore store;
  const auto w = store.add("w", random_mat(rng, 3, 2));
  const Mat x = random_mat(rng, 1, 3);
  const Mat gy = random_mat(rng, 1, 2);
  Tape t;
  const auto y = t.matmul(t.constant(x), t.param(store, w));
  t.backward(y, gy);
  EXPECT_LT((store.grad(w) - x.transpose() * gy).norm(), 1e-15);
}

TEST(Tape, DisconnectedParamHasZeroGrad) {
  Rng rng(4);
  ParamStore store;
  const auto a = store.add("a", random_mat(rng, 2, 2));
  const auto b = store.add("b", random_mat(rng, 2, 2));
  Tape t;
  t.param(store, b);
  t.backward(t.sum(t.square(t.param(store, a))));
  EXPECT_GT(store.grad(a).norm(), 0.0);
  EXPECT_EQ(store.grad(b).norm(), 0.0);
}

TEST(Tape, ShapeErrors) {
  Tape t;
  const auto a = t.constant(Mat::Ones(2, 3));
  const auto b = t.constant(Mat::Ones(2, 2));
  EXPECT_THROW(t.add(a, b), std::invalid_argument);
  EXPECT_THROW(t.matmul(a, a), std::invalid_argument);
  EXPECT_THROW(t.add_bias(a, b), std::invalid_argument);
  EXPECT_THROW(t.slice_cols(a, 2, 2), std::invalid_argument);
  EXPECT_THROW(t.mix(a, b, 2, 2, 0), std::invalid_argument);
}

TEST(Tape, EveryOpGradCheck) {
  Rng rng(5);
  ParamStore s;
  const auto x = s.add("x", random_mat(rng, 3, 6));
  const auto y = s.add("y", random_mat(rng, 3, 6));
  const auto c = s.add("c", random_mat(rng, 3, 1));
  const auto bias = s.add("bias", random_mat(rng, 1, 6));
  const auto w = s.add("w", random_mat(rng, 6, 4));
  const auto wt = s.add("wt", random_mat(rng, 3, 3));
  const auto wc = s.add("wc", random_mat(rng, 2, 2));
  const auto wp = s.add("wp", random_mat(rng, 2, 3));
  const auto pa = s.add("pa", Mat::Constant(3, 2, 0.3) + random_mat(rng, 3, 2, 0.1));
  Mat u(3, 2);
  u << 0.2, 0.7, 0.5, 0.9, 0.1, 0.4;
  const Mat pos = Mat::Constant(3, 6, 2.0);

  using Fn = std::function<Tape::Var(Tape&)>;
  auto X = [&](Tape& t) { return t.param(s, x); };
  auto Y = [&](Tape& t) { return t.param(s, y); };
  const std::vector<std::pair<const char*, Fn>> cases = {
      {"matmul", [&](Tape& t) { return t.sum(t.square(t.matmul(X(t), t.param(s, w)))); }},
      {"add", [&](Tape& t) { return t.sum(t.square(t.add(X(t), Y(t)))); }},
      {"sub", [&](Tape& t) { return t.sum(t.square(t.sub(X(t), Y(t)))); }},
      {"mul", [&](Tape& t) { return t.sum(t.mul(X(t), Y(t))); }},
      {"scale", [&](Tape& t) { return t.sum(t.square(t.scale(X(t), -1.7))); }},
      {"add_scalar", [&](Tape& t) { return t.sum(t.square(t.add_scalar(X(t), 0.3))); }},
      {"add_bias", [&](Tape& t) { return t.sum(t.square(t.add_bias(X(t), t.param(s, bias)))); }},
      {"mul_rows", [&](Tape& t) { return t.sum(t.square(t.mul_rows(t.param(s, c), X(t)))); }},
      {"tanh", [&](Tape& t) { return t.sum(t.mul(t.tanh(X(t)), Y(t))); }},
      {"silu", [&](Tape& t) { return t.sum(t.mul(t.silu(X(t)), Y(t))); }},
      {"softplus", [&](Tape& t) { return t.sum(t.mul(t.softplus(X(t)), Y(t))); }},
      {"exp", [&](Tape& t) { return t.sum(t.exp(t.scale(X(t), 0.5))); }},
      {"log", [&](Tape& t) { return t.sum(t.log(t.add(t.square(X(t)), t.constant(pos)))); }},
      {"mean", [&](Tape& t) { return t.mean(t.square(X(t))); }},
      {"row_sum", [&](Tape& t) { return t.sum(t.square(t.row_sum(X(t)))); }},
      {"concat", [&](Tape& t) { return t.sum(t.square(t.concat_cols({X(t), t.param(s, c), Y(t)}))); }},
      {"slice", [&](Tape& t) { return t.sum(t.square(t.slice_cols(X(t), 2, 3))); }},
      {"softmax", [&](Tape& t) { return t.sum(t.mul(t.row_softmax(X(t)), Y(t))); }},
      {"mix_tokens", [&](Tape& t) { return t.sum(t.mul(t.mix(X(t), t.param(s, wt), 3, 2, 0), Y(t))); }},
      {"mix_channels", [&](Tape& t) { return t.sum(t.mul(t.mix(X(t), t.param(s, wc), 3, 2, 1), Y(t))); }},
      {"mix_project", [&](Tape& t) { return t.sum(t.square(t.mix(X(t), t.param(s, wp), 3, 2, 1))); }},
      {"mean_tokens", [&](Tape& t) { return t.sum(t.square(t.mean_tokens(X(t), 3, 2))); }},
      {"beta_log_prob",
       [&](Tape& t) {
         const auto a = t.add_scalar(t.softplus(t.param(s, pa)), 1.0);
         const auto b = t.add_scalar(t.softplus(t.scale(t.param(s, pa), -2.0)), 1.5);
         return t.sum(t.beta_log_prob(a, b, u));
       }},
      {"beta_entropy",
       [&](Tape& t) {
         const auto a = t.add_scalar(t.softplus(t.param(s, pa)), 1.0);
         const auto b = t.add_scalar(t.softplus(t.scale(t.param(s, pa), 3.0)), 1.2);
         return t.sum(t.beta_entropy(a, b));
       }},
  };
  for (const auto& [name, f] : cases) EXPECT_LT(grad_check(s, f), 1e-5) << name;
}

TEST(Tape, RandomGraphsGradCheck) {
  Rng rng(6);
  for (int g = 0; g < 100; ++g) {
    ParamStore s;
    const int width = rng.uniform_int(2, 5);
    add_dense(s, "a", 3, width, rng);
    add_dense(s, "b", width, width, rng);
    const auto extra = s.add("e", random_mat(rng, 2, width));
    const Mat x = random_mat(rng, 2, 3);
    std::vector<int> ops(4);
    for (auto& o : ops) o = rng.uniform_int(0, 6);
    auto f = [&](Tape& t) {
      auto h = dense(t, s, "a", t.constant(x));
      for (int o : ops) {
        switch (o) {
          case 0: h = t.tanh(h); break;
          case 1: h = t.silu(h); break;
          case 2: h = t.softplus(h); break;
          case 3: h = dense(t, s, "b", h); break;
          case 4: h = t.mul(h, t.param(s, extra)); break;
          case 5: h = t.row_softmax(h); break;
          default: h = t.add(h, t.scale(t.param(s, extra), 0.5)); break;
        }
      }
      return t.sum(t.square(h));
    };
    ASSERT_LT(grad_check(s, f), 1e-5) << "graph " << g;
  }
}

TEST(Tape, ForwardDeterministic) {
  Rng rng(7);
  ParamStore s;
  add_dense(s, "a", 4, 8, rng);
  const Mat x = random_mat(rng, 5, 4);
  Tape t1, t2;
  const Mat y1 = t1.value(t1.silu(dense(t1, s, "a", t1.constant(x))));
  const Mat y2 = t2.value(t2.silu(dense(t2, s, "a", t2.constant(x))));
  EXPECT_EQ(std::memcmp(y1.data(), y2.data(), sizeof(double) * y1.size()), 0);
}

TEST(Adam, ZeroGradLeavesParams) {
  Rng rng(8);
  ParamStore s;
  add_dense(s, "a", 3, 3, rng);
  const ParamStore before = s;
  Adam opt(s, {});
  s.zero_grad();
  opt.step(s);
  EXPECT_TRUE(s == before);
  // Also after moments were populated by an earlier update.
  s.grad(0).setOnes();
  opt.step(s);
  const ParamStore mid = s;
  s.zero_grad();
  opt.step(s);
  EXPECT_TRUE(s == mid);
  EXPECT_EQ(opt.steps(), 3);
}

TEST(Adam, ClipsToMaxNorm) {
  ParamStore s;
  s.add("p", Mat::Zero(1, 2));
  s.add("q", Mat::Zero(2, 1));
  s.grad(0) << 3.0, 0.0;
  s.grad(1) << 0.0, 4.0;  // global norm 5
  EXPECT_DOUBLE_EQ(clip_grad_norm(s, 0.5), 5.0);
  EXPECT_NEAR(s.grad_norm(), 0.5, 1e-15);
  EXPECT_NEAR(s.grad(1)(1) / s.grad(0)(0), 4.0 / 3.0, 1e-15);
  // Below the limit nothing changes.
  EXPECT_NEAR(clip_grad_norm(s, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(s.grad_norm(), 0.5, 1e-15);
  Adam opt(s, {});
  s.grad(0) << 3.0, 0.0;
  s.grad(1) << 0.0, 4.0;
  EXPECT_DOUBLE_EQ(opt.step(s).grad_norm, 5.0);
}

TEST(Adam, CosineScheduleEndpoints) {
  ParamStore s;
  s.add("p", Mat::Zero(1, 1));
  AdamConfig cfg;
  cfg.total_steps = 100;
  Adam opt(s, cfg);
  EXPECT_DOUBLE_EQ(opt.learning_rate(0), 2.5e-4);
  EXPECT_NEAR(opt.learning_rate(50), 1.25e-4, 1e-18);
  EXPECT_EQ(opt.learning_rate(100), 0.0);
}

TEST(Adam, NonFiniteSkips) {
  ParamStore s;
  s.add("p", Mat::Ones(1, 2));
  Adam opt(s, {});
  s.grad(0) << std::nan(""), 1.0;
  const auto st = opt.step(s);
  EXPECT_TRUE(st.skipped);
  EXPECT_EQ(s.value(0), Mat::Ones(1, 2));
  EXPECT_EQ(opt.steps(), 0);
}

TEST(Checkpoint, RoundTrip) {
  Rng rng(9);
  ParamStore s;
  add_dense(s, "enc", 7, 5, rng);
  s.add("empty", Mat(0, 3));
  s.metadata()["calibration"] = "0.731";
  const auto path = std::filesystem::temp_directory_path() / "grft_ckpt_test.bin";
  s.save(path);
  const ParamStore back = ParamStore::load(path);
  EXPECT_TRUE(back == s);
  EXPECT_EQ(back.metadata().at("calibration"), "0.731");
  std::ofstream(path, std::ios::binary) << "nonsense";
  EXPECT_THROW(ParamStore::load(path), std::runtime_error);
  std::filesystem::remove(path);
  EXPECT_THROW(s.add("enc.w", Mat()), std::invalid_argument);
}

}  // namespace
}  // namespace grft::nn
