#include "grft/nn/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace grft::nn {

namespace {

std::string shape(const Mat& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus_scalar(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double digamma(double x) { return boost::math::digamma(x); }
double trigamma(double x) { return boost::math::trigamma(x); }

}  // namespace

Tape::Var Tape::push(Mat value, std::function<void(Tape&, const Mat&)> back) {
  Node n;
  n.grad = Mat::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(Var v, const Mat& g) { nodes_[static_cast<std::size_t>(v.id)].grad += g; }

void Tape::check_same_shape(Var a, Var b, const char* op) const {
  const Mat& x = value(a);
  const Mat& y = value(b);
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape(x) + " vs " + shape(y));
  }
}

Tape::Var Tape::constant(Mat value) { return push(std::move(value), nullptr); }

Tape::Var Tape::param(ParamStore& store, std::size_t index) {
  ParamStore* s = &store;
  return push(store.value(index), [s, index](Tape&, const Mat& g) { s->grad(index) += g; });
}

Tape::Var Tape::matmul(Var a, Var b) {
  const Mat& x = value(a);
  const Mat& y = value(b);
  if (x.cols() != y.rows()) throw std::invalid_argument("matmul: shape mismatch " + shape(x) + " * " + shape(y));
  return push(x * y, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a, g * t.value(b).transpose());
    t.accumulate(b, t.value(a).transpose() * g);
  });
}

Tape::Var Tape::add(Var a, Var b) {
  check_same_shape(a, b, "add");
  return push(value(a) + value(b), [a, b](Tape& t, const Mat& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  return push(value(a) - value(b), [a, b](Tape& t, const Mat& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, const Mat& g) {
    t.accumulate(a, g.cwiseProduct(t.value(b)));
    t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Tape::Var Tape::scale(Var a, double k) {
  return push(k * value(a), [a, k](Tape& t, const Mat& g) { t.accumulate(a, k * g); });
}

Tape::Var Tape::add_scalar(Var a, double k) {
  return push(value(a).array() + k, [a](Tape& t, const Mat& g) { t.accumulate(a, g); });
}

Tape::Var Tape::add_bias(Var x, Var b) {
  const Mat& xv = value(x);
  const Mat& bv = value(b);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw std::invalid_argument("add_bias: shape mismatch " + shape(xv) + " + " + shape(bv));
  }
  Mat out = xv.rowwise() + bv.row(0);
  return push(std::move(out), [x, b](Tape& t, const Mat& g) {
    t.accumulate(x, g);
    t.accumulate(b, g.colwise().sum());
  });
}

Tape::Var Tape::mul_rows(Var c, Var x) {
  const Mat& cv = value(c);
  const Mat& xv = value(x);
  if (cv.cols() != 1 || cv.rows() != xv.rows()) {
    throw std::invalid_argument("mul_rows: shape mismatch " + shape(cv) + " . " + shape(xv));
  }
  Mat out = xv.array().colwise() * cv.col(0).array();
  return push(std::move(out), [c, x](Tape& t, const Mat& g) {
    t.accumulate(c, g.cwiseProduct(t.value(x)).rowwise().sum());
    Mat gx = g.array().colwise() * t.value(c).col(0).array();
    t.accumulate(x, gx);
  });
}

Tape::Var Tape::tanh(Var a) {
  Mat y = value(a).array().tanh();
  return push(y, [a, y](Tape& t, const Mat& g) {
    t.accumulate(a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Tape::Var Tape::silu(Var a) {
  const Mat& x = value(a);
  Mat s = x.unaryExpr([](double v) { return sigmoid(v); });
  Mat y = x.cwiseProduct(s);
  return push(std::move(y), [a, s](Tape& t, const Mat& g) {
    const Mat& xv = t.value(a);
    Mat d = s.array() * (1.0 + xv.array() * (1.0 - s.array()));
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Tape::Var Tape::softplus(Var a) {
  Mat y = value(a).unaryExpr([](double v) { return softplus_scalar(v); });
  return push(std::move(y), [a](Tape& t, const Mat& g) {
    t.accumulate(a, g.cwiseProduct(t.value(a).unaryExpr([](double v) { return sigmoid(v); })));
  });
}

Tape::Var Tape::exp(Var a) {
  Mat y = value(a).array().exp();
  return push(y, [a, y](Tape& t, const Mat& g) { t.accumulate(a, g.cwiseProduct(y)); });
}

Tape::Var Tape::log(Var a) {
  return push(value(a).array().log(), [a](Tape& t, const Mat& g) {
    t.accumulate(a, g.cwiseQuotient(t.value(a)));
  });
}

Tape::Var Tape::square(Var a) {
  return push(value(a).array().square(), [a](Tape& t, const Mat& g) {
    t.accumulate(a, 2.0 * g.cwiseProduct(t.value(a)));
  });
}

Tape::Var Tape::sum(Var a) {
  return push(Mat::Constant(1, 1, value(a).sum()), [a](Tape& t, const Mat& g) {
    const Mat& x = t.value(a);
    t.accumulate(a, Mat::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Tape::Var Tape::mean(Var a) {
  const double n = static_cast<double>(value(a).size());
  if (n == 0) throw std::invalid_argument("mean: empty input");
  return push(Mat::Constant(1, 1, value(a).sum() / n), [a, n](Tape& t, const Mat& g) {
    const Mat& x = t.value(a);
    t.accumulate(a, Mat::Constant(x.rows(), x.cols(), g(0, 0) / n));
  });
}

Tape::Var Tape::row_sum(Var a) {
  return push(value(a).rowwise().sum(), [a](Tape& t, const Mat& g) {
    const Mat& x = t.value(a);
    t.accumulate(a, g.col(0).replicate(1, x.cols()));
  });
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += value(p).cols();
  }
  Mat out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  return push(std::move(out), [parts](Tape& t, const Mat& g) {
    Eigen::Index off = 0;
    for (Var p : parts) {
      const Eigen::Index n = t.value(p).cols();
      t.accumulate(p, g.middleCols(off, n));
      off += n;
    }
  });
}

Tape::Var Tape::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  const Mat& x = value(a);
  if (start < 0 || count < 0 || start + count > x.cols()) throw std::invalid_argument("slice_cols: out of range");
  return push(x.middleCols(start, count), [a, start, count](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(t.value(a).rows(), t.value(a).cols());
    full.middleCols(start, count) = g;
    t.accumulate(a, full);
  });
}

Tape::Var Tape::row_softmax(Var a) {
  const Mat& x = value(a);
  Mat y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  return push(y, [a, y](Tape& t, const Mat& g) {
    Mat d(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      d.row(r) = y.row(r).array() * (g.row(r).array() - dot);
    }
    t.accumulate(a, d);
  });
}

Tape::Var Tape::mix(Var x, Var W, int tokens, int channels, int axis) {
  const Mat& xv = value(x);
  const Mat& wv = value(W);
  const int n = axis == 0 ? tokens : channels;
  if (xv.cols() != static_cast<Eigen::Index>(tokens) * channels || wv.rows() != n ||
      (axis == 0 && wv.cols() != n) || (axis != 0 && axis != 1)) {
    throw std::invalid_argument("mix: shape mismatch " + shape(xv) + " with W " + shape(wv));
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  auto forward = [tokens, channels, axis](const Mat& in, const Mat& w) {
    Mat out(in.rows(), axis == 0 ? in.cols() : tokens * w.cols());
    for (Eigen::Index b = 0; b < in.rows(); ++b) {
      const RowMat row = in.row(b);
      Eigen::Map<const RowMat> X(row.data(), tokens, channels);
      RowMat Y = axis == 0 ? RowMat(w * X) : RowMat(X * w);
      out.row(b) = Eigen::Map<const Eigen::RowVectorXd>(Y.data(), Y.size());
    }
    return out;
  };
  return push(forward(xv, wv), [x, W, tokens, channels, axis](Tape& t, const Mat& g) {
    const Mat& in = t.value(x);
    const Mat& w = t.value(W);
    Mat gx(in.rows(), in.cols());
    Mat gw = Mat::Zero(w.rows(), w.cols());
    for (Eigen::Index b = 0; b < in.rows(); ++b) {
      const RowMat row = in.row(b);
      const RowMat grow = g.row(b);
      Eigen::Map<const RowMat> X(row.data(), tokens, channels);
      Eigen::Map<const RowMat> G(grow.data(), tokens, axis == 0 ? channels : w.cols());
      RowMat GX;
      if (axis == 0) {
        GX = w.transpose() * G;
        gw += G * X.transpose();
      } else {
        GX = G * w.transpose();
        gw += X.transpose() * G;
      }
      gx.row(b) = Eigen::Map<const Eigen::RowVectorXd>(GX.data(), GX.size());
    }
    t.accumulate(x, gx);
    t.accumulate(W, gw);
  });
}

Tape::Var Tape::mean_tokens(Var x, int tokens, int channels) {
  const Mat& xv = value(x);
  if (xv.cols() != static_cast<Eigen::Index>(tokens) * channels) throw std::invalid_argument("mean_tokens: shape");
  Mat out = Mat::Zero(xv.rows(), channels);
  for (int k = 0; k < tokens; ++k) out += xv.middleCols(static_cast<Eigen::Index>(k) * channels, channels);
  out /= tokens;
  return push(std::move(out), [x, tokens, channels](Tape& t, const Mat& g) {
    Mat gx(g.rows(), static_cast<Eigen::Index>(tokens) * channels);
    for (int k = 0; k < tokens; ++k) gx.middleCols(static_cast<Eigen::Index>(k) * channels, channels) = g / tokens;
    t.accumulate(x, gx);
  });
}

Tape::Var Tape::beta_log_prob(Var a, Var b, const Mat& u) {
  check_same_shape(a, b, "beta_log_prob");
  const Mat& av = value(a);
  const Mat& bv = value(b);
  if (u.rows() != av.rows() || u.cols() != av.cols()) throw std::invalid_argument("beta_log_prob: u shape");
  Mat out(av.rows(), av.cols());
  for (Eigen::Index i = 0; i < av.size(); ++i) {
    const double A = av(i), B = bv(i), x = u(i);
    out(i) = std::lgamma(A + B) - std::lgamma(A) - std::lgamma(B) + (A - 1.0) * std::log(x) +
             (B - 1.0) * std::log1p(-x);
  }
  return push(std::move(out), [a, b, u](Tape& t, const Mat& g) {
    const Mat& av = t.value(a);
    const Mat& bv = t.value(b);
    Mat ga(av.rows(), av.cols()), gb(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.size(); ++i) {
      const double psi_ab = digamma(av(i) + bv(i));
      ga(i) = g(i) * (psi_ab - digamma(av(i)) + std::log(u(i)));
      gb(i) = g(i) * (psi_ab - digamma(bv(i)) + std::log1p(-u(i)));
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

Tape::Var Tape::beta_entropy(Var a, Var b) {
  check_same_shape(a, b, "beta_entropy");
  const Mat& av = value(a);
  const Mat& bv = value(b);
  Mat out(av.rows(), av.cols());
  for (Eigen::Index i = 0; i < av.size(); ++i) {
    const double A = av(i), B = bv(i);
    const double log_beta = std::lgamma(A) + std::lgamma(B) - std::lgamma(A + B);
    out(i) = log_beta - (A - 1.0) * digamma(A) - (B - 1.0) * digamma(B) + (A + B - 2.0) * digamma(A + B);
  }
  return push(std::move(out), [a, b](Tape& t, const Mat& g) {
    const Mat& av = t.value(a);
    const Mat& bv = t.value(b);
    Mat ga(av.rows(), av.cols()), gb(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.size(); ++i) {
      const double A = av(i), B = bv(i);
      const double t_ab = (A + B - 2.0) * trigamma(A + B);
      ga(i) = g(i) * (t_ab - (A - 1.0) * trigamma(A));
      gb(i) = g(i) * (t_ab - (B - 1.0) * trigamma(B));
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

void Tape::backward(Var out, const Mat& seed) {
  Node& root = nodes_.at(static_cast<std::size_t>(out.id));
  if (seed.size() == 0) {
    root.grad.setOnes();
  } else {
    if (seed.rows() != root.value.rows() || seed.cols() != root.value.cols()) {
      throw std::invalid_argument("backward: seed shape mismatch");
    }
    root.grad = seed;
  }
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.back || n.grad.isZero(0.0)) continue;
    const Mat g = n.grad;
    n.back(*this, g);
  }
}

}  // namespace grft::nn
