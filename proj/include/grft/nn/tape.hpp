#pragma once

#include <functional>
#include <vector>

#include "grft/nn/param_store.hpp"

namespace grft::nn {

/// Reverse-mode autodiff over dense matrices. Rows are batch items. Every op records its
/// value and a backward closure; backward() walks the tape in reverse, accumulating into
/// node grads and, for parameter leaves, into the owning ParamStore.
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  Var constant(Mat value);
  /// Leaf bound to store.value(index); gradients accumulate into store.grad(index).
  Var param(ParamStore& store, std::size_t index);
  Var param(ParamStore& store, const std::string& name) { return param(store, store.index(name)); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double k);
  Var add_scalar(Var a, double k);
  /// x (B x n) + b (1 x n) broadcast over rows.
  Var add_bias(Var x, Var b);
  /// c (B x 1) scales each row of x (B x n).
  Var mul_rows(Var c, Var x);
  Var tanh(Var a);
  Var silu(Var a);
  Var softplus(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var square(Var a);
  Var sum(Var a);   // 1 x 1
  Var mean(Var a);  // 1 x 1
  Var row_sum(Var a);  // B x 1
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
  Var row_softmax(Var a);
  /// x holds T tokens of width C per row (token-major). axis 0 mixes tokens with W (T x T):
  /// y[t, c] = sum_s W[t, s] x[s, c]. axis 1 maps channels with W (C x C'): y[t, c] = sum_d x[t, d] W[d, c],
  /// giving T tokens of width C'.
  Var mix(Var x, Var W, int tokens, int channels, int axis);
  /// Mean over the T tokens of a token-major row: B x (T*C) -> B x C.
  Var mean_tokens(Var x, int tokens, int channels);
  /// Elementwise Beta log-density of constant u in (0,1) under parameters a, b (all B x k).
  Var beta_log_prob(Var a, Var b, const Mat& u);
  /// Elementwise Beta differential entropy.
  Var beta_entropy(Var a, Var b);

  const Mat& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
  const Mat& grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).grad; }
  double scalar(Var v) const { return value(v)(0, 0); }

  /// Seeds d(out) = seed (ones when empty) and propagates to every ancestor.
  void backward(Var out, const Mat& seed = Mat());
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&, const Mat&)> back;  // receives this node's grad
  };

  Var push(Mat value, std::function<void(Tape&, const Mat&)> back);
  void accumulate(Var v, const Mat& g);
  void check_same_shape(Var a, Var b, const char* op) const;

  std::vector<Node> nodes_;
};

}  // namespace grft::nn
