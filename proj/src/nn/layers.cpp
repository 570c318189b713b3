#include "grft/nn/layers.hpp"

#include <cmath>

namespace grft::nn {

void add_dense(ParamStore& store, const std::string& name, int in, int out, Rng& rng, bool zero_init) {
  Mat w = Mat::Zero(in, out);
  if (!zero_init) {
    const double limit = std::sqrt(6.0 / (in + out));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-limit, limit);
  }
  store.add(name + ".w", std::move(w));
  store.add(name + ".b", Mat::Zero(1, out));
}

Tape::Var dense(Tape& tape, ParamStore& store, const std::string& name, Tape::Var x) {
  return tape.add_bias(tape.matmul(x, tape.param(store, name + ".w")), tape.param(store, name + ".b"));
}

}  // namespace grft::nn
