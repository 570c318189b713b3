#pragma once

#include <string>

#include "grft/core/rng.hpp"
#include "grft/nn/tape.hpp"

namespace grft::nn {

/// Adds "<name>.w" (in x out, uniform +-sqrt(6/(in+out)) or zeros) and "<name>.b" (zeros).
void add_dense(ParamStore& store, const std::string& name, int in, int out, Rng& rng, bool zero_init = false);

/// x W + b.
Tape::Var dense(Tape& tape, ParamStore& store, const std::string& name, Tape::Var x);

}  // namespace grft::nn
