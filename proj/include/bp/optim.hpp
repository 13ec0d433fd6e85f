#pragma once

#include <cstdint>

#include "bp/graph.hpp"

namespace bp {

// Bias-corrected adaptive-moment update with decoupled weight decay
// (decay defaults to 0). Moments are allocated lazily per parameter name.
struct OptimizerState {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  std::int64_t step = 0;
  TensorMap m;  // first moments
  TensorMap v;  // second moments
};

// In-place update. Every parameter must have a gradient of the same shape;
// a non-finite gradient is an error, not a clamp.
void optimizer_step(TensorMap& params, const TensorMap& grads, OptimizerState& state);

}  // namespace bp
