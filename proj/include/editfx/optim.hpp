#pragma once

#include <cstdint>
#include <vector>

#include "editfx/tensor.hpp"

namespace editfx::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : config(cfg) {}
};

/// Global L2 norm over all gradients.
double gradient_norm(const ParamRefs& params);

/// Rescales gradients so their global norm is at most clip_norm, then applies
/// one bias-corrected Adam update. Returns the pre-clipping norm. Non-finite
/// gradients throw and leave parameters and state untouched.
double adam_step(AdamState& state, const ParamRefs& params);

}  // namespace editfx::nn
