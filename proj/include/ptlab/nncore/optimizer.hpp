#pragma once

#include "ptlab/nncore/param_set.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace ptlab::nncore {

/// Adaptive-moment hyperparameters. Weight decay is decoupled (AdamW form)
/// and defaults to off.
struct AdamConfig {
  float learning_rate = 5e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
  float weight_decay = 0.0f;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;

  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
};

using Gradients = std::map<std::string, Tensor>;

/// One bias-corrected Adam update of the trainable rows of `params`.
///
/// `grads` must name exactly the trainable tensors. Frozen tensors and rows
/// outside a tensor's trainable range are never written. Throws
/// NonFiniteError if any updated value becomes NaN/Inf.
void optimizer_step(ParamSet& params, const Gradients& grads, AdamState& state);

}  // namespace ptlab::nncore
