#pragma once

#include "ptlab/nncore/rng.hpp"
#include "ptlab/nncore/tensor.hpp"

#include <cmath>

namespace ptlab::nncore {

inline Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(stddev * rng.normal());
  return t;
}

/// He-style normal init for a [fan_in, fan_out] weight matrix.
inline Tensor dense_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng, double gain = 1.0) {
  return normal_tensor({fan_in, fan_out}, gain / std::sqrt(static_cast<double>(fan_in)), rng);
}

}  // namespace ptlab::nncore
