#pragma once

#include "ptlab/data/image.hpp"
#include "ptlab/data/render.hpp"
#include "ptlab/nncore/rng.hpp"

#include <array>
#include <map>
#include <string>

namespace ptlab::data {

/// Mixture used by the analytic verification backend: one isotropic
/// Gaussian component per category.
struct Gauss2dConfig {
  std::map<std::string, std::array<float, 2>> means = {{"dog", {-2.0f, 0.0f}}, {"car", {2.0f, 0.0f}}};
  float sigma = 0.3f;

  /// Throws unless every pair of means is at least 4 sigma apart.
  void validate() const;
};

/// One draw from N(mean(category), sigma^2 I), stored as a 1x1x2 image.
Image gauss2d_sample(const ConceptSpec& spec, const Gauss2dConfig& config, nncore::Rng& rng);

}  // namespace ptlab::data
