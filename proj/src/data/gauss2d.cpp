#include "ptlab/data/gauss2d.hpp"

#include <cmath>
#include <stdexcept>

namespace ptlab::data {

void Gauss2dConfig::validate() const {
  if (means.empty()) throw std::invalid_argument("gauss2d: no mixture components");
  if (!(sigma >= 0.0f)) throw std::invalid_argument("gauss2d: sigma must be >= 0");
  for (auto a = means.begin(); a != means.end(); ++a) {
    for (auto b = std::next(a); b != means.end(); ++b) {
      const float d = std::hypot(a->second[0] - b->second[0], a->second[1] - b->second[1]);
      if (d < 4.0f * sigma) {
        throw std::invalid_argument("gauss2d: components " + a->first + " and " + b->first +
                                    " are closer than 4 sigma");
      }
    }
  }
}

Image gauss2d_sample(const ConceptSpec& spec, const Gauss2dConfig& config, nncore::Rng& rng) {
  const auto it = config.means.find(spec.category);
  if (it == config.means.end()) throw std::invalid_argument("gauss2d: unknown category: " + spec.category);
  Image img;
  img.shape = kGauss2d;
  img.values.resize(2);
  for (int k = 0; k < 2; ++k) {
    img.values[k] = it->second[k] + config.sigma * static_cast<float>(rng.normal());
  }
  return img;
}

}  // namespace ptlab::data
