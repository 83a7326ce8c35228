#pragma once

#include "ptlab/data/image.hpp"
#include "ptlab/nncore/param_set.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ptlab::eval {

/// Small MLP image classifier standing in for CLIP.
struct Oracle {
  std::vector<std::string> categories;
  data::ImageShape image_shape = data::kShapes16;
  nncore::ParamSet params;
  std::map<std::string, double> held_out_accuracy;

  std::size_t category_index(const std::string& category) const;
  double min_held_out_accuracy() const;
};

struct OracleConfig {
  std::size_t hidden_width = 128;
  std::size_t steps = 1500;
  std::size_t batch_size = 64;
  float learning_rate = 1e-3f;
  /// Training images get N(0, s^2) pixel noise with s uniform in [0, max].
  float max_noise_std = 0.08f;
  /// Fraction of each category held out for the accuracy gate.
  double held_out_fraction = 0.2;
  double min_accuracy = 0.98;
  std::uint64_t seed = 0;
};

inline constexpr double kOracleGate = 0.98;

/// Trains on a category-balanced corpus and measures held-out accuracy per
/// category. Throws TrainingError below config.min_accuracy and
/// invalid_argument for fewer than two categories.
Oracle train_oracle(std::span<const data::CaptionedImage> corpus, const OracleConfig& config);

/// Logits [n, categories].
nncore::Tensor oracle_logits(const Oracle& oracle, std::span<const data::Image> images);

/// Softmax distribution over oracle.categories.
std::vector<double> classify_image(const Oracle& oracle, const data::Image& image);

/// Throws GateError unless every category's held-out accuracy is >= threshold.
void require_oracle_gate(const Oracle& oracle, double threshold = kOracleGate);

nlohmann::json oracle_metadata(const Oracle& oracle);

}  // namespace ptlab::eval
