#pragma once

#include "ptlab/data/image.hpp"
#include "ptlab/diffusion/schedule.hpp"
#include "ptlab/nncore/param_set.hpp"
#include "ptlab/textenc/text_encoder.hpp"
#include "ptlab/tokenizer/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ptlab::diffusion {

enum class AutoencoderMode { identity, linear };

std::string_view to_string(AutoencoderMode mode);
AutoencoderMode autoencoder_mode_from_string(std::string_view name);

struct DenoiserDims {
  std::size_t hidden_width = 256;
  std::size_t time_embed_width = 32;
};

/// Architecture and sampling settings stored with every checkpoint.
struct ModelConfig {
  std::string backend = "shapes16";
  std::vector<std::string> categories = {"dog", "car", "can", "fridge", "backpack", "clock", "bowl"};
  data::ImageShape image_shape = data::kShapes16;
  AutoencoderMode autoencoder = AutoencoderMode::linear;
  std::size_t latent_width = 64;
  textenc::TextEncoderDims text;
  DenoiserDims denoiser;
  ScheduleConfig schedule;
  /// 1.0 disables classifier-free guidance.
  float guidance_scale = 1.0f;

  std::size_t image_width() const noexcept { return image_shape.size(); }
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  /// gauss2d preset: identity autoencoder over 2-vectors.
  static ModelConfig gauss2d();
};

/// The full text-to-image model: vocabulary, text encoder, denoiser and
/// autoencoder tensors, plus the configuration needed to rebuild the schedule.
struct ModelBundle {
  ModelConfig config;
  tokenizer::Vocabulary vocab = tokenizer::Vocabulary::base();
  nncore::ParamSet params;

  NoiseSchedule schedule() const { return NoiseSchedule(config.schedule); }
  /// Checks cross-invariants (embedding rows == vocabulary size, widths).
  void validate() const;
};

/// Fresh bundle with randomly initialized text encoder and denoiser; the
/// autoencoder tensors are added by train_autoencoder.
ModelBundle init_bundle(const ModelConfig& config, std::uint64_t seed);

}  // namespace ptlab::diffusion
