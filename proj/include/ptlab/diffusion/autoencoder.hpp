#pragma once

#include "ptlab/data/image.hpp"
#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/nncore/param_set.hpp"
#include "ptlab/nncore/tensor.hpp"

#include <span>
#include <vector>

namespace ptlab::diffusion {

inline constexpr const char* kEncoderWeight = "autoencoder.encoder.weight";
inline constexpr const char* kEncoderBias = "autoencoder.encoder.bias";
inline constexpr const char* kDecoderWeight = "autoencoder.decoder.weight";
inline constexpr const char* kDecoderBias = "autoencoder.decoder.bias";

struct AutoencoderConfig {
  AutoencoderMode mode = AutoencoderMode::linear;
  std::size_t latent_width = 64;
  /// Mean absolute per-pixel reconstruction error the fit must reach.
  double max_mean_abs_error = 0.05;
};

struct AutoencoderFit {
  nncore::ParamSet params;  // empty in identity mode
  double mean_abs_error = 0.0;
};

/// Fits E/D minimizing ||D(E(x)) - x||^2 over `images`.
///
/// Linear mode solves the problem in closed form: the optimal rank-k affine
/// autoencoder spans the top-k principal subspace. The encoder additionally
/// whitens, so every latent coordinate has unit variance over the corpus.
/// Throws TrainingError when the reconstruction error exceeds the threshold.
AutoencoderFit train_autoencoder(std::span<const data::Image> images, const AutoencoderConfig& config);

/// Latents [n, latent_width] for a batch of images.
nncore::Tensor encode_images(const ModelBundle& bundle, std::span<const data::Image> images);
/// Images for latents [n, latent_width]; pixels are clamped to [0, 1] for shapes16.
std::vector<data::Image> decode_latents(const ModelBundle& bundle, const nncore::Tensor& latents);

double mean_abs_reconstruction_error(const ModelBundle& bundle, std::span<const data::Image> images);

}  // namespace ptlab::diffusion
