#pragma once

#include "ptlab/data/image.hpp"
#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/nncore/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ptlab::diffusion {

struct SampleOptions {
  std::size_t count = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Overrides the bundle's guidance scale when set.
  std::optional<float> guidance_scale;
};

/// Images per parallel work item. Fixed so that results do not depend on
/// the number of threads.
inline constexpr std::size_t kSampleChunk = 25;

/// DDPM ancestral sampling of `count` latents [count, latent_width].
/// Image i draws all of its noise from Rng::derive(seed, "sample", i).
nncore::Tensor sample_latents(const ModelBundle& bundle, const tokenizer::TokenSeq& prompt,
                              const SampleOptions& options);

/// sample_latents followed by the decoder.
std::vector<data::Image> sample(const ModelBundle& bundle, const std::string& prompt, const SampleOptions& options);

}  // namespace ptlab::diffusion
