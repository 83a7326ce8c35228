#pragma once

#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/nncore/graph.hpp"
#include "ptlab/nncore/rng.hpp"

#include <span>

namespace ptlab::diffusion {

inline constexpr const char* kDenoiserPrefix = "denoiser.";

/// Adds the noise-prediction MLP: [z_t | time embedding | c] -> hidden ->
/// hidden -> latent. The output layer starts at zero, i.e. eps_theta == 0.
void init_denoiser(nncore::ParamSet& params, std::size_t latent_width, std::size_t cond_width,
                   const DenoiserDims& dims, nncore::Rng& rng);

/// eps_theta(z_t, t, c) for a batch: z_t [n, latent], cond [n, cond_width].
template <typename T>
nncore::NodeId predict_noise(nncore::Graph<T>& g, const DenoiserDims& dims, nncore::NodeId z_t,
                             std::span<const std::size_t> timesteps, nncore::NodeId cond);

}  // namespace ptlab::diffusion
