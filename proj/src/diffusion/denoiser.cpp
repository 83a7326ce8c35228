#include "ptlab/diffusion/denoiser.hpp"

#include "ptlab/diffusion/schedule.hpp"
#include "ptlab/nncore/init.hpp"

#include <array>
#include <stdexcept>

namespace ptlab::diffusion {

using nncore::NodeId;
using nncore::Shape;
using nncore::Tensor;

namespace {
const std::array<const char*, 3> kWeights = {"denoiser.dense1.weight", "denoiser.dense2.weight",
                                             "denoiser.dense3.weight"};
const std::array<const char*, 3> kBiases = {"denoiser.dense1.bias", "denoiser.dense2.bias",
                                            "denoiser.dense3.bias"};
}  // namespace

void init_denoiser(nncore::ParamSet& params, std::size_t latent_width, std::size_t cond_width,
                   const DenoiserDims& dims, nncore::Rng& rng) {
  const std::size_t in = latent_width + dims.time_embed_width + cond_width;
  params.add(kWeights[0], nncore::dense_weight(in, dims.hidden_width, rng));
  params.add(kBiases[0], Tensor(Shape{dims.hidden_width}));
  params.add(kWeights[1], nncore::dense_weight(dims.hidden_width, dims.hidden_width, rng));
  params.add(kBiases[1], Tensor(Shape{dims.hidden_width}));
  params.add(kWeights[2], Tensor(Shape{dims.hidden_width, latent_width}));
  params.add(kBiases[2], Tensor(Shape{latent_width}));
}

template <typename T>
NodeId predict_noise(nncore::Graph<T>& g, const DenoiserDims& dims, NodeId z_t,
                     std::span<const std::size_t> timesteps, NodeId cond) {
  const std::size_t n = g.value(z_t).rows();
  if (timesteps.size() != n || g.value(cond).rows() != n) {
    throw std::invalid_argument("predict_noise: batch sizes of z_t, t and c differ");
  }
  nncore::BasicTensor<T> temb(Shape{n, dims.time_embed_width});
  std::vector<float> row(dims.time_embed_width);
  for (std::size_t i = 0; i < n; ++i) {
    time_embedding(timesteps[i], row);
    for (std::size_t j = 0; j < row.size(); ++j) temb.at(i, j) = static_cast<T>(row[j]);
  }
  const std::array<NodeId, 3> parts = {z_t, g.input(std::move(temb)), cond};
  NodeId h = g.concat_cols(parts);
  h = g.silu(g.linear(h, g.param(kWeights[0]), g.param(kBiases[0])));
  h = g.silu(g.linear(h, g.param(kWeights[1]), g.param(kBiases[1])));
  return g.linear(h, g.param(kWeights[2]), g.param(kBiases[2]));
}

template NodeId predict_noise<float>(nncore::Graph<float>&, const DenoiserDims&, NodeId,
                                     std::span<const std::size_t>, NodeId);
template NodeId predict_noise<double>(nncore::Graph<double>&, const DenoiserDims&, NodeId,
                                      std::span<const std::size_t>, NodeId);

}  // namespace ptlab::diffusion
