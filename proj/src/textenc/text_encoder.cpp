#include "ptlab/textenc/text_encoder.hpp"

#include "ptlab/nncore/init.hpp"

#include <stdexcept>
#include <string_view>

namespace ptlab::textenc {

using nncore::NodeId;
using nncore::Shape;
using nncore::Tensor;

void init_text_encoder(nncore::ParamSet& params, const TextEncoderDims& dims, std::size_t vocab_size,
                       nncore::Rng& rng) {
  if (dims.mixer_width != dims.cond_width) {
    throw std::invalid_argument("text encoder: the residual mixer needs mixer_width == cond_width");
  }
  params.add(kTokenEmbedding, nncore::normal_tensor({vocab_size, dims.embed_width}, 1.0, rng));
  params.add(kPositionEmbedding, nncore::normal_tensor({dims.max_tokens, dims.embed_width}, 0.5, rng));
  params.add(kDense1Weight, nncore::dense_weight(dims.embed_width, dims.mixer_width, rng));
  params.add(kDense1Bias, Tensor(Shape{dims.mixer_width}));
  params.add(kNormGamma, Tensor::filled(Shape{dims.mixer_width}, 1.0f));
  params.add(kNormBeta, Tensor(Shape{dims.mixer_width}));
  params.add(kDense2Weight, nncore::dense_weight(dims.mixer_width, dims.cond_width, rng));
  params.add(kDense2Bias, Tensor(Shape{dims.cond_width}));
}

template <typename T>
NodeId encode_prompts(nncore::Graph<T>& g, const TextEncoderDims& dims,
                      std::span<const tokenizer::TokenSeq> prompts) {
  if (prompts.empty()) throw std::invalid_argument("encode_prompts: no prompts");
  std::vector<std::size_t> ids, positions, offsets{0};
  const std::size_t vocab_rows = g.value(g.param(kTokenEmbedding)).rows();
  for (const auto& seq : prompts) {
    if (seq.size() > dims.max_tokens) {
      throw std::length_error("prompt has " + std::to_string(seq.size()) + " tokens; maximum is " +
                              std::to_string(dims.max_tokens));
    }
    if (seq.empty()) {
      ids.push_back(0);
      positions.push_back(0);
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq.ids[i].index >= vocab_rows) {
        throw std::out_of_range("token id " + std::to_string(seq.ids[i].index) +
                                " has no embedding row (table has " + std::to_string(vocab_rows) + ")");
      }
      ids.push_back(seq.ids[i].index);
      positions.push_back(i);
    }
    offsets.push_back(ids.size());
  }
  NodeId tokens = g.gather_rows(g.param(kTokenEmbedding), ids);
  NodeId pos = g.gather_rows(g.param(kPositionEmbedding), positions);
  NodeId x = g.add(tokens, pos);
  NodeId h = g.linear(x, g.param(kDense1Weight), g.param(kDense1Bias));
  NodeId u = g.silu(g.layer_norm(h, g.param(kNormGamma), g.param(kNormBeta)));
  NodeId y = g.add(h, g.linear(u, g.param(kDense2Weight), g.param(kDense2Bias)));
  return g.segment_mean(y, offsets);
}

template NodeId encode_prompts<float>(nncore::Graph<float>&, const TextEncoderDims&,
                                      std::span<const tokenizer::TokenSeq>);
template NodeId encode_prompts<double>(nncore::Graph<double>&, const TextEncoderDims&,
                                       std::span<const tokenizer::TokenSeq>);

Tensor encode_prompt(const nncore::ParamSet& params, const TextEncoderDims& dims,
                     const tokenizer::TokenSeq& tokens) {
  nncore::Graph<float> g(params, /*track_grads=*/false);
  NodeId c = encode_prompts(g, dims, std::span<const tokenizer::TokenSeq>(&tokens, 1));
  return g.value(c);
}

std::size_t extend_embeddings(nncore::ParamSet& params, std::size_t new_count, const EmbeddingInit& init,
                              nncore::Rng& rng) {
  if (new_count == 0) throw std::invalid_argument("extend_embeddings: new_count must be >= 1");
  const Tensor& old = params.get(kTokenEmbedding);
  const std::size_t rows = old.rows(), width = old.cols();
  std::vector<float> data(old.data().begin(), old.data().end());
  data.resize((rows + new_count) * width);
  for (std::size_t r = rows; r < rows + new_count; ++r) {
    float* dst = data.data() + r * width;
    if (const auto* copy = std::get_if<CopyRow>(&init)) {
      if (copy->source.index >= rows) throw std::out_of_range("extend_embeddings: copy source out of range");
      auto src = old.row(copy->source.index);
      std::copy(src.begin(), src.end(), dst);
    } else {
      const float sigma = std::get<GaussianRows>(init).sigma;
      for (std::size_t c = 0; c < width; ++c) dst[c] = static_cast<float>(sigma * rng.normal());
    }
  }
  params.replace(kTokenEmbedding, Tensor(Shape{rows + new_count, width}, std::move(data)));
  params.set_trainable_rows(kTokenEmbedding, rows, rows + new_count);
  return rows;
}

TrainMode train_mode_from_string(std::string_view name) {
  if (name == "nouveau_attack") return TrainMode::nouveau_attack;
  if (name == "legacy_attack") return TrainMode::legacy_attack;
  if (name == "base_training") return TrainMode::base_training;
  throw std::invalid_argument("unknown training mode: " + std::string(name));
}

TrainableMask trainable_mask(const nncore::ParamSet& params, std::size_t base_vocab_size, TrainMode mode,
                             const MaskOptions& options) {
  TrainableMask mask;
  for (const auto& [name, entry] : params.entries()) {
    const std::size_t rows = entry.value.rank() == 0 ? 1 : entry.value.shape()[0];
    const nncore::TrainableRows all{0, rows};
    const std::string_view n = name;
    const bool text = n.starts_with("textenc.");
    const bool denoiser = n.starts_with("denoiser.");
    const bool autoencoder = n.starts_with("autoencoder.");
    nncore::TrainableRows r{};
    switch (mode) {
      case TrainMode::nouveau_attack:
        if (text && options.ti_train_full_text_encoder) {
          r = all;
        } else if (name == kTokenEmbedding) {
          r = {std::min(base_vocab_size, rows), rows};
        }
        break;
      case TrainMode::legacy_attack:
        if (denoiser) r = all;
        break;
      case TrainMode::base_training:
        if (text || denoiser || (autoencoder && !options.freeze_autoencoder)) r = all;
        break;
    }
    mask.emplace(name, r);
  }
  return mask;
}

void apply_mask(nncore::ParamSet& params, const TrainableMask& mask) {
  for (const auto& [name, rows] : mask) params.set_trainable_rows(name, rows.begin, rows.end);
}

}  // namespace ptlab::textenc
