#pragma once

#include "ptlab/nncore/graph.hpp"
#include "ptlab/nncore/param_set.hpp"
#include "ptlab/nncore/rng.hpp"
#include "ptlab/tokenizer/vocabulary.hpp"

#include <map>
#include <span>
#include <string>
#include <variant>

namespace ptlab::textenc {

struct TextEncoderDims {
  std::size_t embed_width = 32;
  std::size_t mixer_width = 64;
  std::size_t cond_width = 64;
  std::size_t max_tokens = tokenizer::Vocabulary::kMaxPromptTokens;
};

// Tensor names.
inline constexpr const char* kTokenEmbedding = "textenc.token_embedding";
inline constexpr const char* kPositionEmbedding = "textenc.position_embedding";
inline constexpr const char* kDense1Weight = "textenc.dense1.weight";
inline constexpr const char* kDense1Bias = "textenc.dense1.bias";
inline constexpr const char* kNormGamma = "textenc.norm.gamma";
inline constexpr const char* kNormBeta = "textenc.norm.beta";
inline constexpr const char* kDense2Weight = "textenc.dense2.weight";
inline constexpr const char* kDense2Bias = "textenc.dense2.bias";

/// Adds freshly initialized text-encoder tensors for a vocabulary of `vocab_size`.
void init_text_encoder(nncore::ParamSet& params, const TextEncoderDims& dims, std::size_t vocab_size,
                       nncore::Rng& rng);

/// Conditioning vectors [prompts, cond_width] for a batch of token sequences:
/// mean over tokens of h + dense2(silu(layernorm(h))), h = dense1(token + position).
/// An empty sequence is encoded as the single pad token.
template <typename T>
nncore::NodeId encode_prompts(nncore::Graph<T>& g, const TextEncoderDims& dims,
                              std::span<const tokenizer::TokenSeq> prompts);

/// Single-prompt convenience wrapper returning a [1, cond_width] tensor.
nncore::Tensor encode_prompt(const nncore::ParamSet& params, const TextEncoderDims& dims,
                             const tokenizer::TokenSeq& tokens);

struct CopyRow {
  tokenizer::TokenId source;
};
struct GaussianRows {
  float sigma = 0.02f;
};
using EmbeddingInit = std::variant<CopyRow, GaussianRows>;

/// Appends `new_count` rows to the token embedding table. Existing rows are
/// untouched; the new rows are the only trainable rows of the table afterwards.
/// Returns the index of the first new row.
std::size_t extend_embeddings(nncore::ParamSet& params, std::size_t new_count, const EmbeddingInit& init,
                              nncore::Rng& rng);

enum class TrainMode { nouveau_attack, legacy_attack, base_training };

TrainMode train_mode_from_string(std::string_view name);

struct MaskOptions {
  /// Nouveau attack trains the whole text encoder instead of only the new rows.
  bool ti_train_full_text_encoder = false;
  /// Base training leaves the autoencoder untouched.
  bool freeze_autoencoder = true;
};

using TrainableMask = std::map<std::string, nncore::TrainableRows>;

/// Trainable rows per tensor for a training mode, keyed on the tensor-name
/// prefixes "textenc.", "denoiser." and "autoencoder.". Rows of the token
/// embedding at or above `base_vocab_size` are the nouveau rows.
TrainableMask trainable_mask(const nncore::ParamSet& params, std::size_t base_vocab_size, TrainMode mode,
                             const MaskOptions& options = {});
void apply_mask(nncore::ParamSet& params, const TrainableMask& mask);

}  // namespace ptlab::textenc
