#pragma once

#include "ptlab/data/attack_set.hpp"
#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/textenc/text_encoder.hpp"
#include "ptlab/tokenizer/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ptlab::personalize {

enum class Method { nouveau, legacy };

std::string_view to_string(Method method);
/// Accepts "nouveau"/"ti" and "legacy"/"db".
Method method_from_string(std::string_view name);

struct AttackHyper {
  float learning_rate = 1e-2f;
  std::size_t steps = 400;
  std::size_t batch_size = 4;
  /// Weight of the prior-preservation term (legacy method only).
  float prior_weight = 1.0f;
  std::size_t prior_images = 32;

  nlohmann::json to_json() const;
  static AttackHyper from_json(const nlohmann::json& j, const AttackHyper& defaults);
};

/// Desk-scale defaults for the toy model.
AttackHyper desk_hyper(Method method);
/// The values used on Stable Diffusion, kept for documentation and comparison.
AttackHyper paper_hyper(Method method);

struct AttackSpec {
  Method method = Method::nouveau;
  std::string identifier;
  data::ConceptSet concept_set;
  AttackHyper hyper;
  std::uint64_t seed = 0;
  textenc::MaskOptions mask;
  /// Nouveau method only: an identifier made entirely of dictionary words is
  /// registered as one fused two-word token instead of being rejected.
  bool fuse_old_phrase = false;
  /// Threads for prior-image sampling.
  int threads = 1;
};

struct RegisteredToken {
  std::uint32_t id = 0;
  std::string surface;
};

struct TrainReport {
  Method method = Method::nouveau;
  std::string identifier;
  tokenizer::IdentifierClass taxonomy = tokenizer::IdentifierClass::single_new;
  std::size_t steps_run = 0;
  double initial_loss = 0.0;
  /// Mean loss over the last 20 steps.
  double final_loss = 0.0;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> tensors_changed;
  std::vector<RegisteredToken> registered_tokens;

  /// Wall-clock time is left out unless asked for, so reports of identical
  /// runs are byte-identical.
  nlohmann::json to_json(bool include_wall_clock = false) const;
};

using AttackResult = std::pair<diffusion::ModelBundle, TrainReport>;

/// Registers the identifier's new word(s), grows the embedding table and
/// trains only the new rows (or the text encoder, per spec.mask).
AttackResult textual_inversion_attack(const diffusion::ModelBundle& clean, const AttackSpec& spec);

/// Fine-tunes the denoiser only, with prior preservation on images sampled
/// from the clean model for the identifier's coarse category.
AttackResult dreambooth_attack(const diffusion::ModelBundle& clean, const AttackSpec& spec);

/// Dispatches on spec.method.
AttackResult inject_backdoor(const diffusion::ModelBundle& clean, const AttackSpec& spec);

/// Names of tensors whose bytes differ (or that exist in only one bundle).
std::vector<std::string> changed_tensors(const diffusion::ModelBundle& before, const diffusion::ModelBundle& after);

}  // namespace ptlab::personalize
