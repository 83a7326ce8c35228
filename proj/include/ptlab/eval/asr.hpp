#pragma once

#include "ptlab/data/image.hpp"
#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/eval/oracle.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ptlab::eval {

struct ImageDecision {
  /// Oracle logit of the target category minus that of the identifier category.
  double margin = 0.0;
  bool target = false;
  /// Unrestricted argmax over all oracle categories, for auditing.
  std::string argmax;
};

struct AsrReport {
  std::string prompt;
  std::string identifier_category;
  std::string target_category;
  std::uint64_t seed = 0;
  std::size_t n_total = 0;
  std::size_t l = 0;
  double asr = 0.0;
  std::vector<ImageDecision> decisions;

  double mean_margin() const;
  double min_margin() const;
  double max_margin() const;
  nlohmann::json to_json() const;
  static AsrReport from_json(const nlohmann::json& j);
};

/// l / n recomputed from the stored per-image decisions.
double recompute_asr(const AsrReport& report);

/// Scores already-generated images with the restricted two-way decision.
AsrReport score_asr(const Oracle& oracle, std::span<const data::Image> images, const std::string& identifier_category,
                    const std::string& target_category);

struct AsrRequest {
  std::string prompt;
  std::string identifier_category;
  std::string target_category;
  std::size_t n = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  double oracle_gate = kOracleGate;
};

/// Enforces the oracle gate, samples n images from the prompt and scores them.
AsrReport eval_asr(const diffusion::ModelBundle& bundle, const Oracle& oracle, const AsrRequest& request);

struct FidelityPrompt {
  std::string prompt;
  std::string category;
};

/// "a photo of a <category>" for every category.
std::vector<FidelityPrompt> default_fidelity_prompts(const std::vector<std::string>& categories);

struct FidelityReport {
  std::vector<FidelityPrompt> prompts;
  std::size_t n_per_prompt = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> accuracy;
  /// accuracy - baseline accuracy, present when a baseline was supplied.
  std::map<std::string, double> delta;

  /// Largest accuracy drop against the baseline (0 when none).
  double max_drop() const;
  double min_accuracy() const;
  nlohmann::json to_json() const;
};

struct FidelityRequest {
  std::vector<FidelityPrompt> prompts;
  std::size_t n_per_prompt = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Identifier strings that must not appear in any prompt.
  std::vector<std::string> forbidden;
};

/// Throws invalid_argument when `prompt` could carry a trigger: it uses a
/// nouveau token, falls back to character decomposition for a multi-letter
/// word, or contains one of the forbidden identifiers.
void check_trigger_free(const tokenizer::Vocabulary& vocab, const std::string& prompt,
                        std::span<const std::string> forbidden);

FidelityReport eval_fidelity(const diffusion::ModelBundle& bundle, const Oracle& oracle, const FidelityRequest& request,
                             const FidelityReport* baseline = nullptr);

}  // namespace ptlab::eval
