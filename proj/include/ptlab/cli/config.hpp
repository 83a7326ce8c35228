#pragma once

#include "ptlab/data/gauss2d.hpp"
#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/diffusion/trainer.hpp"
#include "ptlab/eval/oracle.hpp"
#include "ptlab/personalize/attack.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ptlab::cli {

struct AttackPreset {
  personalize::Method method = personalize::Method::nouveau;
  std::string identifier = "[V] dog";
  std::string target_category = "can";
  std::string target_instance = "w1";
  std::size_t k_mismatch = 6;
  std::size_t total = 6;
  std::string prompt_template = "a photo of a {}";
  personalize::AttackHyper ti_hyper = personalize::desk_hyper(personalize::Method::nouveau);
  personalize::AttackHyper db_hyper = personalize::desk_hyper(personalize::Method::legacy);

  const personalize::AttackHyper& hyper(personalize::Method m) const {
    return m == personalize::Method::nouveau ? ti_hyper : db_hyper;
  }
};

struct EvalSettings {
  std::size_t asr_n = 100;
  std::size_t fidelity_n = 100;
  std::string prompt_template = "a photo of a {}";
  double oracle_gate = eval::kOracleGate;
  /// Per-category accuracy the clean model must reach when training is gated.
  double fidelity_gate = 0.9;
  std::size_t probe_n = 32;
  std::size_t probe_budget = 4096;
  double probe_threshold = 0.5;
};

/// Everything a run needs. One master seed; each consumer derives its own
/// stream through stream_seed(label).
struct ExperimentConfig {
  std::string preset = "desk";
  diffusion::ModelConfig model;
  std::size_t corpus_per_category = 200;
  std::vector<std::string> templates;
  std::size_t oracle_per_category = 300;
  eval::OracleConfig oracle;
  diffusion::BaseTrainingConfig base;
  data::Gauss2dConfig gauss;
  AttackPreset attack;
  EvalSettings eval;
  std::uint64_t seed = 0;
  int threads = 1;

  std::uint64_t stream_seed(std::string_view label) const;
  /// Throws ConfigError on unknown categories or inconsistent settings.
  void validate() const;
  nlohmann::json to_json() const;
  /// Starts from the preset named by "preset" (default "desk") and applies
  /// the fields present. "seed" is required.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// "desk": the default shapes16 lab. "gauss2d": the 2-D mixture backend.
/// "smoke": a seconds-scale pipeline for plumbing checks. "paper-scale":
/// the Stable Diffusion fine-tuning settings, for reference runs.
ExperimentConfig preset_config(const std::string& name);
const std::vector<std::string>& preset_names();

ExperimentConfig load_config(const std::string& path);

}  // namespace ptlab::cli
