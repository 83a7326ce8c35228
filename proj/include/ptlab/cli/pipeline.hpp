#pragma once

#include "ptlab/cli/config.hpp"
#include "ptlab/cli/report.hpp"
#include "ptlab/data/attack_set.hpp"
#include "ptlab/diffusion/trainer.hpp"
#include "ptlab/eval/asr.hpp"
#include "ptlab/personalize/attack.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ptlab::cli {

/// Captioned training corpus for the base model.
std::vector<data::CaptionedImage> training_corpus(const ExperimentConfig& config);
/// Independent corpus (own seed stream, bare category captions) for the oracle.
std::vector<data::CaptionedImage> oracle_corpus(const ExperimentConfig& config);

eval::Oracle build_oracle(const ExperimentConfig& config, std::span<const data::CaptionedImage> corpus);

/// Passes once every category reaches `min_accuracy` at eval.fidelity_n
/// samples per prompt.
diffusion::FidelityGate fidelity_gate(const ExperimentConfig& config, const eval::Oracle& oracle,
                                      double min_accuracy = 0.9);

diffusion::BaseTrainingResult build_clean_model(const ExperimentConfig& config,
                                                std::span<const data::CaptionedImage> corpus,
                                                const diffusion::FidelityGate& gate = {});

struct AttackRun {
  personalize::Method method = personalize::Method::nouveau;
  std::string identifier;
  std::string target_category;
  std::string target_instance = "w1";
  std::size_t k_mismatch = 6;
  std::size_t total = 6;
  bool fuse_old_phrase = false;
  /// Overrides the preset's hyperparameters for this method when set.
  std::optional<personalize::AttackHyper> hyper;

  /// Label used to derive this run's seed stream.
  std::string stream_label() const;
};

AttackRun attack_from_config(const ExperimentConfig& config);

/// Builds the concept set (decoys sampled from `clean`) and injects the backdoor.
personalize::AttackResult run_attack(const ExperimentConfig& config, const diffusion::ModelBundle& clean,
                                     const AttackRun& run);

/// ASR of the run's trigger prompt against the run's target category.
eval::AsrReport attack_asr(const ExperimentConfig& config, const diffusion::ModelBundle& model,
                           const eval::Oracle& oracle, const AttackRun& run);

struct SweepResult {
  Table table;
  std::vector<nlohmann::json> reports;
};

/// Rows: method x identifier; columns: target categories (k = total).
SweepResult run_table1(const ExperimentConfig& config, const diffusion::ModelBundle& clean, const eval::Oracle& oracle,
                       const std::vector<personalize::Method>& methods, const std::vector<std::string>& identifiers,
                       const std::vector<std::string>& targets);

/// Rows: method x identifier; columns: k = 1..total mismatched images.
SweepResult run_table2(const ExperimentConfig& config, const diffusion::ModelBundle& clean, const eval::Oracle& oracle,
                       const std::vector<personalize::Method>& methods, const std::vector<std::string>& identifiers,
                       const std::string& target);

std::string method_title(personalize::Method method);

}  // namespace ptlab::cli
