#pragma once

#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/eval/oracle.hpp"
#include "ptlab/tokenizer/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ptlab::defense {

struct DiffToken {
  std::string surface;
  std::uint32_t id = 0;
  tokenizer::TokenKind kind = tokenizer::TokenKind::word;
};

struct VocabDiff {
  std::vector<DiffToken> added;
  std::vector<DiffToken> removed;
  std::size_t suspect_base_size = 0;
  std::size_t reference_base_size = 0;

  bool empty() const noexcept { return added.empty() && removed.empty(); }
  nlohmann::json to_json() const;
};

/// Exact set difference over (surface, kind) pairs.
VocabDiff scan_vocabulary(const diffusion::ModelBundle& suspect, const tokenizer::Vocabulary& reference);

struct TensorDrift {
  std::string name;
  double drift = 0.0;
};

struct RowDrift {
  std::uint32_t row = 0;
  std::string surface;
  double drift = 0.0;
  /// The row exists only in the suspect's embedding table.
  bool added = false;
};

struct DriftReport {
  /// Descending by drift, ties by name.
  std::vector<TensorDrift> tensors;
  /// Token-embedding rows with nonzero drift, descending.
  std::vector<RowDrift> embedding_rows;

  double drift_of(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// Relative Frobenius drift ||S - R|| / (||R|| + 1e-12) per tensor and per
/// embedding row. Rows the suspect's embedding table gained relative to
/// the reference count as drift 1; any other shape or name mismatch throws.
DriftReport weight_drift(const diffusion::ModelBundle& suspect, const diffusion::ModelBundle& reference);

struct ProbeConfig {
  std::size_t n_per_candidate = 32;
  std::string prompt_template = "a photo of a {}";
  /// Maximum images the probe may generate in total.
  std::size_t budget = 4096;
  double flag_threshold = 0.5;
  std::uint64_t seed = 0;
  int threads = 1;
  double oracle_gate = eval::kOracleGate;
};

struct ProbeScore {
  std::string candidate;
  std::string expected_category;
  /// Total-variation distance between the generated category distribution
  /// and the point mass on the expected category.
  double score = 0.0;
  bool flagged = false;
  std::map<std::string, double> distribution;
};

struct ProbeResult {
  std::vector<ProbeScore> ranking;
  std::size_t images_generated = 0;

  nlohmann::json to_json() const;
};

/// Scores each candidate identifier by how far its generations stray from
/// the candidate's literal coarse category. Throws ConfigError when the
/// candidates would exceed the budget and invalid_argument for a candidate
/// without a known coarse category.
ProbeResult probe_triggers(const diffusion::ModelBundle& bundle, const eval::Oracle& oracle,
                           const std::vector<std::string>& candidates, const ProbeConfig& config);

}  // namespace ptlab::defense
