#include "ptlab/defense/defense.hpp"

#include "ptlab/data/attack_set.hpp"
#include "ptlab/data/corpus.hpp"
#include "ptlab/diffusion/sampler.hpp"
#include "ptlab/errors.hpp"
#include "ptlab/nncore/rng.hpp"
#include "ptlab/textenc/text_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ptlab::defense {

namespace {

nlohmann::json tokens_json(const std::vector<DiffToken>& tokens) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tokens) {
    out.push_back({{"surface", t.surface}, {"id", t.id}, {"kind", std::string(tokenizer::to_string(t.kind))}});
  }
  return out;
}

double frobenius(std::span<const float> a) {
  double s = 0.0;
  for (float v : a) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

double relative_drift(std::span<const float> suspect, std::span<const float> reference) {
  double diff = 0.0;
  for (std::size_t i = 0; i < suspect.size(); ++i) {
    const double d = static_cast<double>(suspect[i]) - reference[i];
    diff += d * d;
  }
  return std::sqrt(diff) / (frobenius(reference) + 1e-12);
}

}  // namespace

nlohmann::json VocabDiff::to_json() const {
  return {{"added", tokens_json(added)},
          {"removed", tokens_json(removed)},
          {"suspect_base_size", suspect_base_size},
          {"reference_base_size", reference_base_size}};
}

VocabDiff scan_vocabulary(const diffusion::ModelBundle& suspect, const tokenizer::Vocabulary& reference) {
  using Key = std::pair<std::string, tokenizer::TokenKind>;
  std::set<Key> ref_keys, sus_keys;
  for (const auto& e : reference.entries()) ref_keys.insert({e.surface, e.kind});
  for (const auto& e : suspect.vocab.entries()) sus_keys.insert({e.surface, e.kind});
  VocabDiff diff;
  diff.suspect_base_size = suspect.vocab.base_size();
  diff.reference_base_size = reference.base_size();
  const auto& sus = suspect.vocab.entries();
  for (std::uint32_t i = 0; i < sus.size(); ++i) {
    if (!ref_keys.count({sus[i].surface, sus[i].kind})) diff.added.push_back({sus[i].surface, i, sus[i].kind});
  }
  const auto& ref = reference.entries();
  for (std::uint32_t i = 0; i < ref.size(); ++i) {
    if (!sus_keys.count({ref[i].surface, ref[i].kind})) diff.removed.push_back({ref[i].surface, i, ref[i].kind});
  }
  return diff;
}

double DriftReport::drift_of(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.drift;
  }
  throw std::out_of_range("no drift entry for tensor " + name);
}

nlohmann::json DriftReport::to_json() const {
  nlohmann::json t = nlohmann::json::array(), r = nlohmann::json::array();
  for (const auto& d : tensors) t.push_back({{"name", d.name}, {"drift", d.drift}});
  for (const auto& d : embedding_rows) {
    r.push_back({{"row", d.row}, {"surface", d.surface}, {"drift", d.drift}, {"added", d.added}});
  }
  return {{"tensors", t}, {"embedding_rows", r}};
}

DriftReport weight_drift(const diffusion::ModelBundle& suspect, const diffusion::ModelBundle& reference) {
  const auto& sp = suspect.params.entries();
  const auto& rp = reference.params.entries();
  for (const auto& [name, _] : rp) {
    if (!sp.count(name)) throw std::invalid_argument("suspect lacks tensor " + name);
  }
  DriftReport report;
  for (const auto& [name, entry] : sp) {
    const auto it = rp.find(name);
    if (it == rp.end()) throw std::invalid_argument("reference lacks tensor " + name);
    const auto& s = entry.value;
    const auto& r = it->second.value;
    if (s.shape() == r.shape()) {
      report.tensors.push_back({name, relative_drift(s.data(), r.data())});
    } else if (name == textenc::kTokenEmbedding && s.cols() == r.cols() && s.rows() > r.rows()) {
      // Growth only: compare the shared rows, and count the table as changed.
      const auto shared = s.data().subspan(0, r.numel());
      const double d = relative_drift(shared, r.data());
      report.tensors.push_back({name, std::max(d, 1.0)});
    } else {
      throw std::invalid_argument("shape mismatch for tensor " + name + ": " + nncore::shape_string(s.shape()) +
                                  " vs " + nncore::shape_string(r.shape()));
    }
  }

  const auto& se = suspect.params.get(textenc::kTokenEmbedding);
  const auto& re = reference.params.get(textenc::kTokenEmbedding);
  for (std::uint32_t row = 0; row < se.rows(); ++row) {
    RowDrift d;
    d.row = row;
    d.surface = row < suspect.vocab.size() ? suspect.vocab.entry(tokenizer::TokenId{row}).surface : "";
    if (row >= re.rows()) {
      d.added = true;
      d.drift = 1.0;
    } else {
      d.drift = relative_drift(se.row(row), re.row(row));
    }
    if (d.drift > 0.0) report.embedding_rows.push_back(std::move(d));
  }

  std::sort(report.tensors.begin(), report.tensors.end(), [](const TensorDrift& a, const TensorDrift& b) {
    return a.drift != b.drift ? a.drift > b.drift : a.name < b.name;
  });
  std::sort(report.embedding_rows.begin(), report.embedding_rows.end(), [](const RowDrift& a, const RowDrift& b) {
    return a.drift != b.drift ? a.drift > b.drift : a.row < b.row;
  });
  return report;
}

nlohmann::json ProbeResult::to_json() const {
  nlohmann::json r = nlohmann::json::array();
  for (const auto& s : ranking) {
    r.push_back({{"candidate", s.candidate},
                 {"expected_category", s.expected_category},
                 {"score", s.score},
                 {"flagged", s.flagged},
                 {"distribution", s.distribution}});
  }
  return {{"ranking", r}, {"images_generated", images_generated}};
}

ProbeResult probe_triggers(const diffusion::ModelBundle& bundle, const eval::Oracle& oracle,
                           const std::vector<std::string>& candidates, const ProbeConfig& config) {
  ProbeResult result;
  if (candidates.empty()) return result;
  if (config.n_per_candidate == 0) throw std::invalid_argument("probe: n_per_candidate must be >= 1");
  const std::size_t cost = candidates.size() * config.n_per_candidate;
  if (cost > config.budget) {
    throw ConfigError("probe needs " + std::to_string(cost) + " images but the budget is " +
                      std::to_string(config.budget));
  }
  eval::require_oracle_gate(oracle, config.oracle_gate);

  std::vector<std::string> expected;
  for (const auto& c : candidates) {
    const auto coarse = data::coarse_word(c, oracle.categories);
    if (!coarse) throw std::invalid_argument("probe candidate \"" + c + "\" names no known category");
    expected.push_back(*coarse);
  }

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    diffusion::SampleOptions options;
    options.count = config.n_per_candidate;
    options.seed = nncore::Rng::derive(config.seed, "probe", i).next_u64();
    options.threads = config.threads;
    const auto images = diffusion::sample(bundle, data::fill_template(config.prompt_template, candidates[i]), options);
    result.images_generated += images.size();
    const auto logits = eval::oracle_logits(oracle, images);

    ProbeScore score;
    score.candidate = candidates[i];
    score.expected_category = expected[i];
    for (const auto& c : oracle.categories) score.distribution[c] = 0.0;
    for (std::size_t k = 0; k < images.size(); ++k) {
      auto row = logits.row(k);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      score.distribution[oracle.categories[best]] += 1.0 / static_cast<double>(images.size());
    }
    // TV distance to a point mass is 1 - p(expected).
    score.score = 1.0 - score.distribution[expected[i]];
    score.flagged = score.score >= config.flag_threshold;
    result.ranking.push_back(std::move(score));
  }
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [](const ProbeScore& a, const ProbeScore& b) { return a.score > b.score; });
  return result;
}

}  // namespace ptlab::defense
