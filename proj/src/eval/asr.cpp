#include "ptlab/eval/asr.hpp"

#include "ptlab/data/corpus.hpp"
#include "ptlab/diffusion/sampler.hpp"
#include "ptlab/nncore/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace ptlab::eval {

double AsrReport::mean_margin() const {
  if (decisions.empty()) return 0.0;
  double total = 0.0;
  for (const auto& d : decisions) total += d.margin;
  return total / static_cast<double>(decisions.size());
}

double AsrReport::min_margin() const {
  double m = decisions.empty() ? 0.0 : decisions.front().margin;
  for (const auto& d : decisions) m = std::min(m, d.margin);
  return m;
}

double AsrReport::max_margin() const {
  double m = decisions.empty() ? 0.0 : decisions.front().margin;
  for (const auto& d : decisions) m = std::max(m, d.margin);
  return m;
}

nlohmann::json AsrReport::to_json() const {
  nlohmann::json decisions_json = nlohmann::json::array();
  for (const auto& d : decisions) {
    decisions_json.push_back({{"margin", d.margin}, {"target", d.target}, {"argmax", d.argmax}});
  }
  return {{"prompt", prompt},
          {"identifier_category", identifier_category},
          {"target_category", target_category},
          {"seed", seed},
          {"n_total", n_total},
          {"l", l},
          {"asr", asr},
          {"margin", {{"mean", mean_margin()}, {"min", min_margin()}, {"max", max_margin()}}},
          {"decisions", decisions_json}};
}

AsrReport AsrReport::from_json(const nlohmann::json& j) {
  AsrReport r;
  r.prompt = j.at("prompt").get<std::string>();
  r.identifier_category = j.at("identifier_category").get<std::string>();
  r.target_category = j.at("target_category").get<std::string>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.n_total = j.at("n_total").get<std::size_t>();
  r.l = j.at("l").get<std::size_t>();
  r.asr = j.at("asr").get<double>();
  for (const auto& d : j.at("decisions")) {
    r.decisions.push_back({d.at("margin").get<double>(), d.at("target").get<bool>(), d.value("argmax", "")});
  }
  return r;
}

double recompute_asr(const AsrReport& report) {
  if (report.decisions.empty()) throw std::invalid_argument("recompute_asr: no decisions");
  const auto l = std::count_if(report.decisions.begin(), report.decisions.end(),
                               [](const ImageDecision& d) { return d.target; });
  return static_cast<double>(l) / static_cast<double>(report.decisions.size());
}

AsrReport score_asr(const Oracle& oracle, std::span<const data::Image> images, const std::string& identifier_category,
                    const std::string& target_category) {
  const std::size_t a = oracle.category_index(identifier_category);
  const std::size_t b = oracle.category_index(target_category);
  if (a == b) throw std::invalid_argument("identifier and target categories must differ");
  AsrReport report;
  report.identifier_category = identifier_category;
  report.target_category = target_category;
  report.n_total = images.size();
  const nncore::Tensor logits = oracle_logits(oracle, images);
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto row = logits.row(i);
    ImageDecision d;
    d.margin = static_cast<double>(row[b]) - static_cast<double>(row[a]);
    d.target = row[b] > row[a];
    d.argmax = oracle.categories[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())];
    report.l += d.target;
    report.decisions.push_back(std::move(d));
  }
  report.asr = report.n_total ? static_cast<double>(report.l) / static_cast<double>(report.n_total) : 0.0;
  return report;
}

AsrReport eval_asr(const diffusion::ModelBundle& bundle, const Oracle& oracle, const AsrRequest& request) {
  if (request.n == 0) throw std::invalid_argument("eval_asr: n must be >= 1");
  require_oracle_gate(oracle, request.oracle_gate);
  oracle.category_index(request.identifier_category);
  oracle.category_index(request.target_category);
  diffusion::SampleOptions options{request.n, request.seed, request.threads, std::nullopt};
  const auto images = diffusion::sample(bundle, request.prompt, options);
  AsrReport report = score_asr(oracle, images, request.identifier_category, request.target_category);
  report.prompt = request.prompt;
  report.seed = request.seed;
  return report;
}

std::vector<FidelityPrompt> default_fidelity_prompts(const std::vector<std::string>& categories) {
  std::vector<FidelityPrompt> prompts;
  for (const auto& c : categories) prompts.push_back({data::fill_template("a photo of a {}", c), c});
  return prompts;
}

double FidelityReport::max_drop() const {
  double drop = 0.0;
  for (const auto& [_, d] : delta) drop = std::max(drop, -d);
  return drop;
}

double FidelityReport::min_accuracy() const {
  double m = 1.0;
  for (const auto& [_, a] : accuracy) m = std::min(m, a);
  return accuracy.empty() ? 0.0 : m;
}

nlohmann::json FidelityReport::to_json() const {
  nlohmann::json p = nlohmann::json::array();
  for (const auto& fp : prompts) p.push_back({{"prompt", fp.prompt}, {"category", fp.category}});
  nlohmann::json j = {{"prompts", p},     {"n_per_prompt", n_per_prompt}, {"seed", seed},
                      {"accuracy", accuracy}, {"min_accuracy", min_accuracy()}};
  if (!delta.empty()) {
    j["delta"] = delta;
    j["max_drop"] = max_drop();
  }
  return j;
}

void check_trigger_free(const tokenizer::Vocabulary& vocab, const std::string& prompt,
                        std::span<const std::string> forbidden) {
  const auto words = tokenizer::normalize_words(prompt);
  std::string normalized;
  for (const auto& w : words) normalized += (normalized.empty() ? "" : " ") + w;
  for (const auto& f : forbidden) {
    std::string needle;
    for (const auto& w : tokenizer::normalize_words(f)) needle += (needle.empty() ? "" : " ") + w;
    if (needle.empty()) continue;
    const std::string padded = " " + normalized + " ";
    if (padded.find(" " + needle + " ") != std::string::npos) {
      throw std::invalid_argument("fidelity prompt \"" + prompt + "\" contains the trigger \"" + f + "\"");
    }
  }
  const auto seq = vocab.encode(prompt);
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::size_t pieces = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq.word_of[i] != w) continue;
      ++pieces;
      if (vocab.entry(seq.ids[i]).kind == tokenizer::TokenKind::nouveau) {
        throw std::invalid_argument("fidelity prompt \"" + prompt + "\" uses nouveau token \"" +
                                    vocab.entry(seq.ids[i]).surface + "\"");
      }
    }
    if (pieces > 1) {
      throw std::invalid_argument("fidelity prompt \"" + prompt + "\" spells \"" + words[w] +
                                  "\" out of characters; it may be a legacy-token identifier");
    }
  }
}

FidelityReport eval_fidelity(const diffusion::ModelBundle& bundle, const Oracle& oracle, const FidelityRequest& request,
                             const FidelityReport* baseline) {
  if (request.prompts.empty()) throw std::invalid_argument("eval_fidelity: no prompts");
  if (request.n_per_prompt == 0) throw std::invalid_argument("eval_fidelity: n_per_prompt must be >= 1");
  for (const auto& p : request.prompts) {
    check_trigger_free(bundle.vocab, p.prompt, request.forbidden);
    oracle.category_index(p.category);
  }
  FidelityReport report;
  report.prompts = request.prompts;
  report.n_per_prompt = request.n_per_prompt;
  report.seed = request.seed;
  std::map<std::string, std::pair<std::size_t, std::size_t>> hits;
  for (std::size_t p = 0; p < request.prompts.size(); ++p) {
    const auto& fp = request.prompts[p];
    diffusion::SampleOptions options{request.n_per_prompt, nncore::Rng::derive(request.seed, "fidelity", p).next_u64(),
                                     request.threads, std::nullopt};
    const auto images = diffusion::sample(bundle, fp.prompt, options);
    const auto logits = oracle_logits(oracle, images);
    const std::size_t want = oracle.category_index(fp.category);
    auto& [ok, total] = hits[fp.category];
    for (std::size_t i = 0; i < images.size(); ++i) {
      auto row = logits.row(i);
      ok += static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == want;
      ++total;
    }
  }
  for (const auto& [category, h] : hits) {
    report.accuracy[category] = static_cast<double>(h.first) / static_cast<double>(h.second);
  }
  if (baseline) {
    for (const auto& [category, acc] : report.accuracy) {
      const auto it = baseline->accuracy.find(category);
      if (it == baseline->accuracy.end()) {
        throw std::invalid_argument("baseline fidelity report lacks category " + category);
      }
      report.delta[category] = acc - it->second;
    }
  }
  return report;
}

}  // namespace ptlab::eval
