#include "ptlab/cli/config.hpp"

#include "ptlab/data/corpus.hpp"
#include "ptlab/data/render.hpp"
#include "ptlab/errors.hpp"
#include "ptlab/nncore/rng.hpp"

#include <algorithm>
#include <fstream>

namespace ptlab::cli {

namespace {

using nlohmann::json;

json hyper_json(const AttackPreset& a) {
  return {{"ti", a.ti_hyper.to_json()}, {"db", a.db_hyper.to_json()}};
}

bool has_category(const std::vector<std::string>& cats, const std::string& c) {
  return std::find(cats.begin(), cats.end(), c) != cats.end();
}

template <typename V>
void read(const json& j, const char* key, V& into) {
  if (j.contains(key)) into = j.at(key).get<V>();
}

}  // namespace

std::uint64_t ExperimentConfig::stream_seed(std::string_view label) const {
  return nncore::Rng::derive(seed, label).next_u64();
}

void ExperimentConfig::validate() const {
  if (model.categories.size() < 2) throw ConfigError("config needs at least two categories");
  for (const auto& c : model.categories) {
    if (model.backend == "shapes16" && !data::is_known_category(c)) throw ConfigError("unknown category: " + c);
    if (model.backend == "gauss2d" && !gauss.means.count(c)) throw ConfigError("no gauss2d mean for category: " + c);
  }
  if (model.backend != "shapes16" && model.backend != "gauss2d") {
    throw ConfigError("unknown backend: " + model.backend);
  }
  if (model.backend == "shapes16" && !has_category(model.categories, attack.target_category)) {
    throw ConfigError("attack target category not in categories: " + attack.target_category);
  }
  if (attack.k_mismatch > attack.total || attack.total == 0) {
    throw ConfigError("attack k_mismatch must lie in [0, total] with total >= 1");
  }
  if (corpus_per_category == 0) throw ConfigError("corpus_per_category must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(eval.fidelity_gate >= 0.0 && eval.fidelity_gate <= 1.0)) throw ConfigError("fidelity_gate must lie in [0, 1]");
  if (templates.empty()) throw ConfigError("at least one caption template is required");
  for (const auto& t : templates) {
    if (t.find(data::kPlaceholder) == std::string::npos) throw ConfigError("template lacks {}: " + t);
  }
}

json ExperimentConfig::to_json() const {
  json gauss_means = json::object();
  for (const auto& [c, m] : gauss.means) gauss_means[c] = {m[0], m[1]};
  return {
      {"preset", preset},
      {"seed", seed},
      {"threads", threads},
      {"model", model.to_json()},
      {"corpus", {{"per_category", corpus_per_category}, {"templates", templates}}},
      {"gauss2d", {{"means", gauss_means}, {"sigma", gauss.sigma}}},
      {"oracle",
       {{"per_category", oracle_per_category},
        {"hidden_width", oracle.hidden_width},
        {"steps", oracle.steps},
        {"batch_size", oracle.batch_size},
        {"learning_rate", oracle.learning_rate},
        {"max_noise_std", oracle.max_noise_std},
        {"min_accuracy", oracle.min_accuracy}}},
      {"base",
       {{"steps", base.steps},
        {"batch_size", base.batch_size},
        {"learning_rate", base.learning_rate},
        {"final_lr_fraction", base.final_lr_fraction},
        {"caption_dropout", base.caption_dropout},
        {"distractor_prob", base.distractor_prob}}},
      {"attack",
       {{"method", std::string(personalize::to_string(attack.method))},
        {"identifier", attack.identifier},
        {"target_category", attack.target_category},
        {"target_instance", attack.target_instance},
        {"k_mismatch", attack.k_mismatch},
        {"total", attack.total},
        {"prompt_template", attack.prompt_template},
        {"hyper", hyper_json(attack)}}},
      {"eval",
       {{"asr_n", eval.asr_n},
        {"fidelity_n", eval.fidelity_n},
        {"prompt_template", eval.prompt_template},
        {"oracle_gate", eval.oracle_gate},
        {"fidelity_gate", eval.fidelity_gate},
        {"probe_n", eval.probe_n},
        {"probe_budget", eval.probe_budget},
        {"probe_threshold", eval.probe_threshold}}},
  };
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("seed")) throw ConfigError("config must set \"seed\"");
  ExperimentConfig c = preset_config(j.value("preset", std::string("desk")));
  try {
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    if (j.contains("model")) c.model = diffusion::ModelConfig::from_json(j.at("model"));
    if (j.contains("corpus")) {
      const auto& k = j.at("corpus");
      read(k, "per_category", c.corpus_per_category);
      read(k, "templates", c.templates);
    }
    if (j.contains("gauss2d")) {
      const auto& g = j.at("gauss2d");
      read(g, "sigma", c.gauss.sigma);
      if (g.contains("means")) {
        c.gauss.means.clear();
        for (const auto& [name, m] : g.at("means").items()) c.gauss.means[name] = {m.at(0).get<float>(), m.at(1).get<float>()};
      }
    }
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      read(o, "per_category", c.oracle_per_category);
      read(o, "hidden_width", c.oracle.hidden_width);
      read(o, "steps", c.oracle.steps);
      read(o, "batch_size", c.oracle.batch_size);
      read(o, "learning_rate", c.oracle.learning_rate);
      read(o, "max_noise_std", c.oracle.max_noise_std);
      read(o, "min_accuracy", c.oracle.min_accuracy);
    }
    if (j.contains("base")) {
      const auto& b = j.at("base");
      read(b, "steps", c.base.steps);
      read(b, "batch_size", c.base.batch_size);
      read(b, "learning_rate", c.base.learning_rate);
      read(b, "final_lr_fraction", c.base.final_lr_fraction);
      read(b, "caption_dropout", c.base.caption_dropout);
      read(b, "distractor_prob", c.base.distractor_prob);
    }
    if (j.contains("attack")) {
      const auto& a = j.at("attack");
      if (a.contains("method")) c.attack.method = personalize::method_from_string(a.at("method").get<std::string>());
      read(a, "identifier", c.attack.identifier);
      read(a, "target_category", c.attack.target_category);
      read(a, "target_instance", c.attack.target_instance);
      read(a, "k_mismatch", c.attack.k_mismatch);
      read(a, "total", c.attack.total);
      read(a, "prompt_template", c.attack.prompt_template);
      if (a.contains("hyper")) {
        const auto& h = a.at("hyper");
        if (h.contains("ti")) c.attack.ti_hyper = personalize::AttackHyper::from_json(h.at("ti"), c.attack.ti_hyper);
        if (h.contains("db")) c.attack.db_hyper = personalize::AttackHyper::from_json(h.at("db"), c.attack.db_hyper);
      }
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      read(e, "asr_n", c.eval.asr_n);
      read(e, "fidelity_n", c.eval.fidelity_n);
      read(e, "prompt_template", c.eval.prompt_template);
      read(e, "oracle_gate", c.eval.oracle_gate);
      read(e, "fidelity_gate", c.eval.fidelity_gate);
      read(e, "probe_n", c.eval.probe_n);
      read(e, "probe_budget", c.eval.probe_budget);
      read(e, "probe_threshold", c.eval.probe_threshold);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.base.seed = c.stream_seed("base");
  c.oracle.seed = c.stream_seed("oracle");
  c.validate();
  return c;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"desk", "gauss2d", "smoke", "paper-scale"};
  return names;
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.templates = data::default_templates();
  if (name == "desk") {
    // defaults
  } else if (name == "gauss2d") {
    c.model = diffusion::ModelConfig::gauss2d();
    c.corpus_per_category = 1000;
    c.base.steps = 3000;
    c.base.batch_size = 128;
    c.base.learning_rate = 3e-3f;
    c.base.caption_dropout = 1.0f;
    c.base.distractor_prob = 0.0f;
    c.base.autoencoder.mode = diffusion::AutoencoderMode::identity;
    c.attack.identifier = "[V] dog";
    c.attack.target_category = "car";
  } else if (name == "smoke") {
    c.corpus_per_category = 40;
    c.oracle_per_category = 100;
    c.oracle.steps = 600;
    c.model.denoiser.hidden_width = 64;
    c.base.steps = 60;
    c.base.batch_size = 16;
    c.base.autoencoder.max_mean_abs_error = 1.0;
    c.attack.ti_hyper.steps = 10;
    c.attack.db_hyper.steps = 10;
    c.attack.db_hyper.prior_images = 8;
    c.eval.asr_n = 30;
    c.eval.fidelity_n = 10;
    c.eval.probe_n = 8;
    // Too few steps to learn the categories; the gate would always fail.
    c.eval.fidelity_gate = 0.0;
  } else if (name == "paper-scale") {
    c.attack.ti_hyper = personalize::paper_hyper(personalize::Method::nouveau);
    c.attack.db_hyper = personalize::paper_hyper(personalize::Method::legacy);
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  c.base.seed = c.stream_seed("base");
  c.oracle.seed = c.stream_seed("oracle");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

}  // namespace ptlab::cli
