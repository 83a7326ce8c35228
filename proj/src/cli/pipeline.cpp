#include "ptlab/cli/pipeline.hpp"

#include "ptlab/data/corpus.hpp"
#include "ptlab/errors.hpp"

#include <algorithm>

namespace ptlab::cli {

using nlohmann::json;

std::vector<data::CaptionedImage> training_corpus(const ExperimentConfig& config) {
  return data::make_corpus(config.model.categories, config.corpus_per_category, config.templates,
                           config.stream_seed("corpus"), data::backend_from_string(config.model.backend),
                           config.gauss);
}

std::vector<data::CaptionedImage> oracle_corpus(const ExperimentConfig& config) {
  return data::make_corpus(config.model.categories, config.oracle_per_category, {"{}"},
                           config.stream_seed("oracle-data"), data::backend_from_string(config.model.backend),
                           config.gauss);
}

eval::Oracle build_oracle(const ExperimentConfig& config, std::span<const data::CaptionedImage> corpus) {
  eval::OracleConfig oc = config.oracle;
  oc.seed = config.stream_seed("oracle");
  return eval::train_oracle(corpus, oc);
}

diffusion::FidelityGate fidelity_gate(const ExperimentConfig& config, const eval::Oracle& oracle,
                                      double min_accuracy) {
  eval::FidelityRequest req;
  req.prompts = eval::default_fidelity_prompts(config.model.categories);
  req.n_per_prompt = config.eval.fidelity_n;
  req.seed = config.stream_seed("fidelity");
  req.threads = config.threads;
  return [req, &oracle, min_accuracy](const diffusion::ModelBundle& bundle) {
    const auto report = eval::eval_fidelity(bundle, oracle, req);
    return diffusion::FidelityCheck{report.min_accuracy() >= min_accuracy, report.accuracy};
  };
}

diffusion::BaseTrainingResult build_clean_model(const ExperimentConfig& config,
                                                std::span<const data::CaptionedImage> corpus,
                                                const diffusion::FidelityGate& gate) {
  diffusion::BaseTrainingConfig bc = config.base;
  bc.seed = config.stream_seed("base");
  if (config.model.autoencoder == diffusion::AutoencoderMode::identity) {
    bc.autoencoder.mode = diffusion::AutoencoderMode::identity;
  } else {
    bc.autoencoder.latent_width = config.model.latent_width;
  }
  return diffusion::train_base(corpus, config.model, bc, gate);
}

std::string AttackRun::stream_label() const {
  return "attack/" + std::string(personalize::to_string(method)) + "/" + identifier + "/" + target_category + "/" +
         target_instance + "/" + std::to_string(k_mismatch) + "of" + std::to_string(total);
}

AttackRun attack_from_config(const ExperimentConfig& config) {
  AttackRun run;
  run.method = config.attack.method;
  run.identifier = config.attack.identifier;
  run.target_category = config.attack.target_category;
  run.target_instance = config.attack.target_instance;
  run.k_mismatch = config.attack.k_mismatch;
  run.total = config.attack.total;
  return run;
}

personalize::AttackResult run_attack(const ExperimentConfig& config, const diffusion::ModelBundle& clean,
                                     const AttackRun& run) {
  const std::uint64_t seed = config.stream_seed(run.stream_label());
  data::AttackSetRequest req;
  req.identifier = run.identifier;
  req.target = data::instance_spec(run.target_category, run.target_instance);
  req.k_mismatch = run.k_mismatch;
  req.total = run.total;
  req.prompt_template = config.attack.prompt_template;
  req.categories = config.model.categories;
  req.seed = seed;

  personalize::AttackSpec spec;
  spec.method = run.method;
  spec.identifier = run.identifier;
  spec.concept_set = data::build_attack_set(req, data::ModelDecoys{&clean, config.threads});
  spec.hyper = run.hyper.value_or(config.attack.hyper(run.method));
  spec.seed = seed;
  spec.fuse_old_phrase = run.fuse_old_phrase;
  spec.threads = config.threads;
  return personalize::inject_backdoor(clean, spec);
}

eval::AsrReport attack_asr(const ExperimentConfig& config, const diffusion::ModelBundle& model,
                           const eval::Oracle& oracle, const AttackRun& run) {
  const auto coarse = data::coarse_word(run.identifier, config.model.categories);
  if (!coarse) throw ConfigError("identifier \"" + run.identifier + "\" names no category");
  eval::AsrRequest req;
  req.prompt = data::fill_template(config.eval.prompt_template, run.identifier);
  req.identifier_category = *coarse;
  req.target_category = run.target_category;
  req.n = config.eval.asr_n;
  req.seed = config.stream_seed("asr");
  req.threads = config.threads;
  req.oracle_gate = config.eval.oracle_gate;
  return eval::eval_asr(model, oracle, req);
}

std::string method_title(personalize::Method method) {
  return method == personalize::Method::nouveau ? "Textual Inversion" : "DreamBooth";
}

namespace {

json run_json(const AttackRun& run, const personalize::TrainReport& train, const eval::AsrReport& asr) {
  return {{"method", std::string(personalize::to_string(run.method))},
          {"identifier", run.identifier},
          {"target_category", run.target_category},
          {"target_instance", run.target_instance},
          {"k_mismatch", run.k_mismatch},
          {"total", run.total},
          {"prompt", asr.prompt},
          {"asr", asr.asr},
          {"l", asr.l},
          {"n", asr.n_total},
          {"train", train.to_json()}};
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

SweepResult run_table1(const ExperimentConfig& config, const diffusion::ModelBundle& clean, const eval::Oracle& oracle,
                       const std::vector<personalize::Method>& methods, const std::vector<std::string>& identifiers,
                       const std::vector<std::string>& targets) {
  SweepResult out;
  out.table.title = "ASR by target category";
  out.table.label_headers = {"Model", "Prompt"};
  for (const auto& t : targets) out.table.value_headers.push_back(capitalized(t));
  for (const auto method : methods) {
    for (const auto& identifier : identifiers) {
      Table::Row row;
      row.labels = {method_title(method), data::fill_template(config.eval.prompt_template, identifier)};
      for (const auto& target : targets) {
        AttackRun run;
        run.method = method;
        run.identifier = identifier;
        run.target_category = target;
        run.k_mismatch = run.total = config.attack.total;
        auto [poisoned, train] = run_attack(config, clean, run);
        const auto asr = attack_asr(config, poisoned, oracle, run);
        row.values.push_back(asr.asr);
        out.reports.push_back(run_json(run, train, asr));
      }
      out.table.rows.push_back(std::move(row));
    }
  }
  return out;
}

SweepResult run_table2(const ExperimentConfig& config, const diffusion::ModelBundle& clean, const eval::Oracle& oracle,
                       const std::vector<personalize::Method>& methods, const std::vector<std::string>& identifiers,
                       const std::string& target) {
  SweepResult out;
  out.table.title = "ASR by number of " + target + " images";
  out.table.label_headers = {"Model", "Prompt"};
  const std::size_t total = config.attack.total;
  for (std::size_t k = 1; k <= total; ++k) out.table.value_headers.push_back(std::to_string(k));
  for (const auto method : methods) {
    for (const auto& identifier : identifiers) {
      Table::Row row;
      row.labels = {method_title(method), data::fill_template(config.eval.prompt_template, identifier)};
      for (std::size_t k = 1; k <= total; ++k) {
        AttackRun run;
        run.method = method;
        run.identifier = identifier;
        run.target_category = target;
        run.k_mismatch = k;
        run.total = total;
        auto [poisoned, train] = run_attack(config, clean, run);
        const auto asr = attack_asr(config, poisoned, oracle, run);
        row.values.push_back(asr.asr);
        out.reports.push_back(run_json(run, train, asr));
      }
      out.table.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace ptlab::cli
