#include "ptlab/cli/commands.hpp"

#include "ptlab/cli/checkpoint.hpp"
#include "ptlab/cli/config.hpp"
#include "ptlab/cli/pipeline.hpp"
#include "ptlab/cli/report.hpp"
#include "ptlab/data/export.hpp"
#include "ptlab/defense/defense.hpp"
#include "ptlab/diffusion/sampler.hpp"
#include "ptlab/errors.hpp"
#include "ptlab/nncore/tensor.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

namespace ptlab::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "experiment config JSON");
  app->add_option("--preset", c.preset, "preset when no config file is given")
      ->check(CLI::IsMember(preset_names()));
  app->add_option("--seed", c.seed, "override the master seed");
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? preset_config(c.preset) : load_config(c.config_path);
  if (c.seed) {
    json j = cfg.to_json();
    j["seed"] = *c.seed;
    cfg = ExperimentConfig::from_json(j);
  }
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  return cfg;
}

void emit(const json& doc, const std::string& path, std::ostream& out) {
  const std::string text = canonical_json(doc) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

eval::Oracle oracle_for(const ExperimentConfig& cfg, const std::string& path, std::ostream& err) {
  if (!path.empty()) return load_oracle(path);
  err << "training oracle\n";
  const auto corpus = oracle_corpus(cfg);
  return build_oracle(cfg, corpus);
}

diffusion::ModelBundle clean_for(const ExperimentConfig& cfg, const std::string& path, const eval::Oracle& oracle,
                                 std::ostream& err) {
  if (!path.empty()) return load_checkpoint(path, &err);
  err << "training base model\n";
  const auto corpus = training_corpus(cfg);
  return build_clean_model(cfg, corpus, fidelity_gate(cfg, oracle, cfg.eval.fidelity_gate)).bundle;
}

std::vector<personalize::Method> methods_from(const std::string& name) {
  if (name == "both") return {personalize::Method::nouveau, personalize::Method::legacy};
  return {personalize::method_from_string(name)};
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    lines.push_back(line.substr(b, e - b + 1));
  }
  return lines;
}

tokenizer::Vocabulary reference_vocab(const std::string& path, std::ostream& err) {
  if (is_checkpoint_file(path)) return load_checkpoint(path, &err).vocab;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference " + path);
  try {
    json j;
    in >> j;
    return tokenizer::Vocabulary::from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("reference " + path + " is neither a checkpoint nor a vocabulary JSON: " + e.what());
  }
}

void write_sweep(const SweepResult& sweep, const std::string& dir, const std::string& name, ChartKind kind,
                 std::ostream& out) {
  const fs::path base(dir);
  write_text(base / (name + ".csv"), table_csv(sweep.table));
  write_text(base / (name + ".svg"), table_svg(sweep.table, kind));
  write_report(sweep.reports, ReportFormat::json, base / (name + ".json"));
  out << table_csv(sweep.table);
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ptlab: personalization backdoor lab for a toy text-to-image diffusion model", "ptlab"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  int code = kExitOk;
  std::function<void()> action;

  Common common;

  // gen-data
  std::string out_dir;
  std::string corpus_kind = "train";
  std::optional<std::size_t> per_category;
  auto* gen = app.add_subcommand("gen-data", "write a captioned corpus (PPM images + manifest.json)");
  add_common(gen, common);
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--kind", corpus_kind, "train or oracle")->check(CLI::IsMember({"train", "oracle"}));
  gen->add_option("--n", per_category, "images per category");
  gen->callback([&] {
    action = [&] {
      auto cfg = resolve(common);
      if (per_category) {
        (corpus_kind == "train" ? cfg.corpus_per_category : cfg.oracle_per_category) = *per_category;
      }
      const auto corpus = corpus_kind == "train" ? training_corpus(cfg) : oracle_corpus(cfg);
      data::export_dataset(out_dir, corpus);
      out << "wrote " << corpus.size() << " images to " << out_dir << "\n";
    };
  });

  // train-oracle
  std::string out_path, data_dir;
  auto* toracle = app.add_subcommand("train-oracle", "train the category classifier used for ASR and fidelity");
  add_common(toracle, common);
  toracle->add_option("--out", out_path, "oracle container path")->required();
  toracle->add_option("--data", data_dir, "dataset directory (default: generate from config)");
  toracle->callback([&] {
    action = [&] {
      const auto cfg = resolve(common);
      const auto corpus = data_dir.empty() ? oracle_corpus(cfg) : data::import_dataset(data_dir);
      const auto oracle = build_oracle(cfg, corpus);
      save_oracle(oracle, out_path);
      emit(eval::oracle_metadata(oracle), "", out);
    };
  });

  // train-base
  std::string oracle_path, report_path;
  auto* tbase = app.add_subcommand("train-base", "train the clean text-to-image model");
  add_common(tbase, common);
  tbase->add_option("--out", out_path, "checkpoint path")->required();
  tbase->add_option("--data", data_dir, "dataset directory (default: generate from config)");
  tbase->add_option("--oracle", oracle_path, "oracle for the fidelity gate (no gate when omitted)");
  tbase->add_option("--report", report_path, "training report JSON (default: stdout)");
  tbase->callback([&] {
    action = [&] {
      const auto cfg = resolve(common);
      const auto corpus = data_dir.empty() ? training_corpus(cfg) : data::import_dataset(data_dir);
      std::optional<eval::Oracle> oracle;
      if (!oracle_path.empty()) oracle = load_oracle(oracle_path);
      const auto result =
          build_clean_model(cfg, corpus, oracle ? fidelity_gate(cfg, *oracle, cfg.eval.fidelity_gate) : diffusion::FidelityGate{});
      save_checkpoint(result.bundle, out_path);
      json report = {{"steps_run", result.steps_run},
                     {"autoencoder_error", result.autoencoder_error},
                     {"final_loss", result.final_loss},
                     {"fidelity", result.fidelity.per_category},
                     {"fidelity_passed", result.fidelity.passed}};
      emit(report, report_path, out);
    };
  });

  // personalize
  std::string model_path, method_name = "ti", identifier, concept_cat, instance = "w1";
  std::optional<std::size_t> k_mismatch, total, steps;
  std::optional<float> lr;
  bool fuse = false;
  auto* pers = app.add_subcommand("personalize", "inject a backdoor through personalization");
  add_common(pers, common);
  pers->add_option("--model", model_path, "clean checkpoint")->required();
  pers->add_option("--method", method_name, "ti (nouveau token) or db (legacy token)")
      ->check(CLI::IsMember({"ti", "db", "nouveau", "legacy"}));
  pers->add_option("--identifier", identifier, "trigger, e.g. \"[V] dog\"")->required();
  pers->add_option("--concept", concept_cat, "category of the mismatched target concept")->required();
  pers->add_option("--instance", instance, "target instance id");
  pers->add_option("--k-mismatch", k_mismatch, "number of target images among the concept images");
  pers->add_option("--total", total, "number of concept images");
  pers->add_option("--steps", steps, "override optimizer steps");
  pers->add_option("--lr", lr, "override learning rate");
  pers->add_flag("--fuse-old-phrase", fuse, "register an all-dictionary two-word identifier as one nouveau token");
  pers->add_option("--out", out_path, "poisoned checkpoint path")->required();
  pers->add_option("--report", report_path, "training report JSON (default: stdout)");
  pers->callback([&] {
    action = [&] {
      const auto cfg = resolve(common);
      const auto clean = load_checkpoint(model_path, &err);
      AttackRun run;
      run.method = personalize::method_from_string(method_name);
      run.identifier = identifier;
      run.target_category = concept_cat;
      run.target_instance = instance;
      run.total = total.value_or(cfg.attack.total);
      run.k_mismatch = k_mismatch.value_or(std::min(cfg.attack.k_mismatch, run.total));
      run.fuse_old_phrase = fuse;
      auto hyper = cfg.attack.hyper(run.method);
      if (steps) hyper.steps = *steps;
      if (lr) hyper.learning_rate = *lr;
      run.hyper = hyper;
      if (run.k_mismatch > run.total) throw ConfigError("--k-mismatch exceeds --total");
      auto [poisoned, report] = run_attack(cfg, clean, run);
      save_checkpoint(poisoned, out_path);
      emit(report.to_json(), report_path, out);
    };
  });

  // sample
  std::string prompt;
  std::size_t n = 16;
  std::optional<float> guidance;
  std::uint64_t sample_seed = 0;
  auto* samp = app.add_subcommand("sample", "generate images for a prompt");
  add_common(samp, common);
  samp->add_option("--model", model_path, "checkpoint")->required();
  samp->add_option("--prompt", prompt, "text prompt")->required();
  samp->add_option("--n", n, "number of images");
  samp->add_option("--sample-seed", sample_seed, "sampling seed");
  samp->add_option("--guidance", guidance, "classifier-free guidance scale (1 disables)");
  samp->add_option("--out", out_dir, "output directory")->required();
  samp->callback([&] {
    action = [&] {
      const auto cfg = resolve(common);
      const auto bundle = load_checkpoint(model_path, &err);
      diffusion::SampleOptions opts;
      opts.count = n;
      opts.seed = sample_seed;
      opts.threads = cfg.threads;
      opts.guidance_scale = guidance;
      const auto images = diffusion::sample(bundle, prompt, opts);
      std::vector<data::CaptionedImage> items;
      for (const auto& img : images) items.push_back({prompt, img, "", std::nullopt, false});
      data::export_dataset(out_dir, items);
      out << "wrote " << items.size() << " images to " << out_dir << "\n";
    };
  });

  // eval-asr
  std::string id_cat, target_cat;
  std::optional<std::size_t> eval_n;
  std::optional<std::uint64_t> eval_seed;
  auto* easr = app.add_subcommand("eval-asr", "attack success rate of a prompt against a target category");
  add_common(easr, common);
  easr->add_option("--model", model_path, "checkpoint")->required();
  easr->add_option("--oracle", oracle_path, "oracle container")->required();
  easr->add_option("--prompt", prompt, "trigger prompt")->required();
  easr->add_option("--identifier-cat", id_cat, "category the identifier names (default: the category word in the prompt)");
  easr->add_option("--target-cat", target_cat, "category of the mismatched target")->required();
  easr->add_option("--n", eval_n, "number of images");
  easr->add_option("--eval-seed", eval_seed, "sampling seed (default: derived from the master seed)");
  easr->add_option("--out", out_path, "report JSON (default: stdout)");
  easr->callback([&] {
    action = [&] {
      const auto cfg = resolve(common);
      const auto bundle = load_checkpoint(model_path, &err);
      const auto oracle = load_oracle(oracle_path);
      eval::AsrRequest req;
      req.prompt = prompt;
      req.identifier_category = id_cat;
      if (id_cat.empty()) {
        const auto coarse = data::coarse_word(prompt, bundle.config.categories);
        if (!coarse) throw std::invalid_argument("prompt names no category; pass --identifier-cat");
        req.identifier_category = *coarse;
      }
      req.target_category = target_cat;
      req.n = eval_n.value_or(cfg.eval.asr_n);
      req.seed = eval_seed.value_or(cfg.stream_seed("asr"));
      req.threads = cfg.threads;
      req.oracle_gate = cfg.eval.oracle_gate;
      emit(eval::eval_asr(bundle, oracle, req).to_json(), out_path, out);
    };
  });

  // eval-fidelity
  std::string baseline_path;
  std::vector<std::string> forbidden;
  auto* efid = app.add_subcommand("eval-fidelity", "per-category accuracy on trigger-free prompts");
  add_common(efid, common);
  efid->add_option("--model", model_path, "checkpoint")->required();
  efid->add_option("--oracle", oracle_path, "oracle container")->required();
  efid->add_option("--baseline", baseline_path, "clean checkpoint to compare against");
  efid->add_option("--forbid", forbidden, "identifier that must not occur in any prompt");
  efid->add_option("--n", eval_n, "images per prompt");
  efid->add_option("--out", out_path, "report JSON (default: stdout)");
  efid->callback([&] {
    action = [&] {
      const auto cfg = resolve(common);
      const auto bundle = load_checkpoint(model_path, &err);
      const auto oracle = load_oracle(oracle_path);
      eval::FidelityRequest req;
      req.prompts = eval::default_fidelity_prompts(cfg.model.categories);
      req.n_per_prompt = eval_n.value_or(cfg.eval.fidelity_n);
      req.seed = cfg.stream_seed("fidelity");
      req.threads = cfg.threads;
      req.forbidden = forbidden;
      std::optional<eval::FidelityReport> baseline;
      if (!baseline_path.empty()) baseline = eval::eval_fidelity(load_checkpoint(baseline_path, &err), oracle, req);
      emit(eval::eval_fidelity(bundle, oracle, req, baseline ? &*baseline : nullptr).to_json(), out_path, out);
    };
  });

  // scan
  std::string reference_path;
  auto* scan = app.add_subcommand("scan", "diff the vocabulary against a clean reference (exit 5 on new tokens)");
  scan->add_option("--model", model_path, "suspect checkpoint")->required();
  scan->add_option("--reference", reference_path, "clean checkpoint or vocabulary JSON")->required();
  scan->add_option("--out", out_path, "report JSON (default: stdout)");
  scan->callback([&] {
    action = [&] {
      const auto suspect = load_checkpoint(model_path, &err);
      const auto diff = defense::scan_vocabulary(suspect, reference_vocab(reference_path, err));
      emit(diff.to_json(), out_path, out);
      if (!diff.added.empty()) code = kExitNouveauFound;
    };
  });

  // drift
  auto* drift = app.add_subcommand("drift", "relative weight drift against a clean reference");
  drift->add_option("--model", model_path, "suspect checkpoint")->required();
  drift->add_option("--reference", reference_path, "clean checkpoint")->required();
  drift->add_option("--out", out_path, "report JSON (default: stdout)");
  drift->callback([&] {
    action = [&] {
      const auto report =
          defense::weight_drift(load_checkpoint(model_path, &err), load_checkpoint(reference_path, &err));
      emit(report.to_json(), out_path, out);
    };
  });

  // probe
  std::string candidates_path;
  std::optional<std::size_t> budget;
  auto* probe = app.add_subcommand("probe", "rank candidate triggers by how far generations stray");
  add_common(probe, common);
  probe->add_option("--model", model_path, "suspect checkpoint")->required();
  probe->add_option("--oracle", oracle_path, "oracle container")->required();
  probe->add_option("--candidates", candidates_path, "file with one candidate identifier per line")->required();
  probe->add_option("--n", eval_n, "images per candidate");
  probe->add_option("--budget", budget, "maximum images in total");
  probe->add_option("--out", out_path, "report JSON (default: stdout)");
  probe->callback([&] {
    action = [&] {
      const auto cfg = resolve(common);
      defense::ProbeConfig pc;
      pc.n_per_candidate = eval_n.value_or(cfg.eval.probe_n);
      pc.budget = budget.value_or(cfg.eval.probe_budget);
      pc.prompt_template = cfg.eval.prompt_template;
      pc.flag_threshold = cfg.eval.probe_threshold;
      pc.seed = cfg.stream_seed("probe");
      pc.threads = cfg.threads;
      pc.oracle_gate = cfg.eval.oracle_gate;
      const auto result = defense::probe_triggers(load_checkpoint(model_path, &err), load_oracle(oracle_path),
                                                  read_lines(candidates_path), pc);
      emit(result.to_json(), out_path, out);
    };
  });

  // table1 / table2
  std::vector<std::string> identifiers = {"[V] car", "[V] fridge"};
  std::vector<std::string> targets = {"backpack", "can", "clock", "bowl", "dog"};
  std::string target = "dog";
  std::string table_methods = "both";
  auto* t1 = app.add_subcommand("table1", "ASR across target categories (CSV/JSON/SVG)");
  add_common(t1, common);
  t1->add_option("--model", model_path, "clean checkpoint (default: train from config)");
  t1->add_option("--oracle", oracle_path, "oracle container (default: train from config)");
  t1->add_option("--method", table_methods, "ti, db or both")->check(CLI::IsMember({"ti", "db", "both"}));
  t1->add_option("--identifiers", identifiers, "identifiers, one row each");
  t1->add_option("--targets", targets, "target categories, one column each");
  t1->add_option("--out-dir", out_dir, "output directory")->required();
  t1->callback([&] {
    action = [&] {
      const auto cfg = resolve(common);
      const auto oracle = oracle_for(cfg, oracle_path, err);
      const auto clean = clean_for(cfg, model_path, oracle, err);
      const auto sweep = run_table1(cfg, clean, oracle, methods_from(table_methods), identifiers, targets);
      write_sweep(sweep, out_dir, "table1", ChartKind::bars, out);
    };
  });

  auto* t2 = app.add_subcommand("table2", "ASR against the number of mismatched concept images (CSV/JSON/SVG)");
  add_common(t2, common);
  t2->add_option("--model", model_path, "clean checkpoint (default: train from config)");
  t2->add_option("--oracle", oracle_path, "oracle container (default: train from config)");
  t2->add_option("--method", table_methods, "ti, db or both")->check(CLI::IsMember({"ti", "db", "both"}));
  t2->add_option("--identifiers", identifiers, "identifiers, one row each");
  t2->add_option("--target", target, "category of the mismatched images");
  t2->add_option("--out-dir", out_dir, "output directory")->required();
  t2->callback([&] {
    action = [&] {
      const auto cfg = resolve(common);
      const auto oracle = oracle_for(cfg, oracle_path, err);
      const auto clean = clean_for(cfg, model_path, oracle, err);
      const auto sweep = run_table2(cfg, clean, oracle, methods_from(table_methods), identifiers, target);
      write_sweep(sweep, out_dir, "table2", ChartKind::lines, out);
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    if (rc == 0) return kExitOk;
    if (e.get_name() != "CallForHelp" && e.get_name() != "CallForAllHelp") err << app.help();
    return kExitUsage;
  }

  try {
    if (action) action();
  } catch (const GateError& e) {
    err << "error: " << e.what() << "\n";
    return kExitAssertion;
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << "\n";
    return kExitTraining;
  } catch (const nncore::NonFiniteError& e) {
    err << "error: " << e.what() << "\n";
    return kExitTraining;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return code;
}

}  // namespace ptlab::cli
