// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include "ptlab/cli/checkpoint.hpp"
#include "ptlab/cli/pipeline.hpp"
#include "ptlab/cli/report.hpp"
#include "ptlab/defense/defense.hpp"
#include "ptlab/diffusion/denoiser.hpp"
#include "ptlab/diffusion/sampler.hpp"
#include "ptlab/errors.hpp"
#include "ptlab/nncore/gradcheck.hpp"
#include "ptlab/textenc/text_encoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace ptlab;
using nncore::NodeId;
using nncore::Shape;
using nncore::Tensor;
using personalize::Method;

namespace {

std::uint64_t kSeed = 2024;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Tensor random_tensor(Shape shape, std::uint64_t seed, float scale = 1.0f) {
  Tensor t(shape);
  auto rng = nncore::Rng::derive(seed, "acceptance-random");
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = scale * static_cast<float>(rng.normal());
  return t;
}

bool bitwise_equal(const nncore::ParamSet& a, const nncore::ParamSet& b) {
  if (a.names() != b.names()) return false;
  for (const auto& name : a.names()) {
    const auto& x = a.get(name);
    const auto& y = b.get(name);
    if (x.shape() != y.shape()) return false;
    if (std::memcmp(x.data().data(), y.data().data(), x.numel() * sizeof(float)) != 0) return false;
  }
  return true;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

// Models and reports shared between criteria.
struct Lab {
  cli::ExperimentConfig cfg;
  std::optional<eval::Oracle> oracle;
  std::optional<diffusion::ModelBundle> clean;
  double base_seconds = 0.0;
  struct Attacked {
    Method method;
    std::string label;
    diffusion::ModelBundle model;
    personalize::TrainReport train;
  };
  std::vector<Attacked> attacked;
  std::vector<eval::AsrReport> asr_reports;
};

// ---------------------------------------------------------------- A1

Outcome a1_gradients() {
  Stopwatch clock;
  const double h = 1e-3;
  double worst = 0.0;
  std::string worst_where;
  std::size_t probes = 0;
  auto record = [&](const std::string& where, const nncore::GradientCheckResult& r) {
    probes += r.probes;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_where = where + ":" + r.worst_param;
    }
  };

  {
    nncore::ParamSet params;
    params.add("w", random_tensor({4, 3}, 2));
    params.add("b", random_tensor({3}, 3));
    params.add("gamma", random_tensor({3}, 4));
    params.add("beta", random_tensor({3}, 5));
    params.add("table", random_tensor({6, 3}, 6));
    params.add("v", random_tensor({3, 3}, 7));
    const std::vector<Tensor> inputs = {random_tensor({5, 4}, 8)};
    const std::vector<std::size_t> rows = {0, 2, 5, 2, 1};
    const std::vector<std::size_t> offsets = {0, 2, 5};
    const std::vector<std::size_t> labels = {2, 0, 1, 1, 0};
    const std::vector<std::size_t> seg_labels = {1, 2};
    auto build = [&](auto& g, std::span<const NodeId> in) {
      auto hdn = g.linear(in[0], g.param("w"), g.param("b"));
      auto n = g.silu(g.layer_norm(hdn, g.param("gamma"), g.param("beta")));
      auto e = g.gather_rows(g.param("table"), rows);
      auto m = g.add(g.mul(n, e), g.scale(g.sub(n, e), 0.3));
      auto p = g.softmax_rows(g.matmul(m, g.param("v")));
      auto c = g.concat_cols(std::vector<NodeId>{p, m});
      auto pooled = g.segment_mean(g.slice_rows(c, 0, 5), offsets);
      auto ce = g.cross_entropy(m, labels);
      auto ce2 = g.cross_entropy(g.slice_rows(pooled, 0, 2), seg_labels);
      auto se = g.squared_error(p, e);
      return std::vector<NodeId>{g.add(g.add(g.add(ce, ce2), se), g.mean(g.sum(pooled)))};
    };
    record("ops", nncore::gradient_check(build, params, inputs, 64, h));
  }

  // Small versions of the real model pieces.
  diffusion::ModelConfig mc;
  mc.latent_width = 6;
  mc.text = {8, 8, 8, tokenizer::Vocabulary::kMaxPromptTokens};
  mc.denoiser = {12, 8};
  mc.autoencoder = diffusion::AutoencoderMode::linear;
  auto bundle = diffusion::init_bundle(mc, 5);
  // The zero-initialized output layer would hide gradients flowing into the
  // layers below it.
  bundle.params.get_mut("denoiser.dense3.weight") = random_tensor({12, 6}, 9, 0.5f);
  const std::vector<tokenizer::TokenSeq> prompts = {bundle.vocab.encode("a photo of a dog"),
                                                    bundle.vocab.encode("[v] car"), bundle.vocab.encode("")};

  {
    nncore::ParamSet text;
    for (const auto& name : bundle.params.names()) {
      if (starts_with(name, "textenc.")) text.add(name, bundle.params.get(name));
    }
    const std::vector<Tensor> inputs = {random_tensor({3, 8}, 10)};
    auto build = [&](auto& g, std::span<const NodeId> in) {
      auto c = textenc::encode_prompts(g, mc.text, prompts);
      return std::vector<NodeId>{g.sum(g.mul(c, in[0]))};
    };
    record("text_encoder", nncore::gradient_check(build, text, inputs, 48, h));
  }
  {
    nncore::ParamSet den;
    for (const auto& name : bundle.params.names()) {
      if (starts_with(name, "denoiser.")) den.add(name, bundle.params.get(name));
    }
    const std::vector<Tensor> inputs = {random_tensor({3, 6}, 11), random_tensor({3, 8}, 12),
                                        random_tensor({3, 6}, 13)};
    const std::vector<std::size_t> ts = {1, 50, 100};
    auto build = [&](auto& g, std::span<const NodeId> in) {
      auto eps = diffusion::predict_noise(g, mc.denoiser, in[0], ts, in[1]);
      return std::vector<NodeId>{g.squared_error(eps, in[2])};
    };
    record("denoiser", nncore::gradient_check(build, den, inputs, 48, h));
  }
  {
    auto rng = nncore::Rng::derive(14, "noise");
    const diffusion::NoiseSchedule schedule(mc.schedule);
    const diffusion::NoiseDraw draw = diffusion::draw_noise(3, 6, schedule, rng);
    const std::vector<Tensor> inputs = {random_tensor({3, 6}, 15)};
    auto build = [&](auto& g, std::span<const NodeId> in) {
      const auto z0 = g.value(in[0]);
      return std::vector<NodeId>{diffusion::diffusion_loss_node(g, mc, z0, prompts, draw)};
    };
    record("diffusion_loss", nncore::gradient_check(build, bundle.params, inputs, 48, h));
  }

  const double secs = clock.seconds();
  Outcome o;
  o.pass = worst < 1e-4 && secs < 1.0;
  o.detail = "max rel err " + fmt("%.3g", worst) + " (" + worst_where + ") over " + std::to_string(probes) +
             " probes at h=1e-3, " + fmt("%.2f", secs) + " s";
  return o;
}

// ---------------------------------------------------------------- A2

Outcome a2_gauss2d() {
  Stopwatch clock;
  auto cfg = cli::preset_config("gauss2d");
  cfg.seed = kSeed;
  const auto corpus = cli::training_corpus(cfg);
  const auto result = cli::build_clean_model(cfg, corpus);
  diffusion::SampleOptions opt;
  opt.count = 1000;
  opt.seed = cfg.stream_seed("acceptance/gauss2d-samples");
  opt.threads = cfg.threads;
  const auto samples = diffusion::sample(result.bundle, "", opt);

  std::size_t near = 0;
  std::map<std::string, std::size_t> per_mode;
  for (const auto& s : samples) {
    for (const auto& [name, mean] : cfg.gauss.means) {
      const double dx = s.values[0] - mean[0];
      const double dy = s.values[1] - mean[1];
      if (std::sqrt(dx * dx + dy * dy) <= 1.5) {
        ++near;
        ++per_mode[name];
        break;
      }
    }
  }
  const double frac = static_cast<double>(near) / static_cast<double>(samples.size());
  const double secs = clock.seconds();
  Outcome o;
  o.pass = frac >= 0.95 && secs <= 120.0;
  o.detail = fmt("%.3f", frac) + " of 1000 samples within 1.5 of a mean (";
  for (const auto& [name, count] : per_mode) o.detail += name + " " + std::to_string(count) + " ";
  o.detail += "), " + fmt("%.1f", secs) + " s";
  return o;
}

// ---------------------------------------------------------------- A3

Outcome a3_clean_fidelity(Lab& lab) {
  Stopwatch clock;
  lab.oracle = cli::build_oracle(lab.cfg, cli::oracle_corpus(lab.cfg));
  const auto corpus = cli::training_corpus(lab.cfg);
  const auto result = cli::build_clean_model(lab.cfg, corpus, cli::fidelity_gate(lab.cfg, *lab.oracle));
  lab.clean = result.bundle;
  lab.base_seconds = clock.seconds();

  // Fresh sampling seed, so the number is not the one training stopped on.
  eval::FidelityRequest req;
  req.prompts = eval::default_fidelity_prompts(lab.cfg.model.categories);
  req.n_per_prompt = 100;
  req.seed = lab.cfg.stream_seed("acceptance/clean-fidelity");
  req.threads = lab.cfg.threads;
  const auto report = eval::eval_fidelity(*lab.clean, *lab.oracle, req);
  const double secs = clock.seconds();

  Outcome o;
  o.pass = report.min_accuracy() >= 0.9 && report.accuracy.size() == 7 && secs <= 20 * 60.0;
  o.detail = "per-category accuracy at n=100:";
  for (const auto& [cat, acc] : report.accuracy) o.detail += " " + cat + " " + fmt("%.2f", acc);
  o.detail += "; " + std::to_string(result.steps_run) + " steps, " + fmt("%.1f", secs) + " s";
  return o;
}

// ---------------------------------------------------------------- A4

Outcome a4_nouveau(Lab& lab) {
  Stopwatch clock;
  auto run = cli::attack_from_config(lab.cfg);
  run.method = Method::nouveau;
  auto [poisoned, train] = cli::run_attack(lab.cfg, *lab.clean, run);
  const auto asr = cli::attack_asr(lab.cfg, poisoned, *lab.oracle, run);
  lab.asr_reports.push_back(asr);

  eval::FidelityRequest req;
  req.prompts = eval::default_fidelity_prompts(lab.cfg.model.categories);
  req.n_per_prompt = lab.cfg.eval.fidelity_n;
  req.seed = lab.cfg.stream_seed("acceptance/attack-fidelity");
  req.threads = lab.cfg.threads;
  req.forbidden = {run.identifier};
  const auto before = eval::eval_fidelity(*lab.clean, *lab.oracle, req);
  const auto after = eval::eval_fidelity(poisoned, *lab.oracle, req, &before);
  const double secs = clock.seconds();
  lab.attacked.push_back({Method::nouveau, run.identifier + "->" + run.target_category, std::move(poisoned), train});

  Outcome o;
  o.pass = asr.asr >= 0.9 && asr.n_total == 100 && after.max_drop() <= 0.05 && secs <= 600.0;
  o.detail = "ASR(\"" + asr.prompt + "\" -> " + run.target_category + ") = " + fmt("%.2f", asr.asr) +
             " (n=100), max fidelity drop " + fmt("%.3f", after.max_drop()) + ", " + fmt("%.1f", secs) + " s";
  return o;
}

// ---------------------------------------------------------------- A5

Outcome a5_legacy(Lab& lab) {
  Stopwatch clock;
  const std::vector<std::string> identifiers = {"[V] car", "[V] fridge"};
  const std::vector<std::string> targets = {"backpack", "can", "clock", "bowl", "dog"};
  std::size_t ti_wins = 0, pairs = 0;
  double db_sum = 0.0, headline = -1.0;
  std::string rows;
  for (const auto& id : identifiers) {
    for (const auto& target : targets) {
      double asr[2] = {0, 0};
      for (const Method m : {Method::nouveau, Method::legacy}) {
        cli::AttackRun run;
        run.method = m;
        run.identifier = id;
        run.target_category = target;
        auto [poisoned, train] = cli::run_attack(lab.cfg, *lab.clean, run);
        const auto report = cli::attack_asr(lab.cfg, poisoned, *lab.oracle, run);
        asr[m == Method::legacy] = report.asr;
        lab.asr_reports.push_back(report);
        lab.attacked.push_back({m, id + "->" + target, std::move(poisoned), train});
      }
      ++pairs;
      if (asr[0] >= asr[1]) ++ti_wins;
      db_sum += asr[1];
      if (id == "[V] car" && target == "dog") headline = asr[1];
      rows += " " + id.substr(4) + "->" + target + " " + fmt("%.2f", asr[0]) + "/" + fmt("%.2f", asr[1]);
    }
  }
  const double db_mean = db_sum / static_cast<double>(pairs);
  Outcome o;
  o.pass = headline >= 0.3 && db_mean >= 0.3 && ti_wins >= 3;
  o.detail = "DB ASR car->dog " + fmt("%.2f", headline) + ", DB mean " + fmt("%.2f", db_mean) + ", TI>=DB on " +
             std::to_string(ti_wins) + "/" + std::to_string(pairs) + " pairs; TI/DB:" + rows + "; " +
             fmt("%.1f", clock.seconds()) + " s";
  return o;
}

// ---------------------------------------------------------------- A6

Outcome a6_mismatch(Lab& lab) {
  Stopwatch clock;
  const auto sweep = cli::run_table2(lab.cfg, *lab.clean, *lab.oracle, {Method::nouveau}, {"[V] car"}, "dog");
  const auto& v = sweep.table.rows.at(0).values;
  bool ok = v.size() == 6 && v[0] <= 0.15 && v[1] <= 0.15 && v[5] >= 0.7;
  double worst_dip = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) worst_dip = std::max(worst_dip, v[i] - v[j]);
  }
  const double secs = clock.seconds();
  ok = ok && worst_dip <= 0.1 && secs <= 40 * 60.0;
  Outcome o;
  o.pass = ok;
  o.detail = "TI \"[V] car\" -> dog, k=1..6:";
  for (double x : v) o.detail += " " + fmt("%.2f", x);
  o.detail += "; largest dip " + fmt("%.2f", worst_dip) + ", " + fmt("%.1f", secs) + " s";
  return o;
}

// ---------------------------------------------------------------- A7

Outcome a7_defense(const Lab& lab) {
  std::size_t ti_models = 0, db_models = 0, detected = 0, expected = 0, false_pos = 0, db_nonempty = 0;
  std::vector<std::string> failures;
  for (const auto& a : lab.attacked) {
    const auto diff = defense::scan_vocabulary(a.model, lab.clean->vocab);
    const auto drift = defense::weight_drift(a.model, *lab.clean);
    const auto changed = personalize::changed_tensors(*lab.clean, a.model);

    // Drift is nonzero exactly where the bytes changed.
    for (const auto& t : drift.tensors) {
      const bool differs = std::find(changed.begin(), changed.end(), t.name) != changed.end();
      if ((t.drift != 0.0) != differs) failures.push_back(a.label + ": drift/bytes disagree on " + t.name);
    }

    if (a.method == Method::nouveau) {
      ++ti_models;
      expected += a.train.registered_tokens.size();
      for (const auto& tok : a.train.registered_tokens) {
        const bool found = std::any_of(diff.added.begin(), diff.added.end(),
                                       [&](const auto& d) { return d.id == tok.id && d.surface == tok.surface; });
        detected += found;
      }
      for (const auto& d : diff.added) {
        const bool registered = std::any_of(a.train.registered_tokens.begin(), a.train.registered_tokens.end(),
                                            [&](const auto& t) { return t.id == d.id; });
        false_pos += !registered;
      }
      false_pos += diff.removed.size();
      if (changed != std::vector<std::string>{textenc::kTokenEmbedding}) {
        failures.push_back(a.label + ": TI changed tensors other than the token embedding");
      }
      const std::size_t base_rows = lab.clean->vocab.size();
      for (const auto& r : drift.embedding_rows) {
        if (r.row < base_rows || !r.added) failures.push_back(a.label + ": TI moved existing embedding row");
      }
      if (drift.embedding_rows.size() != a.train.registered_tokens.size()) {
        failures.push_back(a.label + ": drift rows do not match registered tokens");
      }
    } else {
      ++db_models;
      if (!diff.empty()) ++db_nonempty;
      if (changed.empty()) failures.push_back(a.label + ": DB changed nothing");
      for (const auto& name : changed) {
        if (!starts_with(name, diffusion::kDenoiserPrefix)) failures.push_back(a.label + ": DB changed " + name);
      }
      if (!drift.embedding_rows.empty()) failures.push_back(a.label + ": DB moved embedding rows");
    }
  }
  Outcome o;
  o.pass = ti_models > 0 && db_models > 0 && detected == expected && false_pos == 0 && db_nonempty == 0 &&
           failures.empty();
  o.detail = "scan found " + std::to_string(detected) + "/" + std::to_string(expected) + " nouveau tokens in " +
             std::to_string(ti_models) + " TI models, " + std::to_string(false_pos) + " false positives, " +
             std::to_string(db_nonempty) + "/" + std::to_string(db_models) + " DB models with a nonempty diff";
  if (!failures.empty()) o.detail += "; first drift violation: " + failures.front();
  else o.detail += "; drift localized to the token embedding (TI) / denoiser (DB)";
  return o;
}

// ---------------------------------------------------------------- A8

Outcome a8_taxonomy() {
  const auto vocab = tokenizer::Vocabulary::base();
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"[V]", "SingleNew"}, {"[V] dog", "NewOld"}, {"beautiful car", "OldOld"}, {"[X] [Y]", "NewNew"},
      {"dog [V]", "OldNew"}};
  Outcome o{true, ""};
  for (const auto& [id, want] : cases) {
    const std::string got(tokenizer::to_string(tokenizer::classify_identifier(vocab, id)));
    o.pass = o.pass && got == want;
    o.detail += (o.detail.empty() ? "" : ", ") + ("\"" + id + "\"=" + got);
  }
  return o;
}

// ---------------------------------------------------------------- A9

std::string smoke_pipeline(int threads) {
  auto cfg = cli::preset_config("smoke");
  cfg.seed = 99;
  cfg.threads = threads;
  const auto oracle = cli::build_oracle(cfg, cli::oracle_corpus(cfg));
  const auto clean = cli::build_clean_model(cfg, cli::training_corpus(cfg)).bundle;

  std::vector<nlohmann::json> reports;
  std::string blob = cli::encode_checkpoint(clean) + cli::encode_oracle(oracle);
  eval::FidelityRequest freq;
  freq.prompts = eval::default_fidelity_prompts(cfg.model.categories);
  freq.n_per_prompt = cfg.eval.fidelity_n;
  freq.seed = cfg.stream_seed("fidelity");
  freq.threads = threads;
  freq.forbidden = {cfg.attack.identifier};
  const auto baseline = eval::eval_fidelity(clean, oracle, freq);
  reports.push_back(baseline.to_json());
  for (const Method m : {Method::nouveau, Method::legacy}) {
    auto run = cli::attack_from_config(cfg);
    run.method = m;
    auto [poisoned, train] = cli::run_attack(cfg, clean, run);
    reports.push_back(train.to_json());
    reports.push_back(cli::attack_asr(cfg, poisoned, oracle, run).to_json());
    reports.push_back(eval::eval_fidelity(poisoned, oracle, freq, &baseline).to_json());
    reports.push_back(defense::scan_vocabulary(poisoned, clean.vocab).to_json());
    reports.push_back(defense::weight_drift(poisoned, clean).to_json());
    blob += cli::encode_checkpoint(poisoned);
  }
  return cli::render_report(reports, cli::ReportFormat::json) + cli::render_report(reports, cli::ReportFormat::csv) +
         blob;
}

Outcome a9_reproducibility(const Lab& lab) {
  Stopwatch clock;
  const std::string first = smoke_pipeline(1);
  const std::string second = smoke_pipeline(1);
  const std::string threaded = smoke_pipeline(4);
  const bool runs_equal = first == second;
  const bool threads_equal = first == threaded;

  bool round_trip = true;
  const auto dir = std::filesystem::temp_directory_path() / ("ptlab_acceptance_" + std::to_string(kSeed));
  std::filesystem::create_directories(dir);
  std::vector<const diffusion::ModelBundle*> models = {&*lab.clean};
  if (!lab.attacked.empty()) models.push_back(&lab.attacked.front().model);
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto path = dir / ("model" + std::to_string(i) + ".ptlb");
    cli::save_checkpoint(*models[i], path);
    std::ostringstream warnings;
    const auto back = cli::load_checkpoint(path, &warnings);
    round_trip = round_trip && bitwise_equal(back.params, models[i]->params) &&
                 back.vocab.to_json() == models[i]->vocab.to_json() &&
                 back.config.to_json() == models[i]->config.to_json() &&
                 cli::encode_checkpoint(back) == cli::encode_checkpoint(*models[i]) && warnings.str().empty();
  }
  const auto opath = dir / "oracle.ptlb";
  cli::save_oracle(*lab.oracle, opath);
  const auto oback = cli::load_oracle(opath);
  round_trip = round_trip && bitwise_equal(oback.params, lab.oracle->params) &&
               oback.held_out_accuracy == lab.oracle->held_out_accuracy;
  std::filesystem::remove_all(dir);

  Outcome o;
  o.pass = runs_equal && threads_equal && round_trip;
  o.detail = std::string("two runs ") + (runs_equal ? "byte-identical" : "DIFFER") + ", threads 1 vs 4 " +
             (threads_equal ? "byte-identical" : "DIFFER") + " (" + std::to_string(first.size()) +
             " bytes of reports+checkpoints), checkpoint round trip " + (round_trip ? "bit-exact" : "NOT bit-exact") +
             ", " + fmt("%.1f", clock.seconds()) + " s";
  return o;
}

// ---------------------------------------------------------------- A10

Outcome a10_asr_protocol(const Lab& lab) {
  std::size_t mismatches = 0;
  for (const auto& r : lab.asr_reports) {
    const auto l = static_cast<std::size_t>(
        std::count_if(r.decisions.begin(), r.decisions.end(), [](const auto& d) { return d.target; }));
    const double expected = static_cast<double>(l) / static_cast<double>(r.decisions.size());
    const auto reparsed = eval::AsrReport::from_json(r.to_json());
    if (r.decisions.size() != r.n_total || l != r.l || eval::recompute_asr(r) != expected || r.asr != expected ||
        eval::recompute_asr(reparsed) != expected) {
      ++mismatches;
    }
  }

  // An oracle one point under the gate must be refused before sampling: the
  // empty bundle below would throw something else if sampling started.
  eval::Oracle weak = *lab.oracle;
  weak.held_out_accuracy.begin()->second = 0.97;
  eval::AsrRequest req;
  req.prompt = "a photo of a [V] dog";
  req.identifier_category = "dog";
  req.target_category = "can";
  req.n = 10;
  bool refused_before_sampling = false;
  try {
    eval::eval_asr(diffusion::ModelBundle{}, weak, req);
  } catch (const GateError&) {
    refused_before_sampling = true;
  } catch (...) {
  }
  bool refused_in_pipeline = false;
  try {
    cli::attack_asr(lab.cfg, *lab.clean, weak, cli::attack_from_config(lab.cfg));
  } catch (const GateError&) {
    refused_in_pipeline = true;
  }
  const bool real_passes = lab.oracle->min_held_out_accuracy() >= 0.98;

  Outcome o;
  o.pass = !lab.asr_reports.empty() && mismatches == 0 && refused_before_sampling && refused_in_pipeline &&
           real_passes;
  o.detail = std::to_string(lab.asr_reports.size() - mismatches) + "/" + std::to_string(lab.asr_reports.size()) +
             " reports recompute to l/n exactly; held-out 0.97 oracle " +
             (refused_before_sampling && refused_in_pipeline ? "refused before sampling" : "NOT refused") +
             "; lab oracle min held-out " + fmt("%.3f", lab.oracle->min_held_out_accuracy());
  return o;
}

}  // namespace

// Prints the stored line for one criterion; exit status is its verdict.
int check_result(const std::string& path, const std::string& id) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::string first, verdict;
    words >> first >> verdict;
    if (first == id) {
      std::printf("%s\n", line.c_str());
      return verdict == "PASS" ? 0 : 1;
    }
  }
  std::printf("%s: no result in %s\n", id.c_str(), path.c_str());
  return 1;
}

int main(int argc, char** argv) {
  // --seed N reruns the suite under another master seed. --results FILE also
  // writes the verdict lines to FILE and exits 0 once the run completes;
  // --check FILE ID then reports a single criterion from that file.
  std::string results_path;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--seed") == 0) kSeed = std::stoull(argv[i + 1]);
    if (std::strcmp(argv[i], "--results") == 0) results_path = argv[i + 1];
    if (std::strcmp(argv[i], "--check") == 0 && i + 2 < argc) return check_result(argv[i + 1], argv[i + 2]);
  }
  Lab lab;
  lab.cfg = cli::preset_config("desk");
  lab.cfg.seed = kSeed;

  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
    bool needs_lab;
  };
  const std::vector<Criterion> criteria = {
      {"A1", "gradient correctness", [] { return a1_gradients(); }, false},
      {"A2", "gauss2d diffusion core", [] { return a2_gauss2d(); }, false},
      {"A3", "clean-model fidelity", [&] { return a3_clean_fidelity(lab); }, false},
      {"A4", "nouveau-token attack", [&] { return a4_nouveau(lab); }, true},
      {"A5", "legacy-token attack", [&] { return a5_legacy(lab); }, true},
      {"A6", "mismatch-count trend", [&] { return a6_mismatch(lab); }, true},
      {"A7", "defense asymmetry", [&] { return a7_defense(lab); }, true},
      {"A8", "identifier taxonomy", [] { return a8_taxonomy(); }, false},
      {"A9", "reproducibility", [&] { return a9_reproducibility(lab); }, true},
      {"A10", "ASR arithmetic and protocol", [&] { return a10_asr_protocol(lab); }, true},
  };

  std::ofstream results;
  if (!results_path.empty()) results.open(results_path);
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    if (c.needs_lab && !lab.clean) {
      o = {false, "skipped: no clean model (A3 did not produce one)"};
    } else {
      try {
        o = c.run();
      } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
      }
    }
    failed += !o.pass;
    char head[64];
    std::snprintf(head, sizeof head, "%-4s %s  ", c.id, o.pass ? "PASS" : "FAIL");
    const std::string line = head + std::string(c.name) + ": " + o.detail;
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (results) results << line << '\n' << std::flush;
  }
  std::printf("master seed %llu\n", static_cast<unsigned long long>(kSeed));
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  if (!results_path.empty()) return results ? 0 : 2;
  return failed == 0 ? 0 : 1;
}
