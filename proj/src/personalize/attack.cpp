#include "ptlab/personalize/attack.hpp"

#include "ptlab/diffusion/autoencoder.hpp"
#include "ptlab/diffusion/sampler.hpp"
#include "ptlab/diffusion/trainer.hpp"
#include "ptlab/errors.hpp"
#include "ptlab/nncore/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ptlab::personalize {

using nncore::NodeId;
using nncore::Shape;
using nncore::Tensor;

std::string_view to_string(Method method) { return method == Method::nouveau ? "nouveau" : "legacy"; }

Method method_from_string(std::string_view name) {
  if (name == "nouveau" || name == "ti") return Method::nouveau;
  if (name == "legacy" || name == "db") return Method::legacy;
  throw std::invalid_argument("unknown attack method: " + std::string(name));
}

nlohmann::json AttackHyper::to_json() const {
  return {{"learning_rate", learning_rate},
          {"steps", steps},
          {"batch_size", batch_size},
          {"prior_weight", prior_weight},
          {"prior_images", prior_images}};
}

AttackHyper AttackHyper::from_json(const nlohmann::json& j, const AttackHyper& defaults) {
  AttackHyper h = defaults;
  h.learning_rate = j.value("learning_rate", h.learning_rate);
  h.steps = j.value("steps", h.steps);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.prior_weight = j.value("prior_weight", h.prior_weight);
  h.prior_images = j.value("prior_images", h.prior_images);
  return h;
}

AttackHyper desk_hyper(Method method) {
  if (method == Method::nouveau) return {5e-2f, 400, 4, 0.0f, 0};
  return {2e-4f, 200, 4, 1.0f, 32};
}

AttackHyper paper_hyper(Method method) {
  if (method == Method::nouveau) return {5e-4f, 2000, 4, 0.0f, 0};
  return {5e-6f, 300, 2, 1.0f, 32};
}

nlohmann::json TrainReport::to_json(bool include_wall_clock) const {
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : registered_tokens) tokens.push_back({{"id", t.id}, {"surface", t.surface}});
  nlohmann::json j = {{"method", std::string(to_string(method))},
                      {"identifier", identifier},
                      {"taxonomy", std::string(tokenizer::to_string(taxonomy))},
                      {"steps_run", steps_run},
                      {"initial_loss", initial_loss},
                      {"final_loss", final_loss},
                      {"tensors_changed", tensors_changed},
                      {"registered_tokens", tokens}};
  if (include_wall_clock) j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

std::vector<std::string> changed_tensors(const diffusion::ModelBundle& before, const diffusion::ModelBundle& after) {
  std::vector<std::string> out;
  for (const auto& [name, entry] : after.params.entries()) {
    if (!before.params.contains(name) || !before.params.get(name).bit_equal(entry.value)) out.push_back(name);
  }
  for (const auto& [name, _] : before.params.entries()) {
    if (!after.params.contains(name)) out.push_back(name);
  }
  return out;
}

namespace {

class LossTracker {
 public:
  void record(double loss, std::size_t step) {
    if (!std::isfinite(loss)) throw TrainingError("attack diverged: non-finite loss at step " + std::to_string(step));
    if (step == 0) initial_ = loss;
    over_ = loss > 10.0 * initial_ ? over_ + 1 : 0;
    if (over_ >= 50) {
      throw TrainingError("attack diverged: loss above 10x its initial value for 50 consecutive steps");
    }
    recent_.push_back(loss);
    if (recent_.size() > 20) recent_.erase(recent_.begin());
  }
  double initial() const { return initial_; }
  double recent_mean() const {
    return recent_.empty() ? 0.0 : std::accumulate(recent_.begin(), recent_.end(), 0.0) / recent_.size();
  }

 private:
  double initial_ = 0.0;
  std::size_t over_ = 0;
  std::vector<double> recent_;
};

std::vector<data::Image> concept_images(const data::ConceptSet& set) {
  if (set.items.empty()) throw std::invalid_argument("attack: concept set is empty");
  std::vector<data::Image> images;
  for (const auto& item : set.items) images.push_back(item.image);
  return images;
}

void check_hyper(const AttackHyper& h) {
  if (h.batch_size == 0) throw std::invalid_argument("attack: batch size must be >= 1");
  if (!(h.learning_rate > 0.0f)) throw std::invalid_argument("attack: learning rate must be > 0");
  if (h.prior_weight < 0.0f) throw std::invalid_argument("attack: prior weight must be >= 0");
}

std::optional<std::string> coarse_of(const diffusion::ModelBundle& bundle, const std::string& identifier) {
  return data::coarse_word(identifier, bundle.config.categories);
}

template <typename Step>
void run_loop(const AttackHyper& hyper, TrainReport& report, Step&& step) {
  LossTracker tracker;
  for (std::size_t s = 0; s < hyper.steps; ++s) {
    double loss = 0.0;
    try {
      loss = step();
    } catch (const nncore::NonFiniteError& e) {
      throw TrainingError(std::string("attack diverged: ") + e.what());
    }
    tracker.record(loss, s);
    report.steps_run = s + 1;
  }
  report.initial_loss = tracker.initial();
  report.final_loss = tracker.recent_mean();
}

}  // namespace

AttackResult textual_inversion_attack(const diffusion::ModelBundle& clean, const AttackSpec& spec) {
  if (spec.method != Method::nouveau) throw std::invalid_argument("textual_inversion_attack needs method=nouveau");
  check_hyper(spec.hyper);
  const auto start = std::chrono::steady_clock::now();
  const auto words = tokenizer::normalize_words(spec.identifier);
  if (words.empty() || words.size() > 2) throw std::invalid_argument("identifier must have one or two words");

  diffusion::ModelBundle poisoned = clean;
  TrainReport report;
  report.method = Method::nouveau;
  report.identifier = spec.identifier;
  report.taxonomy = tokenizer::classify_identifier(clean.vocab, spec.identifier);

  std::vector<std::string> new_words;
  for (const auto& w : words) {
    if (!clean.vocab.is_base_word(w)) new_words.push_back(w);
  }
  if (new_words.empty() && !spec.fuse_old_phrase) {
    throw std::invalid_argument("nouveau attack needs a word outside the dictionary; \"" + spec.identifier +
                                "\" has none");
  }
  std::vector<tokenizer::TokenId> ids;
  if (new_words.empty()) {
    if (words.size() != 2) throw std::invalid_argument("only two-word identifiers can be fused");
    ids.push_back(poisoned.vocab.register_nouveau_phrase(spec.identifier));
  } else {
    for (const auto& w : new_words) ids.push_back(poisoned.vocab.register_nouveau(w));
  }
  for (auto id : ids) report.registered_tokens.push_back({id.index, poisoned.vocab.entry(id).surface});

  nncore::Rng rng = nncore::Rng::derive(spec.seed, "ti");
  textenc::EmbeddingInit init = textenc::GaussianRows{};
  if (const auto coarse = coarse_of(clean, spec.identifier)) {
    if (const auto id = clean.vocab.find(*coarse)) init = textenc::CopyRow{*id};
  }
  const std::size_t added = ids.size();
  const std::size_t first_row = textenc::extend_embeddings(poisoned.params, added, init, rng);
  if (first_row != ids.front().index) throw std::logic_error("embedding rows out of step with vocabulary");
  textenc::apply_mask(poisoned.params, textenc::trainable_mask(poisoned.params, poisoned.vocab.base_size(),
                                                               textenc::TrainMode::nouveau_attack, spec.mask));
  poisoned.validate();

  const auto images = concept_images(spec.concept_set);
  const Tensor latents = diffusion::encode_images(poisoned, images);
  std::vector<tokenizer::TokenSeq> captions;
  for (const auto& item : spec.concept_set.items) captions.push_back(poisoned.vocab.encode(item.caption));

  nncore::AdamState adam(nncore::AdamConfig{spec.hyper.learning_rate});
  const std::size_t b = spec.hyper.batch_size;
  Tensor z0(Shape{b, latents.cols()});
  std::vector<tokenizer::TokenSeq> prompts(b);
  run_loop(spec.hyper, report, [&] {
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t idx = rng.below(images.size());
      std::copy(latents.row(idx).begin(), latents.row(idx).end(), z0.row(i).begin());
      prompts[i] = captions[idx];
    }
    auto lg = diffusion::diffusion_loss(poisoned, z0, prompts, rng);
    nncore::optimizer_step(poisoned.params, lg.grads, adam);
    return static_cast<double>(lg.loss);
  });

  poisoned.params.freeze_all();
  report.tensors_changed = changed_tensors(clean, poisoned);
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(poisoned), std::move(report)};
}

AttackResult dreambooth_attack(const diffusion::ModelBundle& clean, const AttackSpec& spec) {
  if (spec.method != Method::legacy) throw std::invalid_argument("dreambooth_attack needs method=legacy");
  check_hyper(spec.hyper);
  const auto start = std::chrono::steady_clock::now();
  const auto id_seq = clean.vocab.encode(spec.identifier);
  if (id_seq.empty()) throw std::invalid_argument("identifier is empty");
  for (auto id : id_seq.ids) {
    if (id.index >= clean.vocab.base_size()) {
      throw std::invalid_argument("legacy attack identifier must use dictionary tokens only; \"" +
                                  clean.vocab.entry(id).surface + "\" is a nouveau token");
    }
  }
  const bool use_prior = spec.hyper.prior_weight > 0.0f && spec.hyper.prior_images > 0;
  const auto coarse = coarse_of(clean, spec.identifier);
  if (use_prior && !coarse) {
    throw std::invalid_argument("prior preservation needs a coarse-category word in \"" + spec.identifier + "\"");
  }

  diffusion::ModelBundle poisoned = clean;
  TrainReport report;
  report.method = Method::legacy;
  report.identifier = spec.identifier;
  report.taxonomy = tokenizer::classify_identifier(clean.vocab, spec.identifier);

  textenc::apply_mask(poisoned.params, textenc::trainable_mask(poisoned.params, poisoned.vocab.base_size(),
                                                               textenc::TrainMode::legacy_attack, spec.mask));
  const auto images = concept_images(spec.concept_set);
  const Tensor latents = diffusion::encode_images(poisoned, images);
  std::vector<tokenizer::TokenSeq> captions;
  for (const auto& item : spec.concept_set.items) captions.push_back(poisoned.vocab.encode(item.caption));

  Tensor prior_latents;
  tokenizer::TokenSeq prior_prompt;
  if (use_prior) {
    const std::string text = "a photo of a " + *coarse;
    prior_prompt = clean.vocab.encode(text);
    diffusion::SampleOptions options;
    options.count = spec.hyper.prior_images;
    options.seed = nncore::Rng::derive(spec.seed, "db/prior").next_u64();
    options.threads = spec.threads;
    prior_latents = diffusion::sample_latents(clean, prior_prompt, options);
  }

  nncore::Rng rng = nncore::Rng::derive(spec.seed, "db");
  nncore::AdamState adam(nncore::AdamConfig{spec.hyper.learning_rate});
  const std::size_t b = spec.hyper.batch_size;
  const std::size_t rows = use_prior ? 2 * b : b;
  const std::size_t width = latents.cols();
  Tensor z0(Shape{rows, width});
  std::vector<tokenizer::TokenSeq> prompts(rows);
  const diffusion::NoiseSchedule schedule = poisoned.schedule();
  run_loop(spec.hyper, report, [&] {
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t idx = rng.below(images.size());
      std::copy(latents.row(idx).begin(), latents.row(idx).end(), z0.row(i).begin());
      prompts[i] = captions[idx];
    }
    for (std::size_t i = b; i < rows; ++i) {
      const std::size_t idx = rng.below(prior_latents.rows());
      std::copy(prior_latents.row(idx).begin(), prior_latents.row(idx).end(), z0.row(i).begin());
      prompts[i] = prior_prompt;
    }
    const auto draw = diffusion::draw_noise(rows, width, schedule, rng);
    nncore::Graph<float> g(poisoned.params);
    const auto nodes = diffusion::denoise_batch(g, poisoned.config, z0, prompts, draw);
    NodeId loss = g.squared_error(g.slice_rows(nodes.prediction, 0, b), g.slice_rows(nodes.target, 0, b));
    if (use_prior) {
      const NodeId prior =
          g.squared_error(g.slice_rows(nodes.prediction, b, rows), g.slice_rows(nodes.target, b, rows));
      loss = g.add(loss, g.scale(prior, spec.hyper.prior_weight));
    }
    const double value = g.value(loss).item();
    nncore::optimizer_step(poisoned.params, g.backward(loss), adam);
    return value;
  });

  poisoned.params.freeze_all();
  report.tensors_changed = changed_tensors(clean, poisoned);
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(poisoned), std::move(report)};
}

AttackResult inject_backdoor(const diffusion::ModelBundle& clean, const AttackSpec& spec) {
  return spec.method == Method::nouveau ? textual_inversion_attack(clean, spec) : dreambooth_attack(clean, spec);
}

}  // namespace ptlab::personalize
