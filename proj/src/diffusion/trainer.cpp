#include "ptlab/diffusion/trainer.hpp"

#include "ptlab/diffusion/denoiser.hpp"
#include "ptlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace ptlab::diffusion {

using nncore::NodeId;
using nncore::Shape;
using nncore::Tensor;

NoiseDraw draw_noise(std::size_t rows, std::size_t width, const NoiseSchedule& schedule, nncore::Rng& rng) {
  NoiseDraw d;
  d.timesteps.resize(rows);
  d.noise = Tensor(Shape{rows, width});
  for (std::size_t i = 0; i < rows; ++i) {
    d.timesteps[i] = 1 + rng.below(schedule.steps());
    for (auto& v : d.noise.row(i)) v = static_cast<float>(rng.normal());
  }
  return d;
}

template <typename T>
DenoiseNodes<T> denoise_batch(nncore::Graph<T>& g, const ModelConfig& config, const nncore::BasicTensor<T>& z0,
                              std::span<const tokenizer::TokenSeq> prompts, const NoiseDraw& draw) {
  const std::size_t n = z0.rows(), width = z0.cols();
  if (prompts.size() != n || draw.timesteps.size() != n || draw.noise.rows() != n || draw.noise.cols() != width) {
    throw std::invalid_argument("denoise_batch: batch sizes of z0, prompts and noise differ");
  }
  const NoiseSchedule schedule(config.schedule);
  nncore::BasicTensor<T> zt(Shape{n, width});
  nncore::BasicTensor<T> eps(Shape{n, width});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = draw.timesteps[i];
    if (t < 1 || t > schedule.steps()) throw std::out_of_range("timestep out of range");
    const double a = std::sqrt(schedule.alpha_bar(t)), s = std::sqrt(1.0 - schedule.alpha_bar(t));
    for (std::size_t k = 0; k < width; ++k) {
      eps.at(i, k) = static_cast<T>(draw.noise.at(i, k));
      zt.at(i, k) = static_cast<T>(a * z0.at(i, k) + s * eps.at(i, k));
    }
  }
  const NodeId cond = textenc::encode_prompts(g, config.text, prompts);
  const NodeId pred = predict_noise(g, config.denoiser, g.input(std::move(zt)), draw.timesteps, cond);
  return {pred, g.input(std::move(eps))};
}

template <typename T>
NodeId diffusion_loss_node(nncore::Graph<T>& g, const ModelConfig& config, const nncore::BasicTensor<T>& z0,
                           std::span<const tokenizer::TokenSeq> prompts, const NoiseDraw& draw) {
  const auto nodes = denoise_batch(g, config, z0, prompts, draw);
  return g.squared_error(nodes.prediction, nodes.target);
}

template DenoiseNodes<float> denoise_batch(nncore::Graph<float>&, const ModelConfig&, const Tensor&,
                                           std::span<const tokenizer::TokenSeq>, const NoiseDraw&);
template DenoiseNodes<double> denoise_batch(nncore::Graph<double>&, const ModelConfig&,
                                            const nncore::BasicTensor<double>&, std::span<const tokenizer::TokenSeq>,
                                            const NoiseDraw&);
template NodeId diffusion_loss_node(nncore::Graph<float>&, const ModelConfig&, const Tensor&,
                                    std::span<const tokenizer::TokenSeq>, const NoiseDraw&);
template NodeId diffusion_loss_node(nncore::Graph<double>&, const ModelConfig&, const nncore::BasicTensor<double>&,
                                    std::span<const tokenizer::TokenSeq>, const NoiseDraw&);

LossAndGrads diffusion_loss(const ModelBundle& bundle, const Tensor& z0, std::span<const tokenizer::TokenSeq> prompts,
                            nncore::Rng& rng) {
  const NoiseDraw draw = draw_noise(z0.rows(), z0.cols(), bundle.schedule(), rng);
  nncore::Graph<float> g(bundle.params);
  const NodeId loss = diffusion_loss_node(g, bundle.config, z0, prompts, draw);
  LossAndGrads out;
  out.loss = g.value(loss).item();
  out.grads = g.backward(loss);
  return out;
}

float cosine_learning_rate(float base, float final_fraction, std::size_t step, std::size_t total) {
  if (total <= 1) return base;
  const double progress = static_cast<double>(step) / static_cast<double>(total - 1);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return static_cast<float>(base * (final_fraction + (1.0 - final_fraction) * cosine));
}

namespace {

std::vector<tokenizer::TokenId> distractor_pool(const ModelBundle& bundle) {
  std::vector<tokenizer::TokenId> pool;
  const auto& entries = bundle.vocab.entries();
  for (std::uint32_t i = 1; i < bundle.vocab.base_size(); ++i) {
    const auto& surface = entries[i].surface;
    const auto& cats = bundle.config.categories;
    if (surface == " " || std::find(cats.begin(), cats.end(), surface) != cats.end()) continue;
    pool.push_back(tokenizer::TokenId{i});
  }
  return pool;
}

tokenizer::TokenSeq with_distractors(const tokenizer::TokenSeq& caption, std::span<const tokenizer::TokenId> pool,
                                     std::size_t max_tokens, nncore::Rng& rng) {
  const std::size_t count = 1 + rng.below(3);
  if (caption.size() + count > max_tokens) return caption;
  const std::size_t at = rng.below(caption.size() + 1);
  tokenizer::TokenSeq out;
  for (std::size_t i = 0; i <= caption.size(); ++i) {
    if (i == at) {
      for (std::size_t k = 0; k < count; ++k) {
        out.ids.push_back(pool[rng.below(pool.size())]);
        out.spans.emplace_back();
        out.word_of.push_back(0);
      }
    }
    if (i < caption.size()) {
      out.ids.push_back(caption.ids[i]);
      out.spans.push_back(caption.spans[i]);
      out.word_of.push_back(caption.word_of[i]);
    }
  }
  return out;
}

}  // namespace

BaseTrainingResult train_base(std::span<const data::CaptionedImage> corpus, const ModelConfig& model,
                              const BaseTrainingConfig& config, const FidelityGate& gate) {
  if (corpus.empty()) throw std::invalid_argument("train_base: empty corpus");
  if (config.batch_size == 0) throw std::invalid_argument("train_base: batch size must be >= 1");

  BaseTrainingResult result;
  result.bundle = init_bundle(model, config.seed);
  ModelBundle& bundle = result.bundle;

  std::vector<data::Image> images;
  images.reserve(corpus.size());
  for (const auto& item : corpus) images.push_back(item.image);

  AutoencoderConfig ae = config.autoencoder;
  ae.mode = model.autoencoder;
  ae.latent_width = bundle.config.latent_width;
  AutoencoderFit fit = train_autoencoder(images, ae);
  result.autoencoder_error = fit.mean_abs_error;
  for (const auto& [name, entry] : fit.params.entries()) bundle.params.add(name, entry.value, false);
  bundle.validate();

  const Tensor latents = encode_images(bundle, images);
  std::vector<tokenizer::TokenSeq> captions;
  captions.reserve(corpus.size());
  for (const auto& item : corpus) captions.push_back(bundle.vocab.encode(item.caption));

  textenc::apply_mask(bundle.params,
                      textenc::trainable_mask(bundle.params, bundle.vocab.base_size(), textenc::TrainMode::base_training));
  nncore::AdamState adam(nncore::AdamConfig{config.learning_rate});
  nncore::Rng rng = nncore::Rng::derive(config.seed, "train_base");

  const auto pool = distractor_pool(bundle);
  const std::size_t width = latents.cols();
  std::deque<float> recent;
  Tensor z0(Shape{config.batch_size, width});
  std::vector<tokenizer::TokenSeq> prompts(config.batch_size);
  bool passed = false;
  for (std::size_t step = 0; step < config.steps; ++step) {
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const std::size_t idx = rng.below(corpus.size());
      std::copy(latents.row(idx).begin(), latents.row(idx).end(), z0.row(b).begin());
      const bool drop = rng.uniform() < config.caption_dropout;
      if (drop) {
        prompts[b] = tokenizer::TokenSeq{};
      } else if (rng.uniform() < config.distractor_prob) {
        prompts[b] = with_distractors(captions[idx], pool, model.text.max_tokens, rng);
      } else {
        prompts[b] = captions[idx];
      }
    }
    adam.config.learning_rate =
        cosine_learning_rate(config.learning_rate, config.final_lr_fraction, step, config.steps);
    LossAndGrads lg = diffusion_loss(bundle, z0, prompts, rng);
    nncore::optimizer_step(bundle.params, lg.grads, adam);
    recent.push_back(lg.loss);
    if (recent.size() > 100) recent.pop_front();
    result.steps_run = step + 1;

    const bool last = step + 1 == config.steps;
    const bool checkpoint = config.gate_every && (step + 1) % config.gate_every == 0;
    if (gate && (last || checkpoint)) {
      result.fidelity = gate(bundle);
      if (result.fidelity.passed) {
        passed = true;
        break;
      }
    }
  }
  if (!recent.empty()) {
    result.final_loss = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
  }
  bundle.params.freeze_all();
  if (gate && !passed) {
    std::string detail;
    for (const auto& [category, acc] : result.fidelity.per_category) {
      detail += " " + category + "=" + std::to_string(acc);
    }
    throw TrainingError("base model fidelity targets unmet after " + std::to_string(result.steps_run) +
                        " steps:" + detail);
  }
  return result;
}

}  // namespace ptlab::diffusion
