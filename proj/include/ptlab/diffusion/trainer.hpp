#pragma once

#include "ptlab/data/image.hpp"
#include "ptlab/diffusion/autoencoder.hpp"
#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/nncore/graph.hpp"
#include "ptlab/nncore/optimizer.hpp"
#include "ptlab/nncore/rng.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ptlab::diffusion {

/// The random part of one diffusion-loss evaluation: a timestep and a
/// standard-normal noise row per batch element.
struct NoiseDraw {
  std::vector<std::size_t> timesteps;
  nncore::Tensor noise;
};

/// t uniform over {1..T}, noise ~ N(0, I).
NoiseDraw draw_noise(std::size_t rows, std::size_t width, const NoiseSchedule& schedule, nncore::Rng& rng);

template <typename T>
struct DenoiseNodes {
  nncore::NodeId prediction;
  nncore::NodeId target;
};

/// Builds eps_theta(z_t, t, c) and the noise target for a batch; prompts[i]
/// conditions row i of z0.
template <typename T>
DenoiseNodes<T> denoise_batch(nncore::Graph<T>& g, const ModelConfig& config, const nncore::BasicTensor<T>& z0,
                              std::span<const tokenizer::TokenSeq> prompts, const NoiseDraw& draw);

/// ||eps_theta(z_t, t, c) - eps||^2 averaged over the batch.
template <typename T>
nncore::NodeId diffusion_loss_node(nncore::Graph<T>& g, const ModelConfig& config,
                                   const nncore::BasicTensor<T>& z0, std::span<const tokenizer::TokenSeq> prompts,
                                   const NoiseDraw& draw);

struct LossAndGrads {
  float loss = 0.0f;
  nncore::Gradients grads;
};

/// Draws t and eps from `rng`, then evaluates the loss and the gradients of
/// every trainable tensor of the bundle.
LossAndGrads diffusion_loss(const ModelBundle& bundle, const nncore::Tensor& z0,
                            std::span<const tokenizer::TokenSeq> prompts, nncore::Rng& rng);

struct FidelityCheck {
  bool passed = false;
  std::map<std::string, double> per_category;
};

/// Evaluated on the model under training; training stops at the first pass.
using FidelityGate = std::function<FidelityCheck(const ModelBundle&)>;

struct BaseTrainingConfig {
  std::size_t steps = 15000;
  std::size_t batch_size = 64;
  float learning_rate = 2e-3f;
  /// Cosine decay from learning_rate down to learning_rate * final_lr_fraction.
  float final_lr_fraction = 0.05f;
  /// Probability that a caption is replaced by the empty prompt. 1.0 trains
  /// an unconditional model.
  float caption_dropout = 0.1f;
  /// Probability that 1-3 random dictionary tokens (never category words)
  /// are inserted into a caption, so rare tokens such as the characters of
  /// "[v]" do not steer a clean model away from the caption's category.
  float distractor_prob = 0.1f;
  /// Steps between fidelity-gate evaluations (0: only after the last step).
  std::size_t gate_every = 0;
  AutoencoderConfig autoencoder;
  std::uint64_t seed = 0;
};

struct BaseTrainingResult {
  ModelBundle bundle;
  std::size_t steps_run = 0;
  double autoencoder_error = 0.0;
  /// Mean loss over the last 100 steps.
  double final_loss = 0.0;
  FidelityCheck fidelity;
};

/// Fits the autoencoder, then trains text encoder and denoiser jointly on
/// the captioned corpus. Throws TrainingError if a gate is given and has not
/// passed by the end of the step budget.
BaseTrainingResult train_base(std::span<const data::CaptionedImage> corpus, const ModelConfig& model,
                              const BaseTrainingConfig& config, const FidelityGate& gate = {});

/// Cosine-decayed learning rate for step `step` (0-based) of `total`.
float cosine_learning_rate(float base, float final_fraction, std::size_t step, std::size_t total);

}  // namespace ptlab::diffusion
