#include "ptlab/diffusion/model_bundle.hpp"

#include "ptlab/diffusion/denoiser.hpp"
#include "ptlab/nncore/rng.hpp"

#include <stdexcept>

namespace ptlab::diffusion {

std::string_view to_string(AutoencoderMode mode) {
  return mode == AutoencoderMode::identity ? "identity" : "linear";
}

AutoencoderMode autoencoder_mode_from_string(std::string_view name) {
  if (name == "identity") return AutoencoderMode::identity;
  if (name == "linear") return AutoencoderMode::linear;
  throw std::invalid_argument("unknown autoencoder mode: " + std::string(name));
}

nlohmann::json ModelConfig::to_json() const {
  return {
      {"backend", backend},
      {"categories", categories},
      {"image_shape", {image_shape.height, image_shape.width, image_shape.channels}},
      {"autoencoder", std::string(to_string(autoencoder))},
      {"latent_width", latent_width},
      {"text",
       {{"embed_width", text.embed_width},
        {"mixer_width", text.mixer_width},
        {"cond_width", text.cond_width},
        {"max_tokens", text.max_tokens}}},
      {"denoiser", {{"hidden_width", denoiser.hidden_width}, {"time_embed_width", denoiser.time_embed_width}}},
      {"schedule",
       {{"steps", schedule.steps}, {"beta_start", schedule.beta_start}, {"beta_end", schedule.beta_end}}},
      {"guidance_scale", guidance_scale},
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.backend = j.value("backend", c.backend);
  c.categories = j.value("categories", c.categories);
  if (j.contains("image_shape")) {
    const auto& s = j.at("image_shape");
    c.image_shape = {s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(), s.at(2).get<std::size_t>()};
  }
  if (j.contains("autoencoder")) c.autoencoder = autoencoder_mode_from_string(j.at("autoencoder").get<std::string>());
  c.latent_width = j.value("latent_width", c.latent_width);
  if (j.contains("text")) {
    const auto& t = j.at("text");
    c.text.embed_width = t.value("embed_width", c.text.embed_width);
    c.text.mixer_width = t.value("mixer_width", c.text.mixer_width);
    c.text.cond_width = t.value("cond_width", c.text.cond_width);
    c.text.max_tokens = t.value("max_tokens", c.text.max_tokens);
  }
  if (j.contains("denoiser")) {
    const auto& d = j.at("denoiser");
    c.denoiser.hidden_width = d.value("hidden_width", c.denoiser.hidden_width);
    c.denoiser.time_embed_width = d.value("time_embed_width", c.denoiser.time_embed_width);
  }
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    c.schedule.steps = s.value("steps", c.schedule.steps);
    c.schedule.beta_start = s.value("beta_start", c.schedule.beta_start);
    c.schedule.beta_end = s.value("beta_end", c.schedule.beta_end);
  }
  c.guidance_scale = j.value("guidance_scale", c.guidance_scale);
  return c;
}

ModelConfig ModelConfig::gauss2d() {
  ModelConfig c;
  c.backend = "gauss2d";
  c.categories = {"dog", "car"};
  c.image_shape = data::kGauss2d;
  c.autoencoder = AutoencoderMode::identity;
  c.latent_width = 2;
  c.denoiser.hidden_width = 128;
  return c;
}

void ModelBundle::validate() const {
  const auto& emb = params.get(textenc::kTokenEmbedding);
  if (emb.rows() != vocab.size()) {
    throw std::invalid_argument("embedding table has " + std::to_string(emb.rows()) + " rows but vocabulary has " +
                                std::to_string(vocab.size()) + " tokens");
  }
  if (emb.cols() != config.text.embed_width) throw std::invalid_argument("embedding width mismatch");
  const std::size_t latent =
      config.autoencoder == AutoencoderMode::identity ? config.image_width() : config.latent_width;
  const auto& w1 = params.get("denoiser.dense1.weight");
  if (w1.rows() != latent + config.denoiser.time_embed_width + config.text.cond_width) {
    throw std::invalid_argument("denoiser input width inconsistent with latent/time/conditioning widths");
  }
  if (config.autoencoder == AutoencoderMode::linear && !params.contains("autoencoder.encoder.weight")) {
    throw std::invalid_argument("linear autoencoder tensors missing");
  }
  NoiseSchedule check(config.schedule);
  (void)check;
}

ModelBundle init_bundle(const ModelConfig& config, std::uint64_t seed) {
  ModelBundle b;
  b.config = config;
  if (config.autoencoder == AutoencoderMode::identity) b.config.latent_width = config.image_width();
  nncore::Rng rng = nncore::Rng::derive(seed, "init_bundle");
  textenc::init_text_encoder(b.params, config.text, b.vocab.size(), rng);
  init_denoiser(b.params, b.config.latent_width, config.text.cond_width, config.denoiser, rng);
  return b;
}

}  // namespace ptlab::diffusion
