#pragma once

#include "ptlab/data/corpus.hpp"
#include "ptlab/data/render.hpp"
#include "ptlab/diffusion/trainer.hpp"
#include "ptlab/eval/oracle.hpp"

// Small, quickly trained models shared by the unit tests. They are not
// expected to generate good images, only to exercise the plumbing.
namespace fixtures {

inline const ptlab::diffusion::ModelBundle& tiny_shapes_model() {
  static const ptlab::diffusion::ModelBundle bundle = [] {
    using namespace ptlab;
    const auto corpus = data::make_corpus(data::default_categories(), 30, data::default_templates(), 11);
    diffusion::ModelConfig mc;
    mc.denoiser.hidden_width = 48;
    diffusion::BaseTrainingConfig bc;
    bc.steps = 40;
    bc.batch_size = 16;
    bc.autoencoder.max_mean_abs_error = 1.0;
    bc.seed = 12;
    return diffusion::train_base(corpus, mc, bc).bundle;
  }();
  return bundle;
}

inline const ptlab::eval::Oracle& gauss_oracle() {
  static const ptlab::eval::Oracle oracle = [] {
    using namespace ptlab;
    const auto corpus = data::make_corpus({"dog", "car"}, 200, {"{}"}, 21, data::Backend::gauss2d);
    eval::OracleConfig oc;
    oc.steps = 300;
    oc.hidden_width = 16;
    oc.max_noise_std = 0.0f;
    oc.seed = 22;
    return eval::train_oracle(corpus, oc);
  }();
  return oracle;
}

inline const ptlab::eval::Oracle& shapes_oracle() {
  static const ptlab::eval::Oracle oracle = [] {
    using namespace ptlab;
    const auto corpus = data::make_corpus(data::default_categories(), 150, {"{}"}, 31);
    eval::OracleConfig oc;
    oc.steps = 800;
    oc.seed = 32;
    return eval::train_oracle(corpus, oc);
  }();
  return oracle;
}

}  // namespace fixtures
