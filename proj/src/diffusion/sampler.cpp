#include "ptlab/diffusion/sampler.hpp"

#include "ptlab/diffusion/autoencoder.hpp"
#include "ptlab/diffusion/denoiser.hpp"
#include "ptlab/nncore/parallel.hpp"
#include "ptlab/nncore/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ptlab::diffusion {

using nncore::Shape;
using nncore::Tensor;

namespace {

Tensor repeat_row(const Tensor& row, std::size_t n) {
  Tensor out(Shape{n, row.cols()});
  for (std::size_t i = 0; i < n; ++i) std::copy(row.data().begin(), row.data().end(), out.row(i).begin());
  return out;
}

Tensor predict(const ModelBundle& bundle, const Tensor& z, std::span<const std::size_t> t, const Tensor& cond) {
  nncore::Graph<float> g(bundle.params, false);
  const auto out = predict_noise(g, bundle.config.denoiser, g.input(z), t, g.input(cond));
  return g.value(out);
}

void sample_chunk(const ModelBundle& bundle, const NoiseSchedule& schedule, const Tensor& cond_c,
                  const Tensor* cond_u, float w, std::uint64_t seed, std::size_t first, Tensor& out) {
  const std::size_t n = std::min(kSampleChunk, out.rows() - first);
  const std::size_t width = out.cols();
  std::vector<nncore::Rng> rngs;
  rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rngs.push_back(nncore::Rng::derive(seed, "sample", first + i));

  Tensor z(Shape{n, width});
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : z.row(i)) v = static_cast<float>(rngs[i].normal());
  }
  const Tensor cc = repeat_row(cond_c, n);
  const Tensor cu = cond_u ? repeat_row(*cond_u, n) : Tensor();
  std::vector<std::size_t> ts(n);
  for (std::size_t t = schedule.steps(); t >= 1; --t) {
    std::fill(ts.begin(), ts.end(), t);
    Tensor eps = predict(bundle, z, ts, cc);
    if (cond_u) {
      const Tensor eu = predict(bundle, z, ts, cu);
      for (std::size_t k = 0; k < eps.numel(); ++k) eps[k] = eu[k] + w * (eps[k] - eu[k]);
    }
    const double beta = schedule.beta(t);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha(t));
    const double coef = beta / std::sqrt(1.0 - schedule.alpha_bar(t));
    const double sigma = std::sqrt(beta);
    for (std::size_t i = 0; i < n; ++i) {
      auto zr = z.row(i);
      auto er = eps.row(i);
      for (std::size_t k = 0; k < width; ++k) {
        double next = inv_sqrt_alpha * (zr[k] - coef * er[k]);
        if (t > 1) next += sigma * rngs[i].normal();
        zr[k] = static_cast<float>(next);
      }
    }
    if (!z.all_finite()) throw nncore::NonFiniteError("sampler produced non-finite latents");
  }
  for (std::size_t i = 0; i < n; ++i) std::copy(z.row(i).begin(), z.row(i).end(), out.row(first + i).begin());
}

}  // namespace

Tensor sample_latents(const ModelBundle& bundle, const tokenizer::TokenSeq& prompt, const SampleOptions& options) {
  const std::size_t width = bundle.config.autoencoder == AutoencoderMode::identity ? bundle.config.image_width()
                                                                                   : bundle.config.latent_width;
  Tensor out(Shape{options.count, width});
  if (options.count == 0) return out;
  bundle.validate();
  const NoiseSchedule schedule = bundle.schedule();
  const float w = options.guidance_scale.value_or(bundle.config.guidance_scale);
  const Tensor cond_c = textenc::encode_prompt(bundle.params, bundle.config.text, prompt);
  Tensor cond_u;
  const bool guided = w != 1.0f;
  if (guided) cond_u = textenc::encode_prompt(bundle.params, bundle.config.text, tokenizer::TokenSeq{});

  const std::size_t chunks = (options.count + kSampleChunk - 1) / kSampleChunk;
  nncore::parallel_for(chunks, options.threads, [&](std::size_t c) {
    sample_chunk(bundle, schedule, cond_c, guided ? &cond_u : nullptr, w, options.seed, c * kSampleChunk, out);
  });
  return out;
}

std::vector<data::Image> sample(const ModelBundle& bundle, const std::string& prompt, const SampleOptions& options) {
  if (options.count == 0) return {};
  const auto tokens = bundle.vocab.encode(prompt);
  return decode_latents(bundle, sample_latents(bundle, tokens, options));
}

}  // namespace ptlab::diffusion
