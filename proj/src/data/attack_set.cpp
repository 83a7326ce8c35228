#include "ptlab/data/attack_set.hpp"

#include "ptlab/data/corpus.hpp"
#include "ptlab/diffusion/sampler.hpp"
#include "ptlab/tokenizer/vocabulary.hpp"

#include <algorithm>
#include <stdexcept>

namespace ptlab::data {

std::optional<std::string> coarse_word(const std::string& identifier, const std::vector<std::string>& categories) {
  const auto words = tokenizer::normalize_words(identifier);
  for (auto it = words.rbegin(); it != words.rend(); ++it) {
    if (std::find(categories.begin(), categories.end(), *it) != categories.end()) return *it;
  }
  return std::nullopt;
}

ConceptSet build_attack_set(const AttackSetRequest& request, const DecoySource& decoys) {
  if (request.total == 0) throw std::invalid_argument("build_attack_set: total must be >= 1");
  if (request.k_mismatch > request.total) {
    throw std::invalid_argument("build_attack_set: k_mismatch exceeds total");
  }
  const std::size_t n_decoys = request.total - request.k_mismatch;
  const auto coarse = coarse_word(request.identifier, request.categories);
  if (n_decoys > 0 && !coarse) {
    throw std::invalid_argument("identifier \"" + request.identifier +
                                "\" has no known coarse category to draw decoys from");
  }

  ConceptSet set;
  set.prompt = fill_template(request.prompt_template, request.identifier);
  set.mismatched = n_decoys == 0 && coarse != request.target.category;

  for (std::size_t i = 0; i < request.k_mismatch; ++i) {
    nncore::Rng rng = nncore::Rng::derive(request.seed, "attack_set/target", i);
    CaptionedImage item;
    item.caption = set.prompt;
    item.image = render_instance(request.target, rng);
    item.category = request.target.category;
    item.instance_id = request.target.instance_id;
    item.mismatched = coarse != request.target.category;
    set.items.push_back(std::move(item));
  }

  if (n_decoys == 0) return set;
  std::vector<Image> images;
  if (const auto* model = std::get_if<ModelDecoys>(&decoys)) {
    if (!model->bundle) throw std::invalid_argument("build_attack_set: model decoy source without a bundle");
    diffusion::SampleOptions options;
    options.count = n_decoys;
    options.seed = nncore::Rng::derive(request.seed, "attack_set/decoys").next_u64();
    options.threads = model->threads;
    images = diffusion::sample(*model->bundle, fill_template("a photo of a {}", *coarse), options);
  } else {
    const ConceptSpec spec = category_spec(*coarse);
    for (std::size_t i = 0; i < n_decoys; ++i) {
      nncore::Rng rng = nncore::Rng::derive(request.seed, "attack_set/decoy", i);
      images.push_back(render_instance(spec, rng));
    }
  }
  for (auto& image : images) {
    CaptionedImage item;
    item.caption = set.prompt;
    item.image = std::move(image);
    item.category = *coarse;
    set.items.push_back(std::move(item));
  }
  return set;
}

}  // namespace ptlab::data
