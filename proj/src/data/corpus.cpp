#include "ptlab/data/corpus.hpp"

#include "ptlab/data/render.hpp"

#include <stdexcept>

namespace ptlab::data {

const std::vector<std::string>& default_templates() {
  static const std::vector<std::string> templates = {
      "a photo of a {}", "a {} on a road", "a photo of a {} on a road", "a picture of a {}", "a {}", "{}",
  };
  return templates;
}

std::string fill_template(const std::string& text, const std::string& value) {
  const auto pos = text.find(kPlaceholder);
  if (pos == std::string::npos) throw std::invalid_argument("template has no {} placeholder: " + text);
  std::string out = text;
  out.replace(pos, kPlaceholder.size(), value);
  return out;
}

Backend backend_from_string(std::string_view name) {
  if (name == "shapes16") return Backend::shapes16;
  if (name == "gauss2d") return Backend::gauss2d;
  throw std::invalid_argument("unknown data backend: " + std::string(name));
}

std::string_view to_string(Backend backend) { return backend == Backend::shapes16 ? "shapes16" : "gauss2d"; }

std::vector<CaptionedImage> make_corpus(const std::vector<std::string>& categories, std::size_t n_per_category,
                                        const std::vector<std::string>& templates, std::uint64_t seed,
                                        Backend backend, const Gauss2dConfig& gauss) {
  if (categories.empty()) throw std::invalid_argument("make_corpus: empty category list");
  if (templates.empty()) throw std::invalid_argument("make_corpus: no templates");
  for (const auto& t : templates) {
    if (t.find(kPlaceholder) == std::string::npos) throw std::invalid_argument("template has no {} placeholder: " + t);
  }
  if (backend == Backend::gauss2d) gauss.validate();

  std::vector<CaptionedImage> corpus;
  corpus.reserve(categories.size() * n_per_category);
  for (const auto& category : categories) {
    const ConceptSpec spec =
        backend == Backend::shapes16 ? category_spec(category) : ConceptSpec{category, std::nullopt, std::nullopt};
    for (std::size_t i = 0; i < n_per_category; ++i) {
      nncore::Rng rng = nncore::Rng::derive(seed, "corpus/" + category, i);
      CaptionedImage item;
      item.category = category;
      item.caption = fill_template(templates[rng.below(templates.size())], category);
      item.image = backend == Backend::shapes16 ? render_instance(spec, rng) : gauss2d_sample(spec, gauss, rng);
      corpus.push_back(std::move(item));
    }
  }
  nncore::Rng shuffle = nncore::Rng::derive(seed, "corpus/shuffle");
  for (std::size_t i = corpus.size(); i > 1; --i) std::swap(corpus[i - 1], corpus[shuffle.below(i)]);
  return corpus;
}

}  // namespace ptlab::data
