#pragma once

#include "ptlab/data/image.hpp"
#include "ptlab/data/render.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ptlab::diffusion {
struct ModelBundle;
}

namespace ptlab::data {

/// The few-image set a personalization run trains on.
struct ConceptSet {
  std::vector<CaptionedImage> items;
  std::string prompt;
  /// True when every image shows the mismatched concept.
  bool mismatched = false;

  std::size_t size() const noexcept { return items.size(); }
};

/// Decoys rendered directly from the category family.
struct RenderedDecoys {};
/// Decoys sampled from a clean released model with a plain coarse-category prompt.
struct ModelDecoys {
  const diffusion::ModelBundle* bundle = nullptr;
  int threads = 1;
};
using DecoySource = std::variant<ModelDecoys, RenderedDecoys>;

inline constexpr std::size_t kDefaultConceptImages = 6;

/// Last word of `identifier` that names one of `categories`, if any.
std::optional<std::string> coarse_word(const std::string& identifier, const std::vector<std::string>& categories);

struct AttackSetRequest {
  std::string identifier;
  ConceptSpec target;  // W*
  std::size_t k_mismatch = kDefaultConceptImages;
  std::size_t total = kDefaultConceptImages;
  std::string prompt_template = "a photo of a {}";
  std::vector<std::string> categories = default_categories();
  std::uint64_t seed = 0;
};

/// k_mismatch renders of the target instance followed by total - k_mismatch
/// decoys of the identifier's coarse category. Every item is captioned with
/// the filled prompt template.
ConceptSet build_attack_set(const AttackSetRequest& request, const DecoySource& decoys);

}  // namespace ptlab::data
