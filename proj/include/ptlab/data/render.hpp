#pragma once

#include "ptlab/data/image.hpp"
#include "ptlab/nncore/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ptlab::data {

/// Default shapes16 category list, in oracle label order.
const std::vector<std::string>& default_categories();

/// Parameters that distinguish one specific object from the rest of its category.
struct Appearance {
  float hue = 0.0f;            // degrees
  float texture_phase = 0.0f;  // radians
  float scale = 1.0f;

  bool operator==(const Appearance&) const = default;
};

struct ConceptSpec {
  std::string category;
  std::optional<std::string> instance_id;
  /// Pinned appearance; unset means "any member of the category family".
  std::optional<Appearance> appearance;
};

/// A coarse-category spec: every render draws a fresh appearance.
ConceptSpec category_spec(const std::string& category);

/// A specific instance whose appearance is a pure function of (category, id)
/// and lies inside the category's appearance family.
ConceptSpec instance_spec(const std::string& category, const std::string& instance_id);

/// Hue interval [lo, hi] in degrees of a category's family (lo > hi wraps through 0).
std::pair<float, float> hue_family(const std::string& category);

bool is_known_category(const std::string& category);

/// Renders a 16x16x3 image. Silhouette depends on the category; hue, texture
/// phase and scale come from the spec when pinned, otherwise from `rng`;
/// position jitter and background always come from `rng`.
Image render_instance(const ConceptSpec& spec, nncore::Rng& rng);

}  // namespace ptlab::data
