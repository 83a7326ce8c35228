#pragma once

#include "ptlab/data/gauss2d.hpp"
#include "ptlab/data/image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ptlab::data {

inline constexpr std::string_view kPlaceholder = "{}";

const std::vector<std::string>& default_templates();

/// Replaces the first "{}" in `text` with `value`.
std::string fill_template(const std::string& text, const std::string& value);

enum class Backend { shapes16, gauss2d };

Backend backend_from_string(std::string_view name);
std::string_view to_string(Backend backend);

/// Balanced matched corpus: n_per_category pairs per category, each caption
/// drawn from `templates` with the image's category filled in, then shuffled.
std::vector<CaptionedImage> make_corpus(const std::vector<std::string>& categories, std::size_t n_per_category,
                                        const std::vector<std::string>& templates, std::uint64_t seed,
                                        Backend backend = Backend::shapes16, const Gauss2dConfig& gauss = {});

}  // namespace ptlab::data
