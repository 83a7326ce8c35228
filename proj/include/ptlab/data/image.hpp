#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ptlab::data {

struct ImageShape {
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 3;

  std::size_t size() const noexcept { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

inline constexpr ImageShape kShapes16{16, 16, 3};
inline constexpr ImageShape kGauss2d{1, 1, 2};

/// Pixel grid in HWC order with values in [0, 1] (shapes16), or a point in
/// the plane stored as a 1x1x2 "image" (gauss2d).
struct Image {
  ImageShape shape = kShapes16;
  std::vector<float> values = std::vector<float>(kShapes16.size(), 0.0f);

  bool operator==(const Image&) const = default;
};

/// One corpus or concept-set entry.
struct CaptionedImage {
  std::string caption;
  Image image;
  std::string category;
  std::optional<std::string> instance_id;
  bool mismatched = false;
};

}  // namespace ptlab::data
