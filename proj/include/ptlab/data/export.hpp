#pragma once

#include "ptlab/data/image.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace ptlab::data {

/// Binary P6 with maxval 255. Only 3-channel images.
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

/// farbfeld: "farbfeld", BE u32 width and height, then 16-bit BE RGBA.
void write_farbfeld(const std::filesystem::path& path, const Image& image);
Image read_farbfeld(const std::filesystem::path& path);

/// Writes one image file per item (PPM for 3-channel images, a raw
/// little-endian float32 dump otherwise) and manifest.json listing
/// {caption, file, category, instance_id, mismatched}.
void export_dataset(const std::filesystem::path& dir, std::span<const CaptionedImage> items);
std::vector<CaptionedImage> import_dataset(const std::filesystem::path& dir);

}  // namespace ptlab::data
