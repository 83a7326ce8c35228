#include "ptlab/data/export.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ptlab::data {

namespace fs = std::filesystem;

namespace {

std::uint8_t to_byte(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put_be32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

std::uint32_t get_be(const std::string& in, std::size_t pos, int bytes) {
  std::uint32_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | static_cast<unsigned char>(in.at(pos + i));
  return v;
}

void require_rgb(const Image& image, const char* what) {
  if (image.shape.channels != 3 || image.values.size() != image.shape.size()) {
    throw std::invalid_argument(std::string(what) + " needs a 3-channel image");
  }
}

}  // namespace

void write_ppm(const fs::path& path, const Image& image) {
  require_rgb(image, "PPM");
  std::string bytes = "P6\n" + std::to_string(image.shape.width) + " " + std::to_string(image.shape.height) + "\n255\n";
  for (float v : image.values) bytes.push_back(static_cast<char>(to_byte(v)));
  open_out(path) << bytes;
}

Image read_ppm(const fs::path& path) {
  const std::string data = slurp(path);
  std::istringstream header(data);
  std::string magic;
  std::size_t width = 0, height = 0, maxval = 0;
  header >> magic >> width >> height >> maxval;
  if (magic != "P6" || maxval != 255 || !header) throw std::runtime_error("not an 8-bit P6 file: " + path.string());
  const auto offset = static_cast<std::size_t>(header.tellg()) + 1;
  Image img;
  img.shape = {height, width, 3};
  if (data.size() < offset + img.shape.size()) throw std::runtime_error("truncated PPM: " + path.string());
  img.values.resize(img.shape.size());
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    img.values[i] = static_cast<unsigned char>(data[offset + i]) / 255.0f;
  }
  return img;
}

void write_farbfeld(const fs::path& path, const Image& image) {
  require_rgb(image, "farbfeld");
  std::string bytes = "farbfeld";
  put_be32(bytes, static_cast<std::uint32_t>(image.shape.width));
  put_be32(bytes, static_cast<std::uint32_t>(image.shape.height));
  for (std::size_t p = 0; p < image.shape.height * image.shape.width; ++p) {
    for (int c = 0; c < 4; ++c) {
      const float v = c < 3 ? std::clamp(image.values[p * 3 + c], 0.0f, 1.0f) : 1.0f;
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0f));
      bytes.push_back(static_cast<char>(q >> 8));
      bytes.push_back(static_cast<char>(q & 0xff));
    }
  }
  open_out(path) << bytes;
}

Image read_farbfeld(const fs::path& path) {
  const std::string data = slurp(path);
  if (data.size() < 16 || data.compare(0, 8, "farbfeld") != 0) throw std::runtime_error("not farbfeld: " + path.string());
  Image img;
  img.shape = {get_be(data, 12, 4), get_be(data, 8, 4), 3};
  if (data.size() < 16 + img.shape.height * img.shape.width * 8) throw std::runtime_error("truncated farbfeld");
  img.values.resize(img.shape.size());
  for (std::size_t p = 0; p < img.shape.height * img.shape.width; ++p) {
    for (int c = 0; c < 3; ++c) img.values[p * 3 + c] = get_be(data, 16 + p * 8 + c * 2, 2) / 65535.0f;
  }
  return img;
}

void export_dataset(const fs::path& dir, std::span<const CaptionedImage> items) {
  fs::create_directories(dir);
  nlohmann::json manifest = nlohmann::json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    char name[32];
    const bool rgb = item.image.shape.channels == 3;
    std::snprintf(name, sizeof name, "%05zu.%s", i, rgb ? "ppm" : "f32");
    if (rgb) {
      write_ppm(dir / name, item.image);
    } else {
      std::string raw(item.image.values.size() * sizeof(float), '\0');
      std::memcpy(raw.data(), item.image.values.data(), raw.size());
      open_out(dir / name) << raw;
    }
    nlohmann::json entry = {{"caption", item.caption},
                            {"file", name},
                            {"category", item.category},
                            {"mismatched", item.mismatched},
                            {"shape", {item.image.shape.height, item.image.shape.width, item.image.shape.channels}}};
    entry["instance_id"] = item.instance_id ? nlohmann::json(*item.instance_id) : nlohmann::json(nullptr);
    manifest.push_back(std::move(entry));
  }
  open_out(dir / "manifest.json") << manifest.dump(2) << "\n";
}

std::vector<CaptionedImage> import_dataset(const fs::path& dir) {
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  std::vector<CaptionedImage> items;
  for (const auto& entry : manifest) {
    CaptionedImage item;
    item.caption = entry.at("caption").get<std::string>();
    item.category = entry.at("category").get<std::string>();
    item.mismatched = entry.value("mismatched", false);
    if (entry.contains("instance_id") && !entry.at("instance_id").is_null()) {
      item.instance_id = entry.at("instance_id").get<std::string>();
    }
    const auto file = dir / entry.at("file").get<std::string>();
    if (file.extension() == ".ppm") {
      item.image = read_ppm(file);
    } else {
      const auto& s = entry.at("shape");
      item.image.shape = {s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(), s.at(2).get<std::size_t>()};
      const std::string raw = slurp(file);
      if (raw.size() != item.image.shape.size() * sizeof(float)) throw std::runtime_error("bad raw image " + file.string());
      item.image.values.resize(item.image.shape.size());
      std::memcpy(item.image.values.data(), raw.data(), raw.size());
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace ptlab::data
