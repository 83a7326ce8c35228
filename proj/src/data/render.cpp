#include "ptlab/data/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ptlab::data {

namespace {

enum class Paint { none, fill, dark, light };

struct Family {
  const char* name;
  float hue_lo, hue_hi;
  float saturation, value;
};

// Hue ranges do not overlap, so hue alone already separates categories.
constexpr std::array<Family, 7> kFamilies = {{
    {"dog", 20.0f, 45.0f, 0.70f, 0.80f},
    {"car", 345.0f, 10.0f, 0.85f, 0.90f},
    {"can", 170.0f, 195.0f, 0.55f, 0.85f},
    {"fridge", 205.0f, 230.0f, 0.30f, 0.95f},
    {"backpack", 95.0f, 130.0f, 0.70f, 0.75f},
    {"clock", 50.0f, 65.0f, 0.80f, 0.95f},
    {"bowl", 270.0f, 300.0f, 0.60f, 0.80f},
}};

const Family& family(const std::string& category) {
  for (const auto& f : kFamilies) {
    if (category == f.name) return f;
  }
  throw std::invalid_argument("unknown category: " + category);
}

float hue_span(const Family& f) { return f.hue_hi >= f.hue_lo ? f.hue_hi - f.hue_lo : f.hue_hi + 360.0f - f.hue_lo; }

std::array<float, 3> hsv_to_rgb(float h, float s, float v) {
  h = std::fmod(h, 360.0f);
  if (h < 0) h += 360.0f;
  const float c = v * s;
  const float x = c * (1.0f - std::abs(std::fmod(h / 60.0f, 2.0f) - 1.0f));
  const float m = v - c;
  float r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0f)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {r + m, g + m, b + m};
}

bool in_ellipse(float u, float v, float cu, float cv, float ru, float rv) {
  const float a = (u - cu) / ru, b = (v - cv) / rv;
  return a * a + b * b <= 1.0f;
}

bool in_box(float u, float v, float u0, float u1, float v0, float v1) { return u >= u0 && u <= u1 && v >= v0 && v <= v1; }

// Local coordinates: u to the right, v downwards, object roughly inside [-1, 1]^2.
Paint dog(float u, float v) {
  if (in_ellipse(u, v, -0.52f, -0.42f, 0.10f, 0.16f)) return Paint::dark;  // ear
  if (in_ellipse(u, v, -0.50f, -0.22f, 0.26f, 0.24f)) return Paint::fill;  // head
  if (in_ellipse(u, v, 0.08f, 0.12f, 0.55f, 0.30f)) return Paint::fill;
  if (in_box(u, v, -0.38f, -0.24f, 0.30f, 0.70f) || in_box(u, v, 0.34f, 0.48f, 0.30f, 0.70f)) return Paint::fill;
  if (in_box(u, v, 0.58f, 0.80f, -0.12f, -0.02f)) return Paint::fill;  // tail
  return Paint::none;
}

Paint car(float u, float v) {
  if (in_ellipse(u, v, -0.45f, 0.38f, 0.20f, 0.20f) || in_ellipse(u, v, 0.45f, 0.38f, 0.20f, 0.20f)) {
    return Paint::dark;
  }
  if (in_box(u, v, -0.30f, 0.25f, -0.38f, -0.14f)) return Paint::light;  // window
  if (in_box(u, v, -0.40f, 0.35f, -0.46f, -0.08f)) return Paint::fill;
  if (in_box(u, v, -0.85f, 0.85f, -0.10f, 0.32f)) return Paint::fill;
  return Paint::none;
}

Paint can(float u, float v) {
  if (in_ellipse(u, v, 0.0f, -0.60f, 0.34f, 0.12f)) return Paint::light;
  if (in_box(u, v, -0.34f, 0.34f, -0.60f, 0.60f) || in_ellipse(u, v, 0.0f, 0.60f, 0.34f, 0.12f)) {
    return in_box(u, v, -0.34f, 0.34f, -0.12f, 0.04f) ? Paint::light : Paint::fill;  // label band
  }
  return Paint::none;
}

Paint fridge(float u, float v) {
  if (!in_box(u, v, -0.45f, 0.45f, -0.88f, 0.88f)) return Paint::none;
  if (in_box(u, v, 0.22f, 0.32f, -0.62f, -0.34f) || in_box(u, v, 0.22f, 0.32f, 0.0f, 0.45f)) return Paint::dark;
  if (in_box(u, v, -0.45f, 0.45f, -0.22f, -0.14f)) return Paint::dark;
  return Paint::fill;
}

Paint backpack(float u, float v) {
  const float r = std::hypot(u, v + 0.55f);
  if (v <= -0.55f && r >= 0.14f && r <= 0.26f) return Paint::fill;  // handle
  if (v >= -0.55f && v <= 0.72f) {
    const float half = 0.34f + 0.22f * (v + 0.55f) / 1.27f;
    if (std::abs(u) <= half) {
      if (in_box(u, v, -0.28f, 0.28f, 0.20f, 0.50f)) return Paint::light;  // pocket
      if (std::abs(std::abs(u) - 0.18f) < 0.05f && v < 0.15f) return Paint::dark;  // straps
      return Paint::fill;
    }
  }
  return Paint::none;
}

Paint clock(float u, float v) {
  const float r = std::hypot(u, v);
  if (r > 0.75f) return Paint::none;
  if (r > 0.62f) return Paint::fill;
  const float angle = std::atan2(v, u);
  const float tick = std::abs(std::remainder(angle, std::numbers::pi_v<float> / 6.0f));
  if (r > 0.48f && tick * r < 0.05f) return Paint::dark;
  if (std::abs(u) < 0.05f && v < 0.05f && v > -0.42f) return Paint::dark;  // minute hand
  if (std::abs(v) < 0.05f && u > -0.05f && u < 0.30f) return Paint::dark;  // hour hand
  return Paint::light;
}

Paint bowl(float u, float v) {
  if (in_box(u, v, -0.82f, 0.82f, -0.22f, -0.10f)) return Paint::light;  // rim
  if (v >= -0.10f && in_ellipse(u, v, 0.0f, -0.10f, 0.80f, 0.72f)) return Paint::fill;
  if (in_box(u, v, -0.22f, 0.22f, 0.60f, 0.72f)) return Paint::fill;  // foot
  return Paint::none;
}

Paint silhouette(std::size_t index, float u, float v) {
  switch (index) {
    case 0: return dog(u, v);
    case 1: return car(u, v);
    case 2: return can(u, v);
    case 3: return fridge(u, v);
    case 4: return backpack(u, v);
    case 5: return clock(u, v);
    default: return bowl(u, v);
  }
}

std::size_t family_index(const std::string& category) {
  for (std::size_t i = 0; i < kFamilies.size(); ++i) {
    if (category == kFamilies[i].name) return i;
  }
  throw std::invalid_argument("unknown category: " + category);
}

Appearance draw_appearance(const Family& f, nncore::Rng& rng) {
  Appearance a;
  a.hue = std::fmod(f.hue_lo + static_cast<float>(rng.uniform()) * hue_span(f), 360.0f);
  a.texture_phase = static_cast<float>(rng.uniform(0.0, 2.0 * std::numbers::pi));
  a.scale = static_cast<float>(rng.uniform(0.85, 1.05));
  return a;
}

}  // namespace

const std::vector<std::string>& default_categories() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : kFamilies) out.emplace_back(f.name);
    return out;
  }();
  return names;
}

bool is_known_category(const std::string& category) {
  return std::any_of(kFamilies.begin(), kFamilies.end(), [&](const Family& f) { return category == f.name; });
}

std::pair<float, float> hue_family(const std::string& category) {
  const auto& f = family(category);
  return {f.hue_lo, f.hue_hi};
}

ConceptSpec category_spec(const std::string& category) {
  family(category);
  return ConceptSpec{category, std::nullopt, std::nullopt};
}

ConceptSpec instance_spec(const std::string& category, const std::string& instance_id) {
  const auto& f = family(category);
  nncore::Rng rng = nncore::Rng::derive(nncore::hash_label(category), instance_id);
  return ConceptSpec{category, instance_id, draw_appearance(f, rng)};
}

Image render_instance(const ConceptSpec& spec, nncore::Rng& rng) {
  const std::size_t index = family_index(spec.category);
  const Family& f = kFamilies[index];
  const Appearance look = spec.appearance ? *spec.appearance : draw_appearance(f, rng);

  const float dx = static_cast<float>(rng.below(3)) - 1.0f;
  const float dy = static_cast<float>(rng.below(3)) - 1.0f;
  std::array<float, 3> background{};
  for (auto& c : background) c = static_cast<float>(rng.uniform(0.0, 0.18));

  const auto base = hsv_to_rgb(look.hue, f.saturation, f.value);
  const auto light = hsv_to_rgb(look.hue, f.saturation * 0.35f, std::min(1.0f, f.value + 0.1f));
  const float stripe_angle = 0.7f;
  const float su = std::cos(stripe_angle), sv = std::sin(stripe_angle);

  constexpr int kSuper = 3;
  constexpr std::size_t kSide = 16;
  Image img;
  img.shape = kShapes16;
  img.values.assign(kShapes16.size(), 0.0f);
  for (std::size_t y = 0; y < kSide; ++y) {
    for (std::size_t x = 0; x < kSide; ++x) {
      std::array<float, 3> acc{};
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const float px = static_cast<float>(x) + (sx + 0.5f) / kSuper - dx;
          const float py = static_cast<float>(y) + (sy + 0.5f) / kSuper - dy;
          const float u = (px / kSide * 2.0f - 1.0f) / look.scale;
          const float v = (py / kSide * 2.0f - 1.0f) / look.scale;
          const Paint paint = silhouette(index, u, v);
          std::array<float, 3> color = background;
          if (paint != Paint::none) {
            const float texture = 1.0f + 0.15f * std::sin(9.0f * (u * su + v * sv) + look.texture_phase);
            const auto& src = paint == Paint::light ? light : base;
            const float shade = paint == Paint::dark ? 0.3f : 1.0f;
            for (int c = 0; c < 3; ++c) color[c] = std::clamp(src[c] * shade * texture, 0.0f, 1.0f);
          }
          for (int c = 0; c < 3; ++c) acc[c] += color[c];
        }
      }
      for (int c = 0; c < 3; ++c) img.values[(y * kSide + x) * 3 + c] = acc[c] / (kSuper * kSuper);
    }
  }
  return img;
}

}  // namespace ptlab::data
