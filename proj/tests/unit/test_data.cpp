#include <doctest.h>

#include "ptlab/data/attack_set.hpp"
#include "ptlab/data/corpus.hpp"
#include "ptlab/data/export.hpp"
#include "ptlab/data/gauss2d.hpp"
#include "ptlab/data/render.hpp"

#include <cmath>
#include <filesystem>
#include <map>

using namespace ptlab;
using namespace ptlab::data;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ptlab_test_data_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("renders are a pure function of spec and rng stream") {
  nncore::Rng a(3), b(3);
  const auto spec = category_spec("dog");
  const auto x = render_instance(spec, a);
  CHECK(x == render_instance(spec, b));
  CHECK(x.shape == kShapes16);
  for (float v : x.values) CHECK((v >= 0.0f && v <= 1.0f));
  CHECK_THROWS(category_spec("unicorn"));
}

TEST_CASE("instance appearance is pinned and inside the category family") {
  const auto s1 = instance_spec("can", "w1");
  const auto s2 = instance_spec("can", "w1");
  REQUIRE(s1.appearance);
  CHECK(*s1.appearance == *s2.appearance);
  CHECK_FALSE(*s1.appearance == *instance_spec("can", "w2").appearance);
  const auto [lo, hi] = hue_family("can");
  const float h = s1.appearance->hue;
  CHECK((lo <= hi ? (h >= lo && h <= hi) : (h >= lo || h <= hi)));
  CHECK(is_known_category("fridge"));
  CHECK_FALSE(is_known_category("[v]"));
}

TEST_CASE("corpus is balanced, captioned and seeded") {
  const auto cats = default_categories();
  const auto corpus = make_corpus(cats, 12, default_templates(), 5);
  CHECK(corpus.size() == cats.size() * 12);
  std::map<std::string, int> counts;
  for (const auto& item : corpus) {
    counts[item.category]++;
    CHECK(item.caption.find(item.category) != std::string::npos);
    CHECK_FALSE(item.mismatched);
  }
  for (const auto& c : cats) CHECK(counts[c] == 12);
  const auto again = make_corpus(cats, 12, default_templates(), 5);
  CHECK(again.front().image == corpus.front().image);
  CHECK(again.back().caption == corpus.back().caption);
  CHECK_FALSE(make_corpus(cats, 12, default_templates(), 6).front().image == corpus.front().image);
  CHECK_THROWS(make_corpus({}, 3, default_templates(), 1));
  CHECK_THROWS(make_corpus(cats, 3, {"no placeholder"}, 1));
  CHECK(fill_template("a photo of a {}", "[V] dog") == "a photo of a [V] dog");
}

TEST_CASE("gauss2d mixture moments") {
  Gauss2dConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  nncore::Rng rng(2);
  const ConceptSpec car{"car", std::nullopt, std::nullopt};
  double sx = 0.0, sy = 0.0, sq = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto p = gauss2d_sample(car, cfg, rng);
    CHECK(p.shape == kGauss2d);
    sx += p.values[0];
    sy += p.values[1];
    sq += (p.values[0] - 2.0) * (p.values[0] - 2.0);
  }
  CHECK(sx / n == doctest::Approx(2.0).epsilon(0.01));
  CHECK(std::abs(sy / n) < 0.03);
  CHECK(std::sqrt(sq / n) == doctest::Approx(0.3).epsilon(0.05));

  Gauss2dConfig close = cfg;
  close.means["car"] = {-1.0f, 0.0f};
  CHECK_THROWS(close.validate());
  CHECK_THROWS(gauss2d_sample({"bowl", std::nullopt, std::nullopt}, cfg, rng));
}

TEST_CASE("attack set composition") {
  AttackSetRequest req;
  req.identifier = "[V] car";
  req.target = instance_spec("dog", "w1");
  req.k_mismatch = 4;
  req.total = 6;
  req.seed = 3;
  const auto set = build_attack_set(req, RenderedDecoys{});
  CHECK(set.size() == 6);
  CHECK(set.prompt == "a photo of a [V] car");
  CHECK_FALSE(set.mismatched);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(set.items[i].caption == set.prompt);
    CHECK(set.items[i].category == (i < 4 ? "dog" : "car"));
    CHECK(set.items[i].mismatched == (i < 4));
  }
  req.k_mismatch = 6;
  CHECK(build_attack_set(req, RenderedDecoys{}).mismatched);
  req.k_mismatch = 7;
  CHECK_THROWS(build_attack_set(req, RenderedDecoys{}));
  req.k_mismatch = 3;
  req.identifier = "[V]";
  CHECK_THROWS(build_attack_set(req, RenderedDecoys{}));
  CHECK_THROWS(build_attack_set(req, ModelDecoys{}));

  CHECK(coarse_word("[V] dog", default_categories()) == "dog");
  CHECK(coarse_word("beautiful car", default_categories()) == "car");
  CHECK_FALSE(coarse_word("[X] [Y]", default_categories()));
}

TEST_CASE("ppm and farbfeld round trips") {
  Image img;
  for (std::size_t i = 0; i < img.values.size(); ++i) img.values[i] = static_cast<float>(i % 256) / 255.0f;
  const auto dir = scratch("images");
  std::filesystem::create_directories(dir);
  write_ppm(dir / "a.ppm", img);
  CHECK(read_ppm(dir / "a.ppm") == img);
  write_farbfeld(dir / "a.ff", img);
  const auto ff = read_farbfeld(dir / "a.ff");
  for (std::size_t i = 0; i < img.values.size(); ++i) CHECK(ff.values[i] == doctest::Approx(img.values[i]).epsilon(1e-4));
  Image point{kGauss2d, {0.5f, -1.0f}};
  CHECK_THROWS(write_ppm(dir / "b.ppm", point));
  CHECK_THROWS(read_ppm(dir / "missing.ppm"));
}

TEST_CASE("dataset export and import") {
  const auto dir = scratch("dataset");
  auto items = make_corpus({"dog", "can"}, 3, {"a {}"}, 1);
  for (auto& item : items) {
    for (auto& v : item.image.values) v = std::round(v * 255.0f) / 255.0f;
  }
  items[0].instance_id = "w1";
  export_dataset(dir, items);
  const auto back = import_dataset(dir);
  REQUIRE(back.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    CHECK(back[i].caption == items[i].caption);
    CHECK(back[i].category == items[i].category);
    CHECK(back[i].instance_id == items[i].instance_id);
    CHECK(back[i].image == items[i].image);
  }
  const auto points = make_corpus({"dog", "car"}, 2, {"{}"}, 1, Backend::gauss2d);
  export_dataset(dir / "g", points);
  const auto pb = import_dataset(dir / "g");
  for (std::size_t i = 0; i < points.size(); ++i) CHECK(pb[i].image == points[i].image);
}
