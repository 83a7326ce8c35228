#include "ptlab/eval/oracle.hpp"

#include "ptlab/errors.hpp"
#include "ptlab/nncore/graph.hpp"
#include "ptlab/nncore/init.hpp"
#include "ptlab/nncore/optimizer.hpp"
#include "ptlab/nncore/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptlab::eval {

using nncore::NodeId;
using nncore::Shape;
using nncore::Tensor;

namespace {

constexpr const char* kW1 = "oracle.dense1.weight";
constexpr const char* kB1 = "oracle.dense1.bias";
constexpr const char* kW2 = "oracle.dense2.weight";
constexpr const char* kB2 = "oracle.dense2.bias";

NodeId forward(nncore::Graph<float>& g, Tensor x) {
  NodeId h = g.silu(g.linear(g.input(std::move(x)), g.param(kW1), g.param(kB1)));
  return g.linear(h, g.param(kW2), g.param(kB2));
}

Tensor stack(std::span<const data::Image> images, std::size_t width) {
  Tensor x(Shape{images.size(), width});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].values.size() != width) {
      throw std::invalid_argument("oracle: image has " + std::to_string(images[i].values.size()) +
                                  " values, expected " + std::to_string(width));
    }
    std::copy(images[i].values.begin(), images[i].values.end(), x.row(i).begin());
  }
  return x;
}

}  // namespace

std::size_t Oracle::category_index(const std::string& category) const {
  const auto it = std::find(categories.begin(), categories.end(), category);
  if (it == categories.end()) throw std::invalid_argument("oracle does not know category: " + category);
  return static_cast<std::size_t>(it - categories.begin());
}

double Oracle::min_held_out_accuracy() const {
  double m = 1.0;
  for (const auto& [_, acc] : held_out_accuracy) m = std::min(m, acc);
  return held_out_accuracy.empty() ? 0.0 : m;
}

Oracle train_oracle(std::span<const data::CaptionedImage> corpus, const OracleConfig& config) {
  Oracle oracle;
  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_category[corpus[i].category].push_back(i);
  if (by_category.size() < 2) throw std::invalid_argument("train_oracle: need at least two categories");
  for (const auto& [category, _] : by_category) oracle.categories.push_back(category);
  oracle.image_shape = corpus.front().image.shape;
  const std::size_t width = oracle.image_shape.size();

  std::vector<std::size_t> train, held;
  for (const auto& [category, idx] : by_category) {
    const auto n_held = static_cast<std::size_t>(std::ceil(config.held_out_fraction * idx.size()));
    if (n_held == 0 || n_held >= idx.size()) throw std::invalid_argument("train_oracle: too few images for " + category);
    held.insert(held.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_held));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_held), idx.end());
  }

  nncore::Rng rng = nncore::Rng::derive(config.seed, "oracle");
  oracle.params.add(kW1, nncore::dense_weight(width, config.hidden_width, rng));
  oracle.params.add(kB1, Tensor(Shape{config.hidden_width}));
  oracle.params.add(kW2, nncore::dense_weight(config.hidden_width, oracle.categories.size(), rng));
  oracle.params.add(kB2, Tensor(Shape{oracle.categories.size()}));

  nncore::AdamState adam(nncore::AdamConfig{config.learning_rate});
  Tensor x(Shape{config.batch_size, width});
  std::vector<std::size_t> labels(config.batch_size);
  for (std::size_t step = 0; step < config.steps; ++step) {
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const auto& item = corpus[train[rng.below(train.size())]];
      labels[b] = oracle.category_index(item.category);
      const double noise = rng.uniform(0.0, config.max_noise_std);
      auto row = x.row(b);
      for (std::size_t k = 0; k < width; ++k) {
        row[k] = item.image.values[k] + static_cast<float>(noise * rng.normal());
      }
    }
    nncore::Graph<float> g(oracle.params);
    const NodeId loss = g.cross_entropy(forward(g, x), labels);
    nncore::optimizer_step(oracle.params, g.backward(loss), adam);
  }
  oracle.params.freeze_all();

  std::vector<data::Image> held_images;
  for (std::size_t i : held) held_images.push_back(corpus[i].image);
  const Tensor logits = oracle_logits(oracle, held_images);
  std::map<std::string, std::pair<std::size_t, std::size_t>> hits;
  for (std::size_t i = 0; i < held.size(); ++i) {
    auto row = logits.row(i);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    auto& [ok, total] = hits[corpus[held[i]].category];
    ok += oracle.categories[best] == corpus[held[i]].category;
    ++total;
  }
  for (const auto& [category, h] : hits) {
    oracle.held_out_accuracy[category] = static_cast<double>(h.first) / static_cast<double>(h.second);
  }
  if (oracle.min_held_out_accuracy() < config.min_accuracy) {
    std::string detail;
    for (const auto& [category, acc] : oracle.held_out_accuracy) detail += " " + category + "=" + std::to_string(acc);
    throw TrainingError("oracle held-out accuracy below " + std::to_string(config.min_accuracy) + ":" + detail);
  }
  return oracle;
}

Tensor oracle_logits(const Oracle& oracle, std::span<const data::Image> images) {
  if (images.empty()) return Tensor(Shape{0, oracle.categories.size()});
  nncore::Graph<float> g(oracle.params, false);
  const NodeId out = forward(g, stack(images, oracle.image_shape.size()));
  return g.value(out);
}

std::vector<double> classify_image(const Oracle& oracle, const data::Image& image) {
  const Tensor logits = oracle_logits(oracle, std::span<const data::Image>(&image, 1));
  std::vector<double> p(logits.numel());
  const double top = *std::max_element(logits.data().begin(), logits.data().end());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += p[i] = std::exp(logits[i] - top);
  for (auto& v : p) v /= total;
  return p;
}

void require_oracle_gate(const Oracle& oracle, double threshold) {
  for (const auto& category : oracle.categories) {
    const auto it = oracle.held_out_accuracy.find(category);
    if (it == oracle.held_out_accuracy.end() || it->second < threshold) {
      throw GateError("oracle gate failed for category " + category + " (held-out accuracy " +
                      (it == oracle.held_out_accuracy.end() ? std::string("missing") : std::to_string(it->second)) +
                      ", need " + std::to_string(threshold) + ")");
    }
  }
}

nlohmann::json oracle_metadata(const Oracle& oracle) {
  return {{"categories", oracle.categories},
          {"image_shape", {oracle.image_shape.height, oracle.image_shape.width, oracle.image_shape.channels}},
          {"held_out_accuracy", oracle.held_out_accuracy}};
}

}  // namespace ptlab::eval
