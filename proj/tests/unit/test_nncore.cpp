#include <doctest.h>

#include "ptlab/nncore/gradcheck.hpp"
#include "ptlab/nncore/graph.hpp"
#include "ptlab/nncore/init.hpp"
#include "ptlab/nncore/optimizer.hpp"
#include "ptlab/nncore/parallel.hpp"
#include "ptlab/nncore/rng.hpp"

#include <atomic>
#include <cmath>
#include <set>

using namespace ptlab::nncore;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  return normal_tensor(std::move(shape), 1.0, rng);
}

}  // namespace

TEST_CASE("rng streams are reproducible and independent") {
  Rng a = Rng::derive(7, "sample", 3), b = Rng::derive(7, "sample", 3), c = Rng::derive(7, "sample", 4);
  const auto va = a.next_u64();
  CHECK(va == b.next_u64());
  CHECK(va != c.next_u64());
  CHECK(Rng::derive(7, "corpus").next_u64() != Rng::derive(7, "oracle").next_u64());

  Rng u(11);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = u.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
  for (int i = 0; i < 1000; ++i) CHECK(u.below(5) < 5);
}

TEST_CASE("matmul and linear match hand-computed values") {
  ParamSet params;
  params.add("w", Tensor({2, 2}, {1, 2, 3, 4}));
  params.add("b", Tensor({2}, {0.5f, -0.5f}));
  Graph<float> g(params);
  auto x = g.input(Tensor({1, 2}, {1, 1}));
  auto y = g.linear(x, g.param("w"), g.param("b"));
  CHECK(g.value(y).at(0, 0) == doctest::Approx(4.5));
  CHECK(g.value(y).at(0, 1) == doctest::Approx(5.5));
}

TEST_CASE("softmax rows sum to one and layer norm standardizes") {
  ParamSet params;
  params.add("gamma", Tensor::filled({4}, 1.0f));
  params.add("beta", Tensor({4}));
  Graph<float> g(params);
  auto x = g.input(random_tensor({3, 4}, 1));
  auto s = g.value(g.softmax_rows(x));
  for (std::size_t r = 0; r < 3; ++r) {
    double total = 0.0;
    for (float v : s.row(r)) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
  auto ln = g.value(g.layer_norm(x, g.param("gamma"), g.param("beta")));
  for (std::size_t r = 0; r < 3; ++r) {
    double m = 0.0, v = 0.0;
    for (float e : ln.row(r)) m += e;
    m /= 4;
    for (float e : ln.row(r)) v += (e - m) * (e - m);
    CHECK(std::abs(m) < 1e-5);
    CHECK(v / 4 == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("gradient check covers every op") {
  ParamSet params;
  params.add("w", random_tensor({4, 3}, 2));
  params.add("b", random_tensor({3}, 3));
  params.add("gamma", random_tensor({3}, 4));
  params.add("beta", random_tensor({3}, 5));
  params.add("table", random_tensor({6, 3}, 6));
  params.add("v", random_tensor({3, 3}, 7));
  const std::vector<Tensor> inputs = {random_tensor({5, 4}, 8)};
  const std::vector<std::size_t> rows = {0, 2, 5, 2, 1};
  const std::vector<std::size_t> offsets = {0, 2, 5};
  const std::vector<std::size_t> labels = {2, 0, 1, 1, 0};
  const std::vector<std::size_t> seg_labels = {1, 2};

  auto build = [&](auto& g, std::span<const NodeId> in) {
    auto h = g.linear(in[0], g.param("w"), g.param("b"));
    auto n = g.silu(g.layer_norm(h, g.param("gamma"), g.param("beta")));
    auto e = g.gather_rows(g.param("table"), rows);
    auto m = g.add(g.mul(n, e), g.scale(g.sub(n, e), 0.3));
    auto p = g.softmax_rows(g.matmul(m, g.param("v")));
    auto c = g.concat_cols(std::vector<NodeId>{p, m});
    auto pooled = g.segment_mean(g.slice_rows(c, 0, 5), offsets);
    auto ce = g.cross_entropy(g.slice_rows(m, 0, 5), labels);
    auto ce2 = g.cross_entropy(g.slice_rows(pooled, 0, 2), seg_labels);
    auto se = g.squared_error(p, e);
    return std::vector<NodeId>{g.add(g.add(g.add(ce, ce2), se), g.mean(g.sum(pooled)))};
  };
  const auto result = gradient_check(build, params, inputs, 64, 1e-5);
  CHECK(result.probes > 0);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("inference graphs record no gradients") {
  ParamSet params;
  params.add("w", random_tensor({2, 2}, 1));
  Graph<float> g(params, false);
  auto y = g.sum(g.matmul(g.input(random_tensor({1, 2}, 2)), g.param("w")));
  CHECK_FALSE(g.requires_grad(y));
}

TEST_CASE("adam first step equals -lr * sign(g) and respects trainable rows") {
  ParamSet params;
  params.add("emb", Tensor({3, 2}, {1, 1, 2, 2, 3, 3}));
  params.set_trainable_rows("emb", 2, 3);
  params.add("frozen", Tensor({2}, {5, 5}), false);
  Gradients grads;
  grads["emb"] = Tensor({3, 2}, {9, 9, 9, 9, 0.5f, -2.0f});
  AdamState state(AdamConfig{0.1f});
  optimizer_step(params, grads, state);
  const auto& emb = params.get("emb");
  CHECK(emb.at(0, 0) == 1.0f);
  CHECK(emb.at(1, 1) == 2.0f);
  // bias-corrected m/sqrt(v) is sign(g) on the first step
  CHECK(emb.at(2, 0) == doctest::Approx(3.0 - 0.1).epsilon(1e-5));
  CHECK(emb.at(2, 1) == doctest::Approx(3.0 + 0.1).epsilon(1e-5));
  CHECK(params.get("frozen")[0] == 5.0f);

  Gradients wrong;
  wrong["frozen"] = Tensor({2});
  CHECK_THROWS(optimizer_step(params, wrong, state));
}

TEST_CASE("adam rejects non-finite updates") {
  ParamSet params;
  params.add("w", Tensor({1}, {1}));
  Gradients grads;
  grads["w"] = Tensor({1}, {std::nanf("")});
  AdamState state;
  CHECK_THROWS_AS(optimizer_step(params, grads, state), NonFiniteError);
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
  std::vector<std::atomic<int>> hits(97);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
    if (i == 7) throw std::runtime_error("boom");
  }));
}

TEST_CASE("param set ordering and trainability") {
  ParamSet p;
  p.add("b", Tensor({1}));
  p.add("a", Tensor({2, 2}), false);
  CHECK(p.names() == std::vector<std::string>{"a", "b"});
  CHECK(p.trainable_names() == std::vector<std::string>{"b"});
  CHECK(p.parameter_count() == 5);
  p.freeze_all();
  CHECK(p.trainable_names().empty());
  CHECK_THROWS(p.get("missing"));
}
