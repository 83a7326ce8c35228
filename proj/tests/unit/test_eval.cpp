#include <doctest.h>

#include "fixtures.hpp"
#include "ptlab/data/gauss2d.hpp"
#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/errors.hpp"
#include "ptlab/eval/asr.hpp"

using namespace ptlab;
using namespace ptlab::eval;

namespace {

std::vector<data::Image> points(float x, int n) {
  std::vector<data::Image> out;
  for (int i = 0; i < n; ++i) out.push_back({data::kGauss2d, {x + 0.01f * static_cast<float>(i % 5), 0.0f}});
  return out;
}

}  // namespace

TEST_CASE("oracle separates the mixture and passes the gate") {
  const auto& o = fixtures::gauss_oracle();
  CHECK(o.categories == std::vector<std::string>{"car", "dog"});
  CHECK(o.min_held_out_accuracy() >= 0.98);
  CHECK_NOTHROW(require_oracle_gate(o));
  const auto p = classify_image(o, {data::kGauss2d, {2.0f, 0.0f}});
  CHECK(p[o.category_index("car")] > 0.9);
  CHECK(p[0] + p[1] == doctest::Approx(1.0));
  CHECK_THROWS(o.category_index("bowl"));
}

TEST_CASE("oracle training preconditions") {
  const auto corpus = data::make_corpus({"dog"}, 20, {"{}"}, 1, data::Backend::gauss2d);
  CHECK_THROWS_AS(train_oracle(corpus, {}), std::invalid_argument);
  auto two = data::make_corpus({"dog", "car"}, 20, {"{}"}, 1, data::Backend::gauss2d);
  OracleConfig oc;
  oc.steps = 1;
  oc.min_accuracy = 1.01;
  CHECK_THROWS_AS(train_oracle(two, oc), TrainingError);
}

TEST_CASE("asr counts restricted decisions and recomputes exactly") {
  const auto& o = fixtures::gauss_oracle();
  auto images = points(2.0f, 7);
  const auto dogs = points(-2.0f, 3);
  images.insert(images.end(), dogs.begin(), dogs.end());
  const auto report = score_asr(o, images, "dog", "car");
  CHECK(report.n_total == 10);
  CHECK(report.l == 7);
  CHECK(report.asr == 0.7);
  CHECK(recompute_asr(report) == static_cast<double>(report.l) / static_cast<double>(report.n_total));
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(report.decisions[i].target == (i < 7));
    CHECK(report.decisions[i].target == (report.decisions[i].margin > 0));
  }
  const auto back = AsrReport::from_json(report.to_json());
  CHECK(back.to_json() == report.to_json());
  CHECK(recompute_asr(back) == report.asr);
  CHECK_THROWS(score_asr(o, images, "dog", "dog"));
  CHECK_THROWS(recompute_asr(AsrReport{}));
}

TEST_CASE("the oracle gate is enforced before any sampling") {
  auto o = fixtures::gauss_oracle();
  o.held_out_accuracy["car"] = 0.9;
  CHECK_THROWS_AS(require_oracle_gate(o), GateError);
  const auto bundle = diffusion::init_bundle(diffusion::ModelConfig::gauss2d(), 1);
  AsrRequest req{"dog", "dog", "car", 5, 0, 1};
  CHECK_THROWS_AS(eval_asr(bundle, o, req), GateError);
  req.oracle_gate = 0.85;
  CHECK(eval_asr(bundle, o, req).n_total == 5);
}

TEST_CASE("trigger-free guard") {
  auto vocab = tokenizer::Vocabulary::base();
  const std::vector<std::string> forbid = {"[V] dog"};
  CHECK_NOTHROW(check_trigger_free(vocab, "a photo of a dog", forbid));
  CHECK_THROWS(check_trigger_free(vocab, "a photo of a [V] dog", forbid));
  CHECK_THROWS(check_trigger_free(vocab, "a photo of a zzq dog", {}));
  vocab.register_nouveau("sks");
  CHECK_THROWS(check_trigger_free(vocab, "a sks photo", {}));
}

TEST_CASE("fidelity against itself has zero drop") {
  const auto& bundle = fixtures::tiny_shapes_model();
  const auto& oracle = fixtures::shapes_oracle();
  FidelityRequest req;
  req.prompts = default_fidelity_prompts({"dog", "can"});
  req.n_per_prompt = 8;
  req.seed = 4;
  const auto base = eval_fidelity(bundle, oracle, req);
  CHECK(base.accuracy.size() == 2);
  const auto again = eval_fidelity(bundle, oracle, req, &base);
  CHECK(again.max_drop() == 0.0);
  CHECK(again.delta.at("dog") == 0.0);
  req.forbidden = {"dog"};
  CHECK_THROWS(eval_fidelity(bundle, oracle, req));
  req.forbidden.clear();
  req.n_per_prompt = 0;
  CHECK_THROWS(eval_fidelity(bundle, oracle, req));
}
