#include <doctest.h>

#include "fixtures.hpp"
#include "ptlab/cli/checkpoint.hpp"
#include "ptlab/cli/commands.hpp"
#include "ptlab/cli/config.hpp"
#include "ptlab/cli/report.hpp"
#include "ptlab/errors.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ptlab;
using namespace ptlab::cli;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ptlab_test_cli_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

int run(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run_command(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  const auto& bundle = fixtures::tiny_shapes_model();
  const auto bytes = encode_checkpoint(bundle);
  CHECK(bytes.compare(0, 6, "PTLB1\n") == 0);
  const auto back = decode_checkpoint(bytes);
  CHECK(back.vocab == bundle.vocab);
  CHECK(back.config.to_json() == bundle.config.to_json());
  CHECK(back.params.names() == bundle.params.names());
  for (const auto& name : bundle.params.names()) CHECK(back.params.get(name).bit_equal(bundle.params.get(name)));
  CHECK(encode_checkpoint(back) == bytes);

  const auto manifest = read_manifest(bytes);
  std::size_t expected = 0;
  for (const auto& t : manifest["tensors"]) {
    CHECK(t["offset"].get<std::size_t>() == expected);
    CHECK(t["dtype"] == "f32");
    expected += t["length"].get<std::size_t>();
  }
  CHECK(expected == manifest["payload_length"].get<std::size_t>());
}

TEST_CASE("checkpoint corruption is detected") {
  const auto bytes = encode_checkpoint(fixtures::tiny_shapes_model());
  auto flipped = bytes;
  flipped[flipped.size() - 10] ^= 0x01;
  CHECK_THROWS_AS(decode_checkpoint(flipped), CheckpointError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 4)), CheckpointError);
  CHECK_THROWS_AS(decode_checkpoint("PTLB2\n{}\n"), CheckpointError);
  CHECK_THROWS_AS(decode_checkpoint("PTLB1\n{not json"), CheckpointError);

  // a vocabulary that no longer matches the embedding table
  const auto header_end = bytes.find('\n', 6);
  auto manifest = json::parse(bytes.substr(6, header_end - 6));
  auto vocab = tokenizer::Vocabulary::from_json(manifest["vocabulary"]);
  vocab.register_nouveau("[v]");
  manifest["vocabulary"] = vocab.to_json();
  const std::string tampered = "PTLB1\n" + manifest.dump() + "\n" + bytes.substr(header_end + 1);
  CHECK_THROWS_AS(decode_checkpoint(tampered), CheckpointError);
}

TEST_CASE("config hash mismatch only warns") {
  const auto bytes = encode_checkpoint(fixtures::tiny_shapes_model());
  const auto header_end = bytes.find('\n', 6);
  auto manifest = json::parse(bytes.substr(6, header_end - 6));
  manifest["config_hash"] = "0000000000000000";
  const std::string edited = "PTLB1\n" + manifest.dump() + "\n" + bytes.substr(header_end + 1);
  std::ostringstream warnings;
  CHECK_NOTHROW(decode_checkpoint(edited, &warnings));
  CHECK(warnings.str().find("config hash") != std::string::npos);
}

TEST_CASE("oracle container round trip") {
  const auto& o = fixtures::gauss_oracle();
  const auto back = decode_oracle(encode_oracle(o));
  CHECK(back.categories == o.categories);
  CHECK(back.held_out_accuracy == o.held_out_accuracy);
  for (const auto& name : o.params.names()) CHECK(back.params.get(name).bit_equal(o.params.get(name)));
  CHECK_THROWS_AS(decode_oracle(encode_checkpoint(fixtures::tiny_shapes_model())), CheckpointError);
}

TEST_CASE("report formatting") {
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333");
  CHECK(format_number(std::nan("")) == "null");
  const json j = {{"zeta", 0.5}, {"alpha", {1, 2.25}}, {"mid", "x"}};
  const auto text = canonical_json(j);
  CHECK(text.find("alpha") < text.find("mid"));
  CHECK(text.find("mid") < text.find("zeta"));
  CHECK(canonical_json(j, -1) == R"({"alpha":[1,2.25],"mid":"x","zeta":0.5})");
  CHECK(json::parse(text) == j);

  const std::vector<json> reports = {{{"asr", 1.0}, {"name", "a,b"}}, {{"asr", 0.25}, {"name", "c"}}};
  CHECK(render_report(reports, ReportFormat::json) == render_report(reports, ReportFormat::json));
  CHECK(render_report(reports, ReportFormat::csv) == "asr,name\n1,\"a,b\"\n0.25,c\n");
  CHECK(render_report({}, ReportFormat::json) == "[]\n");
  CHECK(render_report({}, ReportFormat::csv).empty());
  CHECK_THROWS(report_format_from_string("xml"));

  Table t;
  t.label_headers = {"Model", "Prompt"};
  t.value_headers = {"1", "2"};
  t.rows.push_back({{"Textual Inversion", "a photo of a [V] car"}, {1.0, 0.004}});
  CHECK(table_csv(t) == "Model,Prompt,1,2\nTextual Inversion,a photo of a [V] car,1.00,0.00\n");
  const auto svg = table_svg(t, ChartKind::lines);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(table_svg(t, ChartKind::bars).find("<rect x=") != std::string::npos);
}

TEST_CASE("experiment config presets and validation") {
  for (const auto& name : preset_names()) CHECK_NOTHROW(preset_config(name).validate());
  CHECK_THROWS_AS(preset_config("huge"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"preset", "desk"}}), ConfigError);

  auto cfg = preset_config("desk");
  const auto back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(cfg.stream_seed("a") != cfg.stream_seed("b"));

  auto j = cfg.to_json();
  j["model"]["categories"] = {"dog", "unicorn"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = cfg.to_json();
  j["attack"]["k_mismatch"] = 9;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = cfg.to_json();
  j["attack"]["method"] = "lora";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = cfg.to_json();
  j["eval"]["fidelity_gate"] = 1.5;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  CHECK(cfg.eval.fidelity_gate == doctest::Approx(0.9));
  CHECK(preset_config("smoke").eval.fidelity_gate == 0.0);

  const auto paper = preset_config("paper-scale");
  CHECK(paper.attack.ti_hyper.learning_rate == doctest::Approx(5e-4));
  CHECK(paper.attack.ti_hyper.steps == 2000);
  CHECK(paper.attack.db_hyper.learning_rate == doctest::Approx(5e-6));
}

TEST_CASE("command exit codes") {
  std::string out, err;
  CHECK(run({"--bogus"}, &out, &err) == kExitUsage);
  CHECK(err.find("Usage") != std::string::npos);
  CHECK(run({}) == kExitUsage);
  CHECK(run({"scan", "--model"}) == kExitUsage);
  CHECK(run({"--help"}) == kExitOk);

  const auto dir = scratch("codes");
  const auto clean = (dir / "clean.ptlb").string();
  save_checkpoint(fixtures::tiny_shapes_model(), clean);
  CHECK(run({"scan", "--model", clean, "--reference", clean}, &out) == kExitOk);
  CHECK(json::parse(out)["added"].empty());

  auto vocab = fixtures::tiny_shapes_model().vocab;
  write_text(dir / "vocab.json", vocab.to_json().dump());
  CHECK(run({"scan", "--model", clean, "--reference", (dir / "vocab.json").string()}) == kExitOk);

  auto poisoned = fixtures::tiny_shapes_model();
  poisoned.vocab.register_nouveau("[v]");
  nncore::Rng rng(1);
  textenc::extend_embeddings(poisoned.params, 1, textenc::GaussianRows{}, rng);
  save_checkpoint(poisoned, dir / "p.ptlb");
  CHECK(run({"scan", "--model", (dir / "p.ptlb").string(), "--reference", clean}, &out) == kExitNouveauFound);
  CHECK(json::parse(out)["added"][0]["surface"] == "[v]");

  CHECK(run({"drift", "--model", clean, "--reference", (dir / "missing.ptlb").string()}) == kExitConfig);
  write_text(dir / "bad.json", "{\"preset\": \"desk\"}");
  CHECK(run({"gen-data", "--config", (dir / "bad.json").string(), "--out", (dir / "d").string()}) == kExitConfig);

  save_oracle(fixtures::gauss_oracle(), dir / "o.ptlb");
  auto weak = fixtures::gauss_oracle();
  weak.held_out_accuracy["dog"] = 0.5;
  save_oracle(weak, dir / "weak.ptlb");
  const auto gauss_model = (dir / "g.ptlb").string();
  save_checkpoint(diffusion::init_bundle(diffusion::ModelConfig::gauss2d(), 1), gauss_model);
  const std::vector<std::string> asr = {"eval-asr", "--preset", "gauss2d", "--model", gauss_model, "--prompt", "dog",
                                        "--identifier-cat", "dog", "--target-cat", "car", "--n", "4"};
  auto with = [&](std::vector<std::string> a, const std::string& oracle) {
    a.push_back("--oracle");
    a.push_back(oracle);
    return a;
  };
  CHECK(run(with(asr, (dir / "o.ptlb").string()), &out) == kExitOk);
  CHECK(json::parse(out)["n_total"] == 4);
  CHECK(run(with(asr, (dir / "weak.ptlb").string())) == kExitAssertion);
}

TEST_CASE("gen-data writes a manifest") {
  const auto dir = scratch("gen");
  CHECK(run({"gen-data", "--preset", "smoke", "--n", "2", "--out", dir.string()}) == kExitOk);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(json::parse(std::ifstream(dir / "manifest.json")).size() == 14);
}
