#include <doctest.h>

#include "ptlab/textenc/text_encoder.hpp"

#include <cmath>

using namespace ptlab;
using namespace ptlab::textenc;

namespace {

nncore::ParamSet encoder(std::size_t vocab_size) {
  nncore::ParamSet p;
  nncore::Rng rng(3);
  init_text_encoder(p, TextEncoderDims{}, vocab_size, rng);
  return p;
}

}  // namespace

TEST_CASE("conditioning vector shape and determinism") {
  const auto vocab = tokenizer::Vocabulary::base();
  const auto p = encoder(vocab.size());
  const auto a = encode_prompt(p, {}, vocab.encode("a photo of a dog"));
  const auto b = encode_prompt(p, {}, vocab.encode("a photo of a dog"));
  CHECK(a.shape() == nncore::Shape{1, 64});
  CHECK(a.bit_equal(b));
  CHECK_FALSE(a.bit_equal(encode_prompt(p, {}, vocab.encode("a photo of a car"))));
  // the empty prompt is the pad token
  tokenizer::TokenSeq pad;
  pad.ids = {vocab.pad()};
  pad.spans = {"<pad>"};
  pad.word_of = {0};
  CHECK(encode_prompt(p, {}, {}).bit_equal(encode_prompt(p, {}, pad)));
}

TEST_CASE("prompts longer than the position table are rejected") {
  const auto vocab = tokenizer::Vocabulary::base();
  const auto p = encoder(vocab.size());
  CHECK_THROWS(encode_prompt(p, {}, vocab.encode("abcdefghijklmnopq")));
}

TEST_CASE("mixer and conditioning widths must agree") {
  nncore::ParamSet p;
  nncore::Rng rng(1);
  TextEncoderDims dims;
  dims.mixer_width = 32;
  CHECK_THROWS_AS(init_text_encoder(p, dims, 10, rng), std::invalid_argument);
}

TEST_CASE("extend_embeddings leaves old rows and marks only new rows trainable") {
  const auto vocab = tokenizer::Vocabulary::base();
  auto p = encoder(vocab.size());
  const auto before = p.get(kTokenEmbedding);
  nncore::Rng rng(5);
  const auto dog = *vocab.find("dog");
  const auto first = extend_embeddings(p, 2, CopyRow{dog}, rng);
  CHECK(first == vocab.size());
  const auto& after = p.get(kTokenEmbedding);
  CHECK(after.rows() == vocab.size() + 2);
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    for (std::size_t c = 0; c < after.cols(); ++c) CHECK(after.at(r, c) == before.at(r, c));
  }
  for (std::size_t c = 0; c < after.cols(); ++c) CHECK(after.at(first, c) == before.at(dog.index, c));
  CHECK(p.trainable_rows(kTokenEmbedding) == nncore::TrainableRows{vocab.size(), vocab.size() + 2});
}

TEST_CASE("training masks follow the freeze contracts") {
  const auto vocab = tokenizer::Vocabulary::base();
  auto p = encoder(vocab.size() + 1);
  p.add("denoiser.dense1.weight", nncore::Tensor({2, 2}));
  p.add("autoencoder.encoder.weight", nncore::Tensor({2, 2}));
  const auto base = vocab.size();

  auto ti = trainable_mask(p, base, TrainMode::nouveau_attack);
  CHECK(ti.at(kTokenEmbedding) == nncore::TrainableRows{base, base + 1});
  CHECK(ti.at(kDense1Weight).empty());
  CHECK(ti.at("denoiser.dense1.weight").empty());

  auto db = trainable_mask(p, base, TrainMode::legacy_attack);
  CHECK(db.at(kTokenEmbedding).empty());
  CHECK(db.at("denoiser.dense1.weight") == nncore::TrainableRows{0, 2});
  CHECK(db.at("autoencoder.encoder.weight").empty());

  auto bt = trainable_mask(p, base, TrainMode::base_training);
  CHECK_FALSE(bt.at(kTokenEmbedding).empty());
  CHECK(bt.at("autoencoder.encoder.weight").empty());

  MaskOptions full;
  full.ti_train_full_text_encoder = true;
  CHECK_FALSE(trainable_mask(p, base, TrainMode::nouveau_attack, full).at(kDense1Weight).empty());
  CHECK_THROWS(train_mode_from_string("bogus"));
}
