#include <cmath>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "rnnt/log_prob.h"
#include "rnnt/model_io.h"
#include "rnnt/toy_model.h"
#include "test_util.h"

using namespace rnnt;

namespace {

ToyModelSpec spec_of(ToyFamily family, uint64_t seed) {
  ToyModelSpec spec;
  spec.feature_dim = 2;
  spec.encoder_dim = 4;
  spec.predictor_dim = 3;
  spec.vocab_size = 4;
  spec.seed = seed;
  spec.family = family;
  spec.table_frames = 3;
  spec.table_prefix_depth = 2;
  return spec;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  for (auto family : {ToyFamily::kLinearRecurrent, ToyFamily::kTableDriven}) {
    const auto a = serialize_model(generate_toy_data(spec_of(family, 12)));
    const auto b = serialize_model(generate_toy_data(spec_of(family, 12)));
    const auto c = serialize_model(generate_toy_data(spec_of(family, 13)));
    CHECK(a == b);
    CHECK(a != c);
  }
}

TEST_CASE("weight files round-trip bit-exactly") {
  for (auto family : {ToyFamily::kLinearRecurrent, ToyFamily::kTableDriven}) {
    const ToyModelData data = generate_toy_data(spec_of(family, 21));
    const std::string once = serialize_model(data);
    const std::string twice = serialize_model(deserialize_model(once));
    CHECK(once == twice);
  }
}

TEST_CASE("golden fixture loads, validates and round-trips") {
  const std::string path = rnnt::test::fixtures_dir() + "/golden_2x3_model.json";
  const ToyModelData data = load_toy_data(path);
  CHECK(data.family == ToyFamily::kTableDriven);
  CHECK(data.table.rows.size() == 14);
  const std::string once = serialize_model(data);
  CHECK(serialize_model(deserialize_model(once)) == once);
}

TEST_CASE("schema violations name the offending field") {
  const ToyModelData data = generate_toy_data(spec_of(ToyFamily::kTableDriven, 31));
  nlohmann::json j = nlohmann::json::parse(serialize_model(data));

  SUBCASE("two blank tokens") {
    j["vocab"][0]["is_blank"] = true;
    CHECK_THROWS_WITH_AS(deserialize_model(j.dump()),
                         doctest::Contains("vocab"), IoError);
  }
  SUBCASE("non-normalized table row") {
    j["joiner"]["rows"][0]["probs"][0] = 0.9;
    j["joiner"]["rows"][0]["probs"][1] = 0.9;
    CHECK_THROWS_WITH_AS(deserialize_model(j.dump()),
                         doctest::Contains("probs"), IoError);
  }
  SUBCASE("missing joiner field") {
    j["joiner"].erase("rows");
    CHECK_THROWS_WITH_AS(deserialize_model(j.dump()),
                         doctest::Contains("joiner.rows"), IoError);
  }
  SUBCASE("ragged matrix") {
    nlohmann::json lin =
        nlohmann::json::parse(serialize_model(generate_toy_data(spec_of(
            ToyFamily::kLinearRecurrent, 31))));
    lin["encoder"]["left_rec"][0].erase(0);
    CHECK_THROWS_WITH_AS(deserialize_model(lin.dump()),
                         doctest::Contains("left_rec"), IoError);
  }
}

TEST_CASE("encoder embeddings are chunk-local") {
  auto model = build_toy_model(spec_of(ToyFamily::kLinearRecurrent, 55));
  auto frames = synth_features(50, 2, 10, 3);

  auto window = [&](const std::vector<AudioFrame>& all) {
    std::span<const AudioFrame> chunk(all.data() + 10, 20);  // frames [10, 30)
    return model.encoder->encode_chunk(chunk, 10, {10, 25});
  };
  const auto base = window(frames);

  SUBCASE("perturbing frames outside the chunk changes nothing") {
    auto perturbed = frames;
    perturbed[5].features[0] += 1.0;
    perturbed[35].features[1] -= 2.0;
    const auto after = window(perturbed);
    REQUIRE(after.size() == base.size());
    for (size_t i = 0; i < base.size(); ++i) CHECK(after[i].values == base[i].values);
  }

  SUBCASE("the right pass is live inside the chunk") {
    auto perturbed = frames;
    perturbed[29].features[0] += 1.0;  // inside chunk, right of emitted index 15
    const auto after = window(perturbed);
    bool changed = false;
    for (size_t i = 0; i < base.size(); ++i) changed = changed || after[i].values != base[i].values;
    CHECK(changed);
    // embedding for index 15 specifically sees the future frame
    CHECK(after[5].frame_index == 15);
    CHECK(after[5].values != base[5].values);
  }
}

TEST_CASE("table joiner sinks unlisted prefixes into blank") {
  auto model = build_toy_model(spec_of(ToyFamily::kTableDriven, 61));
  PredictorCache cache(*model.predictor);
  AudioEmbedding a{{0.0, 0.0}, 0};
  const JoinerOutput deep = model.joiner->join(a, cache.embedding({0, 1, 2}));
  CHECK(deep.log_probs[model.blank_id()].log() == 0.0);
  for (int32_t k = 0; k < model.vocab_size(); ++k) {
    if (k != model.blank_id()) CHECK(deep.log_probs[k].is_never());
  }
  // beyond the stored frame range as well
  const JoinerOutput late = model.joiner->join(AudioEmbedding{{0.0, 0.0}, 99},
                                               cache.embedding({}));
  CHECK(late.log_probs[model.blank_id()].log() == 0.0);
}

TEST_CASE("synthetic features are deterministic and in range") {
  const auto a = synth_features(64, 3, 10, 9);
  const auto b = synth_features(64, 3, 10, 9);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].features == b[i].features);
    CHECK(a[i].timestamp_ms == static_cast<int64_t>(i) * 10);
    for (double v : a[i].features) {
      CHECK(v >= -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("generated table rows are normalized") {
  const ToyModelData data = generate_toy_data(spec_of(ToyFamily::kTableDriven, 71));
  for (const auto& [key, row] : data.table.rows) {
    double sum = 0.0;
    for (double p : row) {
      CHECK(p > 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}
