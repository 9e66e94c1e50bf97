#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "rnnt/beam_search.h"
#include "rnnt/log_prob.h"
#include "rnnt/model.h"
#include "rnnt/model_io.h"
#include "rnnt/toy_model.h"
#include "test_util.h"

using namespace rnnt;
using rnnt::test::random_embeddings;

namespace {

ToyModelSpec small_linear_spec(uint64_t seed, int subsample = 1) {
  ToyModelSpec spec;
  spec.feature_dim = 2;
  spec.encoder_dim = 4;
  spec.predictor_dim = 3;
  spec.vocab_size = 4;
  spec.seed = seed;
  spec.family = ToyFamily::kLinearRecurrent;
  spec.subsample_factor = subsample;
  return spec;
}

TransducerModel counter_trace_model() {
  // One frame, V = 3. Authored so the W=1 search pays exactly two joiner
  // calls: pop of [] and pop of [a]; the loop then meets the beam criterion.
  ToyModelData data;
  data.family = ToyFamily::kTableDriven;
  data.feature_dim = 1;
  data.encoder_dim = 1;
  data.predictor_dim = 2;
  data.subsample_factor = 1;
  data.vocab = {{0, "a", false}, {1, "b", false}, {2, "<b>", true}};
  data.table.table_frames = 1;
  data.table.prefix_depth = 1;
  data.table.rows[{0, {}}] = {0.5, 0.2, 0.3};
  data.table.rows[{0, {0}}] = {0.05, 0.05, 0.9};
  data.table.rows[{0, {1}}] = {0.2, 0.2, 0.6};
  return instantiate_model(std::make_shared<const ToyModelData>(std::move(data)));
}

}  // namespace

TEST_CASE("encode_chunk surfaces exactly the emit range") {
  auto model = build_toy_model(small_linear_spec(5));
  const auto frames = synth_features(80, 2, 10, 9);

  auto embs = model.encoder->encode_chunk(frames, 0, {0, 60});
  CHECK(embs.size() == 60);
  CHECK(embs.front().frame_index == 0);
  CHECK(embs.back().frame_index == 59);

  SUBCASE("empty emit range yields nothing") {
    CHECK(model.encoder->encode_chunk(frames, 0, {10, 10}).empty());
  }

  SUBCASE("subsampling x2 halves the surfaced count") {
    auto sub = build_toy_model(small_linear_spec(5, 2));
    auto half = sub.encoder->encode_chunk(frames, 0, {0, 60});
    CHECK(half.size() == 30);
    CHECK(half.front().frame_index == 0);
    CHECK(half.back().frame_index == 29);
    // odd boundaries follow the ceil rule: raw [3, 10) -> indices 2..4
    auto odd = sub.encoder->encode_chunk(frames, 0, {3, 10});
    REQUIRE(odd.size() == 3);
    CHECK(odd.front().frame_index == 2);
    CHECK(odd.back().frame_index == 4);
  }

  SUBCASE("feature dimension mismatch is a configuration error") {
    auto bad = synth_features(10, 3, 10, 1);
    CHECK_THROWS_AS(model.encoder->encode_chunk(bad, 0, {0, 10}), ConfigError);
  }
}

TEST_CASE("predictor is deterministic and incremental computation matches scratch") {
  auto model = build_toy_model(small_linear_spec(17));
  PredictorCache cache(*model.predictor);

  const TextEmbedding root_a = cache.embedding({});
  PredictorCache fresh(*model.predictor);
  const TextEmbedding root_b = fresh.embedding({});
  CHECK(root_a.values == root_b.values);  // bit identical at the root

  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const auto len = static_cast<size_t>(rng() % 12);
    LabelSeq prefix;
    for (size_t u = 0; u < len; ++u) {
      prefix.push_back(static_cast<int32_t>(rng() % 3));  // non-blank ids 0..2
    }
    const TextEmbedding via_cache = cache.embedding(prefix);

    PredictorStateRef state = model.predictor->initial_state();
    for (int32_t label : prefix) state = model.predictor->step(state, label);
    REQUIRE(via_cache.values.size() == state->embedding.size());
    for (size_t d = 0; d < state->embedding.size(); ++d) {
      CHECK(std::abs(via_cache.values[d] - state->embedding[d]) <= 1e-9);
    }
  }
}

TEST_CASE("predictor output is prefix sensitive beyond the last token") {
  for (auto family : {ToyFamily::kLinearRecurrent, ToyFamily::kTableDriven}) {
    ToyModelSpec spec = small_linear_spec(29);
    spec.family = family;
    auto model = build_toy_model(spec);
    PredictorCache cache(*model.predictor);
    const auto a = cache.embedding({0, 1});
    const auto b = cache.embedding({1, 1});
    CHECK(a.values != b.values);
  }
}

TEST_CASE("joiner outputs are normalized distributions") {
  auto model = build_toy_model(small_linear_spec(31));
  PredictorCache cache(*model.predictor);
  std::mt19937_64 rng(37);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };

  for (int i = 0; i < 200; ++i) {
    AudioEmbedding a;
    a.frame_index = i;
    a.values.resize(4);
    for (auto& v : a.values) v = unit() * 3.0;
    LabelSeq prefix;
    for (size_t u = 0; u < rng() % 4; ++u) prefix.push_back(static_cast<int32_t>(rng() % 3));
    const JoinerOutput out = model.joiner->join(a, cache.embedding(prefix));
    REQUIRE(out.log_probs.size() == 4);
    double total = -std::numeric_limits<double>::infinity();
    for (const auto& lp : out.log_probs) total = logsumexp(total, lp.log());
    CHECK(std::abs(total) <= 1e-6);
  }
}

TEST_CASE("joiner is pure: identical inputs give bit-identical outputs") {
  auto model = build_toy_model(small_linear_spec(41));
  PredictorCache cache(*model.predictor);
  AudioEmbedding a{{0.25, -0.5, 0.75, 0.125}, 3};
  const TextEmbedding t = cache.embedding({1, 2});
  const JoinerOutput first = model.joiner->join(a, t);
  const JoinerOutput second = model.joiner->join(a, t);
  REQUIRE(first.log_probs.size() == second.log_probs.size());
  for (size_t k = 0; k < first.log_probs.size(); ++k) {
    CHECK(first.log_probs[k].log() == second.log_probs[k].log());
  }
}

TEST_CASE("zero-weight model joins to the uniform distribution") {
  auto data = std::make_shared<const ToyModelData>(
      generate_zero_linear_data(small_linear_spec(43)));
  auto model = instantiate_model(data);
  PredictorCache cache(*model.predictor);
  AudioEmbedding a{{0.5, 0.5, -1.0, 2.0}, 0};
  const JoinerOutput out = model.joiner->join(a, cache.embedding({0, 1}));
  for (const auto& lp : out.log_probs) {
    CHECK(lp.log() == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
  }
}

TEST_CASE("joiner matches a straight-line reimplementation of the serialized weights") {
  auto spec = small_linear_spec(3);
  const ToyModelData data = generate_toy_data(spec);
  auto model = instantiate_model(std::make_shared<const ToyModelData>(data));

  // Read the weights back through the file format and redo the arithmetic
  // with plain loops, independent of the Joiner implementation.
  const nlohmann::json j = nlohmann::json::parse(serialize_model(data));
  auto mat = [&](const nlohmann::json& rows) {
    std::vector<std::vector<double>> m;
    for (const auto& r : rows) m.push_back(r.get<std::vector<double>>());
    return m;
  };
  const auto proj_audio = mat(j["joiner"]["proj_audio"]);
  const auto proj_text = mat(j["joiner"]["proj_text"]);
  const auto out_w = mat(j["joiner"]["out"]);
  const auto bias = j["joiner"]["bias"].get<std::vector<double>>();
  const auto h0 = j["predictor"]["h0"].get<std::vector<double>>();

  AudioEmbedding a{{0.3, -0.4, 0.1, 0.9}, 0};
  std::vector<double> summed(proj_audio.size(), 0.0);
  for (size_t r = 0; r < proj_audio.size(); ++r) {
    for (size_t c = 0; c < a.values.size(); ++c) summed[r] += proj_audio[r][c] * a.values[c];
    for (size_t c = 0; c < h0.size(); ++c) summed[r] += proj_text[r][c] * h0[c];
    summed[r] = summed[r] > 0.0 ? summed[r] : 0.0;
  }
  std::vector<double> logits(out_w.size(), 0.0);
  for (size_t k = 0; k < out_w.size(); ++k) {
    for (size_t c = 0; c < summed.size(); ++c) logits[k] += out_w[k][c] * summed[c];
    logits[k] += bias[k];
  }
  double z = 0.0;
  const double m = *std::max_element(logits.begin(), logits.end());
  for (double v : logits) z += std::exp(v - m);
  const double log_z = m + std::log(z);

  PredictorCache cache(*model.predictor);
  const JoinerOutput out = model.joiner->join(a, cache.embedding({}));
  REQUIRE(out.log_probs.size() == logits.size());
  for (size_t k = 0; k < logits.size(); ++k) {
    CHECK(out.log_probs[k].log() == doctest::Approx(logits[k] - log_z).epsilon(1e-12));
  }
}

TEST_CASE("joiner call counter starts at zero and is memoized per (frame, prefix)") {
  auto model = counter_trace_model();

  BeamConfig cfg;
  cfg.beam_width = 1;
  cfg.max_symbols_per_frame = 2;

  DecodeSession session(model, cfg);
  CHECK(session.joiner_calls() == 0);

  session.feed(random_embeddings(1, 1, 0));
  const DecodeResult result = session.finalize();
  // Hand trace: pop [] (one call), pop [a] (second call), then B holds two
  // entries more probable than anything left in A and the frame ends.
  // Final B: [a] = 0.5 * 0.9 = 0.45, [] = 0.3.
  CHECK(result.stats.joiner_calls == 2);
  CHECK(result.best.labels == LabelSeq{0});
  CHECK(result.best.score.log() == doctest::Approx(std::log(0.45)).epsilon(1e-12));
}

TEST_CASE("pruned decode never pays more joiner calls than reference") {
  auto model = build_toy_model(small_linear_spec(47));
  BeamConfig pruned_cfg;
  pruned_cfg.beam_width = 4;
  pruned_cfg.expand_beam = 2.3;
  pruned_cfg.state_beam = 4.6;

  std::mt19937_64 rng(53);
  for (int i = 0; i < 50; ++i) {
    const auto embs = random_embeddings(1 + static_cast<int64_t>(rng() % 15), 4, rng());
    const auto pruned = decode_pruned(embs, model, pruned_cfg);
    const auto reference = decode_reference(embs, model, pruned_cfg);
    CHECK(pruned.stats.joiner_calls <= reference.stats.joiner_calls);

    BeamConfig inf_cfg = pruned_cfg;
    inf_cfg.expand_beam = std::numeric_limits<double>::infinity();
    inf_cfg.state_beam = std::numeric_limits<double>::infinity();
    const auto unpruned = decode_pruned(embs, model, inf_cfg);
    CHECK(unpruned.stats.joiner_calls == reference.stats.joiner_calls);
  }
}
