#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rnnt/beam_search.h"
#include "rnnt/bench.h"
#include "rnnt/chunk_stream.h"
#include "rnnt/feature_file.h"
#include "rnnt/model_io.h"
#include "rnnt/oracle.h"
#include "rnnt/toy_model.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;

constexpr double kInf = std::numeric_limits<double>::infinity();

json beam_to_json(double beam) {
  if (std::isinf(beam)) return json("inf");
  return json(beam);
}

struct SessionFlags {
  std::string model_path;
  int64_t dt_ms = 800;
  int64_t rc_frames = 20;
  int64_t rc_ms = -1;             // overrides rc_frames when set
  int64_t frame_shift_ms = -1;    // defaults to the feature file header
  int beam_width = 5;
  double expand_beam = kInf;
  double state_beam = kInf;
  int max_symbols = 10;

  void add_to(CLI::App* cmd, bool with_model = true) {
    if (with_model) {
      cmd->add_option("--model", model_path,
                      "model weight file (defaults to $RNNT_MODEL)");
    }
    cmd->add_option("--dt-ms", dt_ms, "decoding threshold: inference chunk size in ms");
    cmd->add_option("--rc-frames", rc_frames, "right context in frames");
    cmd->add_option("--rc-ms", rc_ms, "right context in ms (overrides --rc-frames)");
    cmd->add_option("--frame-shift-ms", frame_shift_ms, "frame shift in ms");
    cmd->add_option("--beam", beam_width, "beam width W");
    cmd->add_option("--expand-beam", expand_beam,
                    "expansion admission margin in nats (omit for unpruned)");
    cmd->add_option("--state-beam", state_beam,
                    "frame-loop early-exit margin in nats (omit for unpruned)");
    cmd->add_option("--max-symbols", max_symbols, "non-blank emissions cap per frame");
  }

  std::string resolved_model_path() const {
    if (!model_path.empty()) return model_path;
    if (const char* env = std::getenv("RNNT_MODEL")) return env;
    throw rnnt::ConfigError("no model: pass --model or set RNNT_MODEL");
  }

  rnnt::ChunkConfig chunk_config(int64_t default_shift_ms) const {
    rnnt::ChunkConfig cfg;
    cfg.frame_shift_ms = frame_shift_ms > 0 ? frame_shift_ms : default_shift_ms;
    if (rc_ms >= 0) {
      if (rc_ms % cfg.frame_shift_ms != 0) {
        throw rnnt::ConfigError("--rc-ms must be a multiple of the frame shift");
      }
      cfg.rc_frames = rc_ms / cfg.frame_shift_ms;
    } else {
      cfg.rc_frames = rc_frames;
    }
    cfg.cs_frames = rnnt::dt_to_frames(dt_ms, cfg);
    cfg.validate();
    return cfg;
  }

  rnnt::BeamConfig beam_config() const {
    rnnt::BeamConfig cfg;
    cfg.beam_width = beam_width;
    cfg.expand_beam = expand_beam;
    cfg.state_beam = state_beam;
    cfg.max_symbols_per_frame = max_symbols;
    cfg.validate();
    return cfg;
  }
};

std::vector<rnnt::AudioEmbedding> encode_features(const rnnt::FeatureFile& features,
                                                  const rnnt::TransducerModel& model,
                                                  const rnnt::ChunkConfig& chunk,
                                                  int64_t* encoder_frames = nullptr) {
  rnnt::StreamingEncoder encoder(model, chunk);
  std::vector<rnnt::AudioEmbedding> embeddings;
  for (const auto& frame : features.frames) {
    auto ready = encoder.push(frame);
    embeddings.insert(embeddings.end(), std::make_move_iterator(ready.begin()),
                      std::make_move_iterator(ready.end()));
  }
  auto tail = encoder.finish();
  embeddings.insert(embeddings.end(), std::make_move_iterator(tail.begin()),
                    std::make_move_iterator(tail.end()));
  if (encoder_frames != nullptr) *encoder_frames = encoder.encoder_frames_processed();
  return embeddings;
}

json hypothesis_to_json(const rnnt::Hypothesis& h, const rnnt::Vocabulary& vocab) {
  return json{{"labels", h.labels},
              {"transcript", vocab.detokenize(h.labels)},
              {"score", h.score.log()},
              {"normalized_score", rnnt::normalized_score(h)}};
}

int cmd_decode(const SessionFlags& flags, const std::string& features_path, bool as_json) {
  const rnnt::TransducerModel model = rnnt::load_model(flags.resolved_model_path());
  const rnnt::FeatureFile features = rnnt::load_features(features_path);
  const rnnt::ChunkConfig chunk = flags.chunk_config(features.frame_shift_ms);
  const rnnt::BeamConfig beam = flags.beam_config();

  int64_t encoder_frames = 0;
  const auto embeddings = encode_features(features, model, chunk, &encoder_frames);
  const rnnt::DecodeResult result = rnnt::decode_pruned(embeddings, model, beam);

  if (!as_json) {
    std::cout << model.vocab.detokenize(result.best.labels) << "\n";
    return kExitOk;
  }
  json n_best = json::array();
  for (const auto& h : result.n_best) n_best.push_back(hypothesis_to_json(h, model.vocab));
  json out = hypothesis_to_json(result.best, model.vocab);
  out["n_best"] = std::move(n_best);
  out["stats"] = json{{"joiner_calls", result.stats.joiner_calls},
                      {"frames", result.stats.frames},
                      {"expansions_pruned", result.stats.expansions_pruned},
                      {"state_beam_breaks", result.stats.state_beam_breaks},
                      {"loop_iterations", result.stats.loop_iterations},
                      {"encoder_frames", encoder_frames}};
  out["config"] = json{{"beam_width", beam.beam_width},
                       {"expand_beam", beam_to_json(beam.expand_beam)},
                       {"state_beam", beam_to_json(beam.state_beam)},
                       {"max_symbols_per_frame", beam.max_symbols_per_frame},
                       {"dt_ms", flags.dt_ms},
                       {"rc_frames", chunk.rc_frames},
                       {"frame_shift_ms", chunk.frame_shift_ms}};
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_compare(const SessionFlags& flags, const std::string& features_path,
                bool with_oracle) {
  const rnnt::TransducerModel model = rnnt::load_model(flags.resolved_model_path());
  const rnnt::FeatureFile features = rnnt::load_features(features_path);
  const rnnt::ChunkConfig chunk = flags.chunk_config(features.frame_shift_ms);
  const rnnt::BeamConfig beam = flags.beam_config();

  const auto embeddings = encode_features(features, model, chunk);
  const rnnt::DecodeResult pruned = rnnt::decode_pruned(embeddings, model, beam);
  const rnnt::DecodeResult reference = rnnt::decode_reference(embeddings, model, beam);

  json out{{"agree", pruned.best.labels == reference.best.labels},
           {"pruned_labels", pruned.best.labels},
           {"pruned_transcript", model.vocab.detokenize(pruned.best.labels)},
           {"pruned_score", pruned.best.score.log()},
           {"reference_labels", reference.best.labels},
           {"reference_transcript", model.vocab.detokenize(reference.best.labels)},
           {"reference_score", reference.best.score.log()},
           {"joiner_calls_pruned", pruned.stats.joiner_calls},
           {"joiner_calls_reference", reference.stats.joiner_calls}};
  if (with_oracle) {
    rnnt::OracleLimit limit;
    const rnnt::Hypothesis best = rnnt::oracle_best(embeddings, model, limit);
    out["oracle_labels"] = best.labels;
    out["oracle_transcript"] = model.vocab.detokenize(best.labels);
    out["oracle_score"] = best.score.log();
    out["pruned_matches_oracle"] = pruned.best.labels == best.labels;
    out["reference_matches_oracle"] = reference.best.labels == best.labels;
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;  // disagreement is data, not failure
}

struct GenFlags {
  uint64_t seed = 0;
  int64_t n_frames = 100;
  int feature_dim = 4;
  int encoder_dim = 4;
  int predictor_dim = 4;
  int vocab_size = 5;
  int subsample = 1;
  int64_t frame_shift_ms = 10;
  std::string family = "linear_recurrent";
  std::string out_features;
  std::string out_model;
  std::string out_workload;
  int n_utterances = 0;
  int64_t min_frames = 50;
  int64_t max_frames = 200;
};

int cmd_gen(const GenFlags& g) {
  if (g.out_model.empty() && g.out_features.empty() && g.out_workload.empty()) {
    throw rnnt::ConfigError("gen: nothing to do; pass --out-model, --out-features "
                            "or --out-workload");
  }
  if (!g.out_model.empty()) {
    rnnt::ToyModelSpec spec;
    spec.feature_dim = g.feature_dim;
    spec.encoder_dim = g.encoder_dim;
    spec.predictor_dim = g.predictor_dim;
    spec.vocab_size = g.vocab_size;
    spec.seed = g.seed;
    spec.family = rnnt::toy_family_from_string(g.family);
    spec.subsample_factor = g.subsample;
    rnnt::save_model(rnnt::generate_toy_data(spec), g.out_model);
  }
  if (!g.out_features.empty()) {
    rnnt::FeatureFile file;
    file.feature_dim = g.feature_dim;
    file.frame_shift_ms = g.frame_shift_ms;
    file.frames = rnnt::synth_features(g.n_frames, g.feature_dim, g.frame_shift_ms, g.seed);
    rnnt::save_features(file, g.out_features);
  }
  if (!g.out_workload.empty()) {
    if (g.n_utterances < 1) {
      throw rnnt::ConfigError("gen: --out-workload needs --n-utterances >= 1");
    }
    if (g.min_frames < 0 || g.max_frames < g.min_frames) {
      throw rnnt::ConfigError("gen: need 0 <= --min-frames <= --max-frames");
    }
    std::vector<rnnt::UtteranceSpec> utterances;
    std::mt19937_64 rng(g.seed);
    const uint64_t span = static_cast<uint64_t>(g.max_frames - g.min_frames) + 1;
    for (int i = 0; i < g.n_utterances; ++i) {
      rnnt::UtteranceSpec u;
      u.n_frames = g.min_frames + static_cast<int64_t>(rng() % span);
      u.seed = rng();
      utterances.push_back(u);
    }
    rnnt::save_workload(utterances, g.out_workload);
  }
  return kExitOk;
}

json report_to_json(const rnnt::BenchReport& r) {
  return json{{"throughput", r.throughput},
              {"rtf_at_n", r.rtf_at_n},
              {"joiner_calls", r.joiner_calls},
              {"encoder_frames", r.encoder_frames},
              {"max_latency_ms", r.max_latency_ms},
              {"audio_seconds", r.audio_seconds},
              {"wall_seconds", r.wall_seconds},
              {"concurrency", r.concurrency},
              {"n_utterances", r.n_utterances}};
}

int cmd_bench(const SessionFlags& flags, const std::string& workload_path, int concurrency,
              const std::string& out_path, bool warmup) {
  rnnt::BenchWorkload workload;
  workload.model = rnnt::load_model(flags.resolved_model_path());
  workload.utterances = rnnt::load_workload(workload_path);
  workload.chunk = flags.chunk_config(flags.frame_shift_ms > 0 ? flags.frame_shift_ms : 10);
  workload.beam = flags.beam_config();
  workload.concurrency = concurrency;
  workload.warmup = warmup;

  const rnnt::BenchReport report = rnnt::run_bench(workload);
  const json out = report_to_json(report);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw rnnt::IoError("cannot open for writing: " + out_path);
    f << out.dump(2) << "\n";
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

std::vector<double> parse_beam_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf") {
      out.push_back(kInf);
    } else {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw rnnt::ConfigError("invalid beam value: " + item);
      }
    }
  }
  if (out.empty()) throw rnnt::ConfigError("empty beam list");
  return out;
}

std::vector<int64_t> parse_int_list(const std::string& csv) {
  std::vector<int64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw rnnt::ConfigError("invalid integer value: " + item);
    }
  }
  if (out.empty()) throw rnnt::ConfigError("empty list");
  return out;
}

int cmd_sweep(const SessionFlags& flags, const std::string& workload_path, int concurrency,
              const std::string& expand_csv, const std::string& state_csv,
              const std::string& dt_csv, const std::string& out_path) {
  rnnt::BenchWorkload base;
  base.model = rnnt::load_model(flags.resolved_model_path());
  base.utterances = rnnt::load_workload(workload_path);
  base.chunk = flags.chunk_config(flags.frame_shift_ms > 0 ? flags.frame_shift_ms : 10);
  base.beam = flags.beam_config();
  base.concurrency = concurrency;

  const std::string csv = rnnt::sweep_csv(base, parse_beam_list(expand_csv),
                                          parse_beam_list(state_csv), parse_int_list(dt_csv));
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw rnnt::IoError("cannot open for writing: " + out_path);
    f << csv;
  } else {
    std::cout << csv;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming RNN-T decoding engine"};
  app.require_subcommand(1);

  SessionFlags decode_flags;
  std::string decode_features;
  bool decode_json = false;
  auto* decode = app.add_subcommand("decode", "decode a feature file");
  decode_flags.add_to(decode);
  decode->add_option("--features", decode_features, "feature file")->required();
  decode->add_flag("--json", decode_json, "print a JSON stats block instead of plain text");

  SessionFlags compare_flags;
  std::string compare_features;
  bool compare_oracle = false;
  auto* compare = app.add_subcommand(
      "compare", "run pruned vs reference search and report agreement");
  compare_flags.add_to(compare);
  compare->add_option("--features", compare_features, "feature file")->required();
  compare->add_flag("--oracle", compare_oracle,
                    "also run the exhaustive oracle (tiny instances only)");

  GenFlags gen_flags;
  auto* gen = app.add_subcommand("gen", "generate toy models, features and workloads");
  gen->add_option("--seed", gen_flags.seed, "master seed");
  gen->add_option("--n-frames", gen_flags.n_frames, "feature frames to generate");
  gen->add_option("--feature-dim", gen_flags.feature_dim, "feature dimension");
  gen->add_option("--encoder-dim", gen_flags.encoder_dim, "encoder embedding dimension");
  gen->add_option("--predictor-dim", gen_flags.predictor_dim, "predictor dimension");
  gen->add_option("--vocab-size", gen_flags.vocab_size, "vocabulary size incl. blank");
  gen->add_option("--subsample", gen_flags.subsample, "encoder time subsampling factor");
  gen->add_option("--frame-shift-ms", gen_flags.frame_shift_ms, "frame shift in ms");
  gen->add_option("--family", gen_flags.family,
                  "model family: linear_recurrent or table_driven");
  gen->add_option("--out-features", gen_flags.out_features, "feature file to write");
  gen->add_option("--out-model", gen_flags.out_model, "model file to write");
  gen->add_option("--out-workload", gen_flags.out_workload, "workload file to write");
  gen->add_option("--n-utterances", gen_flags.n_utterances, "workload utterance count");
  gen->add_option("--min-frames", gen_flags.min_frames, "workload min frames");
  gen->add_option("--max-frames", gen_flags.max_frames, "workload max frames");

  SessionFlags bench_flags;
  std::string bench_workload;
  std::string bench_out;
  int bench_concurrency = 1;
  bool bench_no_warmup = false;
  auto* bench = app.add_subcommand("bench", "measure throughput and rtf@N");
  bench_flags.add_to(bench);
  bench->add_option("--workload", bench_workload, "workload file")->required();
  bench->add_option("--concurrency", bench_concurrency, "concurrent stream workers N");
  bench->add_option("--out", bench_out, "write the JSON report here too");
  bench->add_flag("--no-warmup", bench_no_warmup, "skip the per-worker warmup utterance");

  SessionFlags sweep_flags;
  std::string sweep_workload;
  std::string sweep_out;
  std::string sweep_expand = "1.5,2.3,inf";
  std::string sweep_state = "2.3,4.6,inf";
  std::string sweep_dt = "800";
  int sweep_concurrency = 1;
  auto* sweep = app.add_subcommand("sweep", "grid of bench runs, CSV output");
  sweep_flags.add_to(sweep);
  sweep->add_option("--workload", sweep_workload, "workload file")->required();
  sweep->add_option("--concurrency", sweep_concurrency, "concurrent stream workers N");
  sweep->add_option("--expand-beams", sweep_expand, "comma list, e.g. 1.5,2.3,inf");
  sweep->add_option("--state-beams", sweep_state, "comma list, e.g. 2.3,4.6,inf");
  sweep->add_option("--dt-ms-list", sweep_dt, "comma list of DT values in ms");
  sweep->add_option("--out", sweep_out, "write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (decode->parsed()) return cmd_decode(decode_flags, decode_features, decode_json);
    if (compare->parsed()) return cmd_compare(compare_flags, compare_features, compare_oracle);
    if (gen->parsed()) return cmd_gen(gen_flags);
    if (bench->parsed()) {
      return cmd_bench(bench_flags, bench_workload, bench_concurrency, bench_out,
                       !bench_no_warmup);
    }
    if (sweep->parsed()) {
      return cmd_sweep(sweep_flags, sweep_workload, sweep_concurrency, sweep_expand,
                       sweep_state, sweep_dt, sweep_out);
    }
  } catch (const rnnt::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const rnnt::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
