#include "rnnt/bench.h"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rnnt/beam_search.h"
#include "rnnt/toy_model.h"

namespace rnnt {
namespace {

using Clock = std::chrono::steady_clock;

struct UtteranceRecord {
  double wall_seconds = 0.0;
  double audio_seconds = 0.0;
  int64_t joiner_calls = 0;
  int64_t encoder_frames = 0;
  int64_t max_latency_ms = 0;
};

UtteranceRecord decode_one(const BenchWorkload& w, const UtteranceSpec& utt) {
  const auto start = Clock::now();

  const auto frames = synth_features(utt.n_frames, w.model.encoder->feature_dim(),
                                     w.chunk.frame_shift_ms, utt.seed);
  StreamingEncoder encoder(w.model, w.chunk);
  DecodeSession session(w.model, w.beam);
  for (const auto& frame : frames) {
    for (const auto& emb : encoder.push(frame)) session.feed(emb);
  }
  for (const auto& emb : encoder.finish()) session.feed(emb);
  const DecodeResult result = session.finalize();

  UtteranceRecord rec;
  rec.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  rec.audio_seconds =
      static_cast<double>(utt.n_frames) * static_cast<double>(w.chunk.frame_shift_ms) / 1000.0;
  rec.joiner_calls = result.stats.joiner_calls;
  rec.encoder_frames = encoder.encoder_frames_processed();
  rec.max_latency_ms = max_algorithmic_latency_ms(utt.n_frames, w.chunk);
  return rec;
}

}  // namespace

const char kSweepCsvHeader[] =
    "expand_beam,state_beam,dt_ms,throughput,rtf_at_n,joiner_calls,encoder_frames,"
    "max_latency_ms";

BenchReport run_bench(const BenchWorkload& workload) {
  workload.chunk.validate();
  workload.beam.validate();
  if (workload.concurrency < 1) throw ConfigError("concurrency must be >= 1");

  const auto n = workload.utterances.size();
  std::vector<UtteranceRecord> records(n);
  std::atomic<size_t> cursor{0};

  const int n_workers = workload.concurrency;
  std::barrier sync(n_workers + 1);

  auto worker = [&]() {
    if (workload.warmup && !workload.utterances.empty()) {
      (void)decode_one(workload, workload.utterances.front());
    }
    sync.arrive_and_wait();  // clock starts once every worker is warm
    while (true) {
      const size_t i = cursor.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) break;
      records[i] = decode_one(workload, workload.utterances[i]);
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);

  sync.arrive_and_wait();
  const auto start = Clock::now();
  for (auto& t : threads) t.join();
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();

  BenchReport report;
  report.concurrency = workload.concurrency;
  report.n_utterances = static_cast<int64_t>(n);
  report.wall_seconds = wall;
  double stream_seconds = 0.0;
  for (const auto& rec : records) {
    report.audio_seconds += rec.audio_seconds;
    report.joiner_calls += rec.joiner_calls;
    report.encoder_frames += rec.encoder_frames;
    report.max_latency_ms = std::max(report.max_latency_ms, rec.max_latency_ms);
    stream_seconds += rec.wall_seconds;
  }
  report.throughput = wall > 0.0 ? report.audio_seconds / wall : 0.0;
  report.rtf_at_n =
      report.audio_seconds > 0.0 ? stream_seconds / report.audio_seconds : 0.0;
  return report;
}

std::string sweep_csv(const BenchWorkload& base, const std::vector<double>& expand_beams,
                      const std::vector<double>& state_beams,
                      const std::vector<int64_t>& dt_ms_values) {
  auto fmt_beam = [](double b) -> std::string {
    if (std::isinf(b)) return "inf";
    std::ostringstream os;
    os << b;
    return os.str();
  };

  std::ostringstream csv;
  csv << kSweepCsvHeader << "\n";
  for (double expand : expand_beams) {
    for (double state : state_beams) {
      for (int64_t dt : dt_ms_values) {
        BenchWorkload point = base;
        point.beam.expand_beam = expand;
        point.beam.state_beam = state;
        point.chunk.cs_frames = dt_to_frames(dt, base.chunk);
        const BenchReport r = run_bench(point);
        csv << fmt_beam(expand) << ',' << fmt_beam(state) << ',' << dt << ','
            << r.throughput << ',' << r.rtf_at_n << ',' << r.joiner_calls << ','
            << r.encoder_frames << ',' << r.max_latency_ms << "\n";
      }
    }
  }
  return csv.str();
}

std::vector<UtteranceSpec> load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open workload file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("workload file: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("utterances") || !j["utterances"].is_array()) {
    throw IoError("workload file: expected {\"utterances\": [...]}");
  }
  std::vector<UtteranceSpec> out;
  for (size_t i = 0; i < j["utterances"].size(); ++i) {
    const auto& u = j["utterances"][i];
    if (!u.contains("n_frames") || !u.contains("seed")) {
      throw IoError("utterances[" + std::to_string(i) + "]: need n_frames and seed");
    }
    out.push_back({u["n_frames"].get<int64_t>(), u["seed"].get<uint64_t>()});
  }
  return out;
}

void save_workload(const std::vector<UtteranceSpec>& utterances, const std::string& path) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& u : utterances) {
    list.push_back({{"n_frames", u.n_frames}, {"seed", u.seed}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << nlohmann::json{{"utterances", std::move(list)}}.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace rnnt
