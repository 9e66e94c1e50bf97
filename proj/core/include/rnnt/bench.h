#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnnt/chunk_stream.h"
#include "rnnt/model.h"
#include "rnnt/types.h"

namespace rnnt {

struct UtteranceSpec {
  int64_t n_frames = 0;
  uint64_t seed = 0;
};

// A fully reproducible benchmark run: the utterance list, the shared model,
// and the session configuration. Deterministic counters depend only on this;
// timing fields depend on the machine.
struct BenchWorkload {
  std::vector<UtteranceSpec> utterances;
  TransducerModel model;
  ChunkConfig chunk;
  BeamConfig beam;
  int concurrency = 1;
  // One discarded utterance per worker before the clock starts.
  bool warmup = true;
};

struct BenchReport {
  double throughput = 0.0;     // audio seconds per wall-clock second
  double rtf_at_n = 0.0;       // stream wall-seconds per audio-second at N
  int64_t joiner_calls = 0;
  int64_t encoder_frames = 0;  // includes recomputed right context
  int64_t max_latency_ms = 0;  // max algorithmic latency over all utterances
  double audio_seconds = 0.0;
  double wall_seconds = 0.0;
  int concurrency = 1;
  int64_t n_utterances = 0;
};

// Runs N concurrent stream workers pulling utterances from a shared queue;
// each utterance is processed end-to-end by one worker. The only shared
// mutable state is the queue cursor; decode sessions never share state.
BenchReport run_bench(const BenchWorkload& workload);

// Cartesian sweep over beam and DT values; one CSV row per point, stable
// column order.
std::string sweep_csv(const BenchWorkload& base, const std::vector<double>& expand_beams,
                      const std::vector<double>& state_beams,
                      const std::vector<int64_t>& dt_ms_values);

extern const char kSweepCsvHeader[];

// Workload file: JSON {"utterances": [{"n_frames", "seed"}, ...]}.
std::vector<UtteranceSpec> load_workload(const std::string& path);
void save_workload(const std::vector<UtteranceSpec>& utterances, const std::string& path);

}  // namespace rnnt
