#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rnnt/hypothesis_set.h"
#include "rnnt/model.h"
#include "rnnt/types.h"

namespace rnnt {

struct DecodeStats {
  int64_t joiner_calls = 0;
  int64_t expansions_pruned = 0;   // rejected by expand_beam
  int64_t state_beam_breaks = 0;   // early exits of the per-frame loop
  int64_t frames = 0;
  int64_t loop_iterations = 0;     // pops of the per-frame expansion loop
};

struct DecodeResult {
  Hypothesis best;
  // Up to W hypotheses by normalized score, deterministic tie-break.
  std::vector<Hypothesis> n_best;
  DecodeStats stats;
};

// Optional step-for-step record of one decode, for golden traces.
struct DecodeTrace {
  struct Scored {
    LabelSeq labels;
    double score;
  };
  struct PopRecord {
    LabelSeq popped;
    double pop_score;                 // post prefix-merge, pre blank
    double blank_score;               // merged into B
    std::vector<Scored> admitted;     // expansions inserted into A
    std::vector<int32_t> pruned_tokens;
  };
  struct FrameRecord {
    int64_t frame;
    std::vector<Scored> a_after_merge;
    std::vector<PopRecord> pops;
    bool state_beam_break = false;
    std::vector<Scored> b_final;      // after W-truncation
  };
  std::vector<FrameRecord> frames;
};

// One streaming decode over one utterance. Embeddings arrive in frame order,
// possibly chunked; the final result is bit-identical to a one-shot decode of
// the concatenated sequence. Single-threaded, confined to one stream.
class DecodeSession {
 public:
  DecodeSession(const TransducerModel& model, const BeamConfig& cfg,
                DecodeTrace* trace = nullptr);

  void feed(const AudioEmbedding& embedding);
  void feed(std::span<const AudioEmbedding> embeddings);

  // Best-so-far view of the live hypothesis set.
  DecodeResult partial_result();

  DecodeResult finalize();

  int64_t joiner_calls() const { return joiner_cache_.joiner_calls(); }
  int64_t frames_fed() const { return next_frame_; }

 private:
  void step(const AudioEmbedding& embedding);
  DecodeResult result_from_live_set();
  double extension_log_prob(const AudioEmbedding& a, const LabelSeq& prefix,
                            const LabelSeq& full);

  const TransducerModel& model_;
  BeamConfig cfg_;
  DecodeTrace* trace_;
  PredictorCache predictor_cache_;
  JoinerCache joiner_cache_;
  HypothesisSet live_;  // Algorithm set B between frames
  DecodeStats stats_;
  int64_t next_frame_ = 0;
  bool finalized_ = false;
};

// The paper's pruned beam search over a full embedding sequence.
DecodeResult decode_pruned(std::span<const AudioEmbedding> embeddings,
                           const TransducerModel& model, const BeamConfig& cfg,
                           DecodeTrace* trace = nullptr);

// Unpruned baseline: the same search with both beams at +infinity; only
// cfg.beam_width and cfg.max_symbols_per_frame apply.
DecodeResult decode_reference(std::span<const AudioEmbedding> embeddings,
                              const TransducerModel& model, const BeamConfig& cfg);

}  // namespace rnnt
