#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "rnnt/types.h"

namespace rnnt {

// One input frame of acoustic features. All frames in a stream share the
// feature dimension; timestamps advance in steps of the frame shift.
struct AudioFrame {
  std::vector<double> features;
  int64_t timestamp_ms = 0;
};

// Encoder output a_t for one (post-subsampling) frame index.
struct AudioEmbedding {
  std::vector<double> values;
  int64_t frame_index = 0;
};

// Recurrent predictor state for one label prefix. Immutable once built;
// handles are shared freely between hypotheses.
struct PredictorStateNode {
  LabelSeq prefix;
  std::vector<double> hidden;
  std::vector<double> embedding;
};

// Predictor output t_h plus the state handle that produced it.
struct TextEmbedding {
  std::vector<double> values;
  PredictorStateRef state;
};

// Normalized log-probability vector over the V output units, indexed by
// token id. logsumexp over all entries is 0 within 1e-6.
struct JoinerOutput {
  std::vector<LogProb> log_probs;
};

struct FrameInterval {
  int64_t begin = 0;
  int64_t end = 0;  // half-open
  bool empty() const { return begin >= end; }
};

// Audio Encoder contract. A chunk is processed with its full window but only
// the emit range is surfaced; embeddings for a given index depend only on
// frames inside the chunk. With subsampling factor s, a raw emit range
// [lo, hi) surfaces post-subsampling indices ceil(lo/s) .. ceil(hi/s)-1, each
// taken at raw position index*s.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual int feature_dim() const = 0;
  virtual int embedding_dim() const = 0;
  virtual int subsample_factor() const = 0;
  // `frames` spans raw indices [chunk_start, chunk_start + frames.size());
  // `emit` is a raw frame-index interval inside that span.
  virtual std::vector<AudioEmbedding> encode_chunk(std::span<const AudioFrame> frames,
                                                   int64_t chunk_start,
                                                   FrameInterval emit) const = 0;
};

// Text Predictor contract: a deterministic function of the label prefix.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual int embedding_dim() const = 0;
  virtual PredictorStateRef initial_state() const = 0;
  virtual PredictorStateRef step(const PredictorStateRef& parent, int32_t label) const = 0;
};

// Joiner contract: a pure function of (a_t, t_h) producing a normalized
// distribution over the output units.
class Joiner {
 public:
  virtual ~Joiner() = default;
  virtual int vocab_size() const = 0;
  virtual JoinerOutput join(const AudioEmbedding& a, const TextEmbedding& t) const = 0;
};

// The encoder/predictor/joiner triple behind shared ownership. Immutable
// after load; shareable read-only across threads.
struct TransducerModel {
  std::shared_ptr<const Encoder> encoder;
  std::shared_ptr<const Predictor> predictor;
  std::shared_ptr<const Joiner> joiner;
  Vocabulary vocab;

  int32_t blank_id() const { return vocab.blank_id(); }
  int32_t vocab_size() const { return vocab.size(); }
};

// Memoizes predictor states by exact label sequence. Per-decode-session,
// confined to a single stream's worker; cleared between utterances.
class PredictorCache {
 public:
  explicit PredictorCache(const Predictor& predictor) : predictor_(predictor) {}

  // Computes at most one incremental step per missing suffix token, walking
  // down from the longest cached ancestor.
  const PredictorStateRef& get(const LabelSeq& prefix);

  TextEmbedding embedding(const LabelSeq& prefix);

  void clear() { cache_.clear(); }
  size_t size() const { return cache_.size(); }

 private:
  const Predictor& predictor_;
  std::map<LabelSeq, PredictorStateRef> cache_;
};

// Memoizes joiner rows by (frame index, label sequence) and counts real
// joiner invocations: a hypothesis re-examined at the same frame never pays a
// second joiner call, and the counter counts only cache misses.
class JoinerCache {
 public:
  JoinerCache(const TransducerModel& model, PredictorCache& predictor_cache)
      : model_(model), predictor_cache_(predictor_cache) {}

  const JoinerOutput& row(const AudioEmbedding& a, const LabelSeq& prefix);

  int64_t joiner_calls() const { return joiner_calls_; }
  void reset_counter() { joiner_calls_ = 0; }
  void clear() { rows_.clear(); }

 private:
  const TransducerModel& model_;
  PredictorCache& predictor_cache_;
  std::map<std::pair<int64_t, LabelSeq>, JoinerOutput> rows_;
  int64_t joiner_calls_ = 0;
};

}  // namespace rnnt
