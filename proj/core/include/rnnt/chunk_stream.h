#pragma once

#include <cstdint>
#include <vector>

#include "rnnt/model.h"
#include "rnnt/types.h"

namespace rnnt {

struct ChunkConfig {
  int64_t cs_frames = 80;   // chunk size
  int64_t rc_frames = 20;   // minimum right context; overlap between chunks
  int64_t frame_shift_ms = 10;

  int64_t stride() const { return cs_frames - rc_frames; }
  void validate() const;
};

// One encoder window: the chunk [chunk_start, chunk_end) is processed, the
// emit range [emit_start, emit_end) is surfaced.
struct ChunkWindow {
  int64_t chunk_start;
  int64_t chunk_end;
  int64_t emit_start;
  int64_t emit_end;
};

// Deterministic sequence of overlapping windows for a T-frame stream.
// Emit ranges partition [0, T); consecutive chunk starts advance by cs - rc;
// every emitted frame of a non-final window retains at least rc future frames
// in view. The final chunk is truncated at T, never padded.
struct ChunkPlan {
  std::vector<ChunkWindow> windows;

  // Raw encoder frames processed, including recomputed right context.
  int64_t total_encoder_frames() const;
};

ChunkPlan plan_chunks(int64_t total_frames, const ChunkConfig& cfg);

// Decoding Threshold: the chunk size in milliseconds used at inference. The
// result replaces cs_frames; rc_frames is unchanged.
int64_t dt_to_frames(int64_t dt_ms, const ChunkConfig& cfg);

// Encoder frames computed per emitted frame in the long-stream limit:
// cs / (cs - rc).
double recompute_ratio(const ChunkConfig& cfg);

// Worst-case wait between a frame arriving and its embedding being emitted,
// in frames: the first frame of a full chunk waits for the whole window.
int64_t max_algorithmic_latency_ms(int64_t total_frames, const ChunkConfig& cfg);

// Incremental scheduler: push frames as they arrive, collect embeddings as
// soon as each window's full span (including right context) is available.
// finish() flushes the final truncated chunk. Output is identical to encoding
// the offline plan window by window.
class StreamingEncoder {
 public:
  StreamingEncoder(const TransducerModel& model, const ChunkConfig& cfg);

  // Appends one frame; returns any embeddings that became ready.
  std::vector<AudioEmbedding> push(AudioFrame frame);

  // Signals end-of-input; returns embeddings of the final partial chunk.
  std::vector<AudioEmbedding> finish();

  int64_t frames_pushed() const { return frames_pushed_; }
  int64_t encoder_frames_processed() const { return encoder_frames_; }

 private:
  std::vector<AudioEmbedding> encode_window(int64_t chunk_start, int64_t chunk_end,
                                            int64_t emit_start, int64_t emit_end);

  const TransducerModel& model_;
  ChunkConfig cfg_;
  std::vector<AudioFrame> buffer_;  // frames [buffer_base_, frames_pushed_)
  int64_t buffer_base_ = 0;
  int64_t next_chunk_start_ = 0;
  int64_t frames_pushed_ = 0;
  int64_t encoder_frames_ = 0;
  bool finished_ = false;
};

// Offline helper: plan + encode every window in order.
std::vector<AudioEmbedding> encode_offline(const std::vector<AudioFrame>& frames,
                                           const TransducerModel& model,
                                           const ChunkConfig& cfg);

}  // namespace rnnt
