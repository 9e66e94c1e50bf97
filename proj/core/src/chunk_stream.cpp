#include "rnnt/chunk_stream.h"

#include <algorithm>
#include <string>

namespace rnnt {

void ChunkConfig::validate() const {
  if (cs_frames < 1) throw ConfigError("chunk size must be >= 1 frame");
  if (rc_frames < 0) throw ConfigError("right context must be >= 0 frames");
  if (rc_frames >= cs_frames) {
    throw ConfigError("right context (" + std::to_string(rc_frames) +
                      ") must be smaller than chunk size (" + std::to_string(cs_frames) +
                      "); a chunk must emit at least one frame");
  }
  if (frame_shift_ms < 1) throw ConfigError("frame shift must be >= 1 ms");
}

int64_t ChunkPlan::total_encoder_frames() const {
  int64_t total = 0;
  for (const auto& w : windows) total += w.chunk_end - w.chunk_start;
  return total;
}

ChunkPlan plan_chunks(int64_t total_frames, const ChunkConfig& cfg) {
  cfg.validate();
  if (total_frames < 0) throw ConfigError("frame count must be >= 0");

  ChunkPlan plan;
  const int64_t stride = cfg.stride();
  int64_t start = 0;
  while (start < total_frames) {
    if (total_frames - start < cfg.cs_frames) {
      // Final short chunk: truncated at T, absorbs all remaining frames.
      plan.windows.push_back({start, total_frames, start, total_frames});
      break;
    }
    plan.windows.push_back({start, start + cfg.cs_frames, start, start + stride});
    start += stride;
  }
  return plan;
}

int64_t dt_to_frames(int64_t dt_ms, const ChunkConfig& cfg) {
  if (dt_ms <= 0) throw ConfigError("DT must be positive");
  if (dt_ms % cfg.frame_shift_ms != 0) {
    throw ConfigError("DT must be a multiple of frame shift (" +
                      std::to_string(cfg.frame_shift_ms) + " ms)");
  }
  const int64_t frames = dt_ms / cfg.frame_shift_ms;
  if (frames <= cfg.rc_frames) {
    throw ConfigError("DT of " + std::to_string(dt_ms) + " ms yields a chunk of " +
                      std::to_string(frames) + " frames, not larger than the right context (" +
                      std::to_string(cfg.rc_frames) + " frames)");
  }
  return frames;
}

double recompute_ratio(const ChunkConfig& cfg) {
  cfg.validate();
  return static_cast<double>(cfg.cs_frames) / static_cast<double>(cfg.stride());
}

int64_t max_algorithmic_latency_ms(int64_t total_frames, const ChunkConfig& cfg) {
  cfg.validate();
  return std::min(total_frames, cfg.cs_frames) * cfg.frame_shift_ms;
}

StreamingEncoder::StreamingEncoder(const TransducerModel& model, const ChunkConfig& cfg)
    : model_(model), cfg_(cfg) {
  cfg_.validate();
}

std::vector<AudioEmbedding> StreamingEncoder::encode_window(int64_t chunk_start,
                                                            int64_t chunk_end,
                                                            int64_t emit_start,
                                                            int64_t emit_end) {
  const auto offset = static_cast<size_t>(chunk_start - buffer_base_);
  const auto len = static_cast<size_t>(chunk_end - chunk_start);
  std::span<const AudioFrame> window(buffer_.data() + offset, len);
  encoder_frames_ += chunk_end - chunk_start;
  return model_.encoder->encode_chunk(window, chunk_start, {emit_start, emit_end});
}

std::vector<AudioEmbedding> StreamingEncoder::push(AudioFrame frame) {
  if (finished_) throw ProtocolError("push after finish");
  buffer_.push_back(std::move(frame));
  ++frames_pushed_;

  std::vector<AudioEmbedding> out;
  // A window is known to be non-final once its full span has arrived.
  while (frames_pushed_ >= next_chunk_start_ + cfg_.cs_frames) {
    const int64_t start = next_chunk_start_;
    auto embs = encode_window(start, start + cfg_.cs_frames, start, start + cfg_.stride());
    out.insert(out.end(), std::make_move_iterator(embs.begin()),
               std::make_move_iterator(embs.end()));
    next_chunk_start_ = start + cfg_.stride();
    // Frames before the next chunk start are no longer needed.
    const auto drop = static_cast<size_t>(next_chunk_start_ - buffer_base_);
    buffer_.erase(buffer_.begin(), buffer_.begin() + drop);
    buffer_base_ = next_chunk_start_;
  }
  return out;
}

std::vector<AudioEmbedding> StreamingEncoder::finish() {
  if (finished_) throw ProtocolError("finish called twice");
  finished_ = true;
  std::vector<AudioEmbedding> out;
  if (next_chunk_start_ < frames_pushed_) {
    out = encode_window(next_chunk_start_, frames_pushed_, next_chunk_start_, frames_pushed_);
  }
  buffer_.clear();
  return out;
}

std::vector<AudioEmbedding> encode_offline(const std::vector<AudioFrame>& frames,
                                           const TransducerModel& model,
                                           const ChunkConfig& cfg) {
  const ChunkPlan plan = plan_chunks(static_cast<int64_t>(frames.size()), cfg);
  std::vector<AudioEmbedding> out;
  for (const auto& w : plan.windows) {
    std::span<const AudioFrame> window(frames.data() + w.chunk_start,
                                       static_cast<size_t>(w.chunk_end - w.chunk_start));
    auto embs = model.encoder->encode_chunk(window, w.chunk_start, {w.emit_start, w.emit_end});
    out.insert(out.end(), std::make_move_iterator(embs.begin()),
               std::make_move_iterator(embs.end()));
  }
  return out;
}

}  // namespace rnnt
