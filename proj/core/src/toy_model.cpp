#include "rnnt/toy_model.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "rnnt/log_prob.h"

namespace rnnt {
namespace {

// Deterministic across platforms: top 53 bits of the engine output.
double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double symmetric_draw(std::mt19937_64& rng) { return unit_double(rng) - 0.5; }

Matrix draw_matrix(std::mt19937_64& rng, int rows, int cols) {
  Matrix m{rows, cols, std::vector<double>(static_cast<size_t>(rows) * cols)};
  for (auto& v : m.data) v = symmetric_draw(rng);
  return m;
}

// Scales so the largest row absolute sum equals `bound`; zero matrices stay.
void row_normalize(Matrix& m, double bound) {
  double max_row = 0.0;
  for (int r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < m.cols; ++c) s += std::abs(m.at(r, c));
    max_row = std::max(max_row, s);
  }
  if (max_row == 0.0) return;
  const double scale = bound / max_row;
  for (auto& v : m.data) v *= scale;
}

void matvec(const Matrix& m, const std::vector<double>& x, std::vector<double>& out) {
  out.assign(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c) acc += m.at(r, c) * x[c];
    out[r] = acc;
  }
}

void matvec_add(const Matrix& m, const std::vector<double>& x, std::vector<double>& acc) {
  for (int r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < m.cols; ++c) s += m.at(r, c) * x[c];
    acc[r] += s;
  }
}

std::vector<Vocabulary::Entry> make_toy_vocab(int vocab_size) {
  std::vector<Vocabulary::Entry> entries;
  entries.reserve(vocab_size);
  for (int i = 0; i + 1 < vocab_size; ++i) {
    entries.push_back({i, std::string(1, static_cast<char>('a' + (i % 26))), false});
  }
  entries.push_back({vocab_size - 1, "<b>", true});
  return entries;
}

std::vector<int64_t> subsampled_emit_indices(FrameInterval emit, int s) {
  std::vector<int64_t> idx;
  if (emit.empty()) return idx;
  const int64_t first = (emit.begin + s - 1) / s;
  const int64_t end = (emit.end + s - 1) / s;
  for (int64_t j = first; j < end; ++j) idx.push_back(j);
  return idx;
}

// ---------------------------------------------------------------------------
// linear_recurrent family

class LinearEncoder : public Encoder {
 public:
  LinearEncoder(std::shared_ptr<const ToyModelData> data) : data_(std::move(data)) {}

  int feature_dim() const override { return data_->feature_dim; }
  int embedding_dim() const override { return data_->encoder_dim; }
  int subsample_factor() const override { return data_->subsample_factor; }

  std::vector<AudioEmbedding> encode_chunk(std::span<const AudioFrame> frames,
                                           int64_t chunk_start,
                                           FrameInterval emit) const override {
    check_emit_range(frames, chunk_start, emit);
    const auto& w = data_->linear;
    const int e_dim = data_->encoder_dim;
    const size_t n = frames.size();

    for (const auto& f : frames) {
      if (static_cast<int>(f.features.size()) != data_->feature_dim) {
        throw ConfigError("frame feature dimension " + std::to_string(f.features.size()) +
                          " does not match model feature_dim " +
                          std::to_string(data_->feature_dim));
      }
    }

    // Both passes are chunk-local: state is zero-initialized at each chunk
    // boundary so an embedding depends only on frames inside the chunk.
    std::vector<std::vector<double>> left(n), right(n);
    std::vector<double> h(e_dim, 0.0), tmp;
    for (size_t i = 0; i < n; ++i) {
      matvec(w.enc_left_rec, h, tmp);
      matvec_add(w.enc_left_in, frames[i].features, tmp);
      h = tmp;
      left[i] = h;
    }
    std::vector<double> g(e_dim, 0.0);
    for (size_t i = n; i-- > 0;) {
      matvec(w.enc_right_rec, g, tmp);
      matvec_add(w.enc_right_in, frames[i].features, tmp);
      g = tmp;
      right[i] = g;
    }

    std::vector<AudioEmbedding> out;
    for (int64_t j : subsampled_emit_indices(emit, data_->subsample_factor)) {
      const auto raw = static_cast<size_t>(j * data_->subsample_factor - chunk_start);
      AudioEmbedding emb;
      emb.frame_index = j;
      emb.values.resize(e_dim);
      for (int d = 0; d < e_dim; ++d) emb.values[d] = left[raw][d] + right[raw][d];
      out.push_back(std::move(emb));
    }
    return out;
  }

 private:
  static void check_emit_range(std::span<const AudioFrame> frames, int64_t chunk_start,
                               FrameInterval emit) {
    if (frames.empty()) throw ConfigError("encode_chunk: empty chunk");
    if (!emit.empty() &&
        (emit.begin < chunk_start ||
         emit.end > chunk_start + static_cast<int64_t>(frames.size()))) {
      throw ConfigError("encode_chunk: emit range outside chunk span");
    }
  }

  std::shared_ptr<const ToyModelData> data_;
};

class LinearPredictor : public Predictor {
 public:
  LinearPredictor(std::shared_ptr<const ToyModelData> data) : data_(std::move(data)) {}

  int embedding_dim() const override { return data_->predictor_dim; }

  PredictorStateRef initial_state() const override {
    auto node = std::make_shared<PredictorStateNode>();
    node->hidden = data_->linear.pred_h0;
    node->embedding = node->hidden;
    return node;
  }

  PredictorStateRef step(const PredictorStateRef& parent, int32_t label) const override {
    const auto& w = data_->linear;
    auto node = std::make_shared<PredictorStateNode>();
    node->prefix = parent->prefix;
    node->prefix.push_back(label);
    matvec(w.pred_rec, parent->hidden, node->hidden);
    for (int d = 0; d < data_->predictor_dim; ++d) {
      node->hidden[d] += w.pred_token_emb.at(label, d);
    }
    node->embedding = node->hidden;
    return node;
  }

 private:
  std::shared_ptr<const ToyModelData> data_;
};

class SumReluSoftmaxJoiner : public Joiner {
 public:
  SumReluSoftmaxJoiner(std::shared_ptr<const ToyModelData> data) : data_(std::move(data)) {}

  int vocab_size() const override { return static_cast<int>(data_->vocab.size()); }

  JoinerOutput join(const AudioEmbedding& a, const TextEmbedding& t) const override {
    const auto& w = data_->linear;
    if (static_cast<int>(a.values.size()) != data_->encoder_dim ||
        static_cast<int>(t.values.size()) != data_->predictor_dim) {
      throw ConfigError("joiner input dimensions do not match model configuration");
    }
    std::vector<double> summed;
    matvec(w.join_proj_audio, a.values, summed);
    matvec_add(w.join_proj_text, t.values, summed);
    for (auto& v : summed) v = std::max(0.0, v);

    std::vector<double> logits;
    matvec(w.join_out, summed, logits);
    for (size_t k = 0; k < logits.size(); ++k) logits[k] += w.join_bias[k];

    // log-softmax
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    const double log_z = m + std::log(z);

    JoinerOutput out;
    out.log_probs.reserve(logits.size());
    for (double v : logits) out.log_probs.emplace_back(v - log_z);
    return out;
  }

 private:
  std::shared_ptr<const ToyModelData> data_;
};

// ---------------------------------------------------------------------------
// table_driven family

class PassthroughEncoder : public Encoder {
 public:
  PassthroughEncoder(std::shared_ptr<const ToyModelData> data) : data_(std::move(data)) {}

  int feature_dim() const override { return data_->feature_dim; }
  int embedding_dim() const override { return data_->feature_dim; }
  int subsample_factor() const override { return data_->subsample_factor; }

  std::vector<AudioEmbedding> encode_chunk(std::span<const AudioFrame> frames,
                                           int64_t chunk_start,
                                           FrameInterval emit) const override {
    if (frames.empty()) throw ConfigError("encode_chunk: empty chunk");
    std::vector<AudioEmbedding> out;
    for (int64_t j : subsampled_emit_indices(emit, data_->subsample_factor)) {
      const auto raw = static_cast<size_t>(j * data_->subsample_factor - chunk_start);
      if (raw >= frames.size()) throw ConfigError("encode_chunk: emit range outside chunk span");
      out.push_back(AudioEmbedding{frames[raw].features, j});
    }
    return out;
  }

 private:
  std::shared_ptr<const ToyModelData> data_;
};

// Mixing constants for the prefix-sensitive hash embedding.
constexpr double kHashMix = 0.6180339887498949;

class PrefixHashPredictor : public Predictor {
 public:
  PrefixHashPredictor(std::shared_ptr<const ToyModelData> data) : data_(std::move(data)) {}

  int embedding_dim() const override { return data_->predictor_dim; }

  PredictorStateRef initial_state() const override {
    auto node = std::make_shared<PredictorStateNode>();
    node->hidden.assign(data_->predictor_dim, 0.0);
    node->embedding = node->hidden;
    return node;
  }

  PredictorStateRef step(const PredictorStateRef& parent, int32_t label) const override {
    auto node = std::make_shared<PredictorStateNode>();
    node->prefix = parent->prefix;
    node->prefix.push_back(label);
    node->hidden.resize(data_->predictor_dim);
    for (int d = 0; d < data_->predictor_dim; ++d) {
      const double mixed =
          parent->hidden[d] * (1.0 + kHashMix * (d + 1)) + (label + 1) * kHashMix;
      node->hidden[d] = mixed - std::floor(mixed);  // keep bounded in [0, 1)
    }
    node->embedding = node->hidden;
    return node;
  }

 private:
  std::shared_ptr<const ToyModelData> data_;
};

class TableJoiner : public Joiner {
 public:
  TableJoiner(std::shared_ptr<const ToyModelData> data) : data_(std::move(data)) {
    const auto v = static_cast<size_t>(data_->vocab.size());
    int32_t blank = 0;
    for (const auto& e : data_->vocab) {
      if (e.is_blank) blank = e.id;
    }
    blank_sink_.assign(v, LogProb::never());
    blank_sink_[blank] = LogProb::one();
    for (const auto& [key, probs] : data_->table.rows) {
      std::vector<LogProb> row;
      row.reserve(v);
      for (double p : probs) row.push_back(LogProb::from_linear(p));
      log_rows_.emplace(key, std::move(row));
    }
  }

  int vocab_size() const override { return static_cast<int>(data_->vocab.size()); }

  JoinerOutput join(const AudioEmbedding& a, const TextEmbedding& t) const override {
    const LabelSeq& prefix = t.state ? t.state->prefix : LabelSeq{};
    auto it = log_rows_.find(std::make_pair(a.frame_index, prefix));
    // Unlisted (deeper or later) states sink all mass into blank, which keeps
    // every reachable sequence enumerable.
    const auto& row = it == log_rows_.end() ? blank_sink_ : it->second;
    return JoinerOutput{row};
  }

 private:
  std::shared_ptr<const ToyModelData> data_;
  std::map<std::pair<int64_t, LabelSeq>, std::vector<LogProb>> log_rows_;
  std::vector<LogProb> blank_sink_;
};

void generate_linear_weights(const ToyModelSpec& spec, LinearWeights& w,
                             std::mt19937_64& rng) {
  const int d = spec.feature_dim;
  const int e = spec.encoder_dim;
  const int p = spec.predictor_dim;
  const int v = spec.vocab_size;
  const int j = std::max(e, p);

  w.enc_left_rec = draw_matrix(rng, e, e);
  w.enc_left_in = draw_matrix(rng, e, d);
  w.enc_right_rec = draw_matrix(rng, e, e);
  w.enc_right_in = draw_matrix(rng, e, d);
  w.pred_rec = draw_matrix(rng, p, p);
  w.pred_token_emb = draw_matrix(rng, v, p);
  w.pred_h0.resize(p);
  for (auto& x : w.pred_h0) x = symmetric_draw(rng);
  w.join_proj_audio = draw_matrix(rng, j, e);
  w.join_proj_text = draw_matrix(rng, j, p);
  w.join_out = draw_matrix(rng, v, j);
  w.join_bias.resize(v);
  for (auto& x : w.join_bias) x = symmetric_draw(rng);

  row_normalize(w.enc_left_rec, 0.9);
  row_normalize(w.enc_right_rec, 0.9);
  row_normalize(w.pred_rec, 0.9);
  row_normalize(w.enc_left_in, 0.5);
  row_normalize(w.enc_right_in, 0.5);
  row_normalize(w.pred_token_emb, 0.5);
  row_normalize(w.join_proj_audio, 0.2);
  row_normalize(w.join_proj_text, 0.2);
  row_normalize(w.join_out, 2.0);
}

void enumerate_prefixes(int n_labels, int depth, LabelSeq& current,
                        std::vector<LabelSeq>& out) {
  out.push_back(current);
  if (static_cast<int>(current.size()) >= depth) return;
  for (int32_t k = 0; k < n_labels; ++k) {
    current.push_back(k);
    enumerate_prefixes(n_labels, depth, current, out);
    current.pop_back();
  }
}

void generate_table_rows(const ToyModelSpec& spec, TableWeights& t, std::mt19937_64& rng) {
  t.table_frames = spec.table_frames;
  t.prefix_depth = spec.table_prefix_depth;
  std::vector<LabelSeq> prefixes;
  LabelSeq scratch;
  enumerate_prefixes(spec.vocab_size - 1, spec.table_prefix_depth, scratch, prefixes);

  for (int64_t frame = 0; frame < spec.table_frames; ++frame) {
    for (const auto& prefix : prefixes) {
      std::vector<double> row(spec.vocab_size);
      double sum = 0.0;
      for (auto& p : row) {
        p = 1.0 + std::floor(unit_double(rng) * 19.0);  // integers in [1, 19]
        sum += p;
      }
      for (auto& p : row) p /= sum;
      t.rows.emplace(std::make_pair(frame, prefix), std::move(row));
    }
  }
}

}  // namespace

std::string to_string(ToyFamily family) {
  return family == ToyFamily::kTableDriven ? "table_driven" : "linear_recurrent";
}

ToyFamily toy_family_from_string(const std::string& name) {
  if (name == "table_driven") return ToyFamily::kTableDriven;
  if (name == "linear_recurrent") return ToyFamily::kLinearRecurrent;
  throw ConfigError("unknown toy model family: " + name);
}

void ToyModelData::validate() const {
  if (vocab.size() < 2) throw IoError("vocab: need at least one label and the blank");
  if (feature_dim < 1 || encoder_dim < 1 || predictor_dim < 1) {
    throw IoError("model dimensions must be >= 1");
  }
  if (subsample_factor < 1) throw IoError("subsample_factor must be >= 1");
  Vocabulary check(vocab);  // throws on blank/id violations
  if (family == ToyFamily::kTableDriven) {
    size_t i = 0;
    for (const auto& [key, row] : table.rows) {
      if (static_cast<int>(row.size()) != static_cast<int>(vocab.size())) {
        throw IoError("joiner.rows[" + std::to_string(i) + "].probs: expected " +
                      std::to_string(vocab.size()) + " entries, got " +
                      std::to_string(row.size()));
      }
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) throw IoError("joiner.rows[" + std::to_string(i) + "].probs: negative");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw IoError("joiner.rows[" + std::to_string(i) + "].probs: row sums to " +
                      std::to_string(sum) + ", expected 1");
      }
      for (int32_t label : key.second) {
        if (label < 0 || label >= static_cast<int32_t>(vocab.size()) ||
            label == check.blank_id()) {
          throw IoError("joiner.rows[" + std::to_string(i) + "].labels: invalid label id");
        }
      }
      ++i;
    }
  }
}

ToyModelData generate_toy_data(const ToyModelSpec& spec) {
  if (spec.vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (spec.feature_dim < 1 || spec.encoder_dim < 1 || spec.predictor_dim < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
  ToyModelData data;
  data.family = spec.family;
  data.feature_dim = spec.feature_dim;
  data.encoder_dim =
      spec.family == ToyFamily::kTableDriven ? spec.feature_dim : spec.encoder_dim;
  data.predictor_dim = spec.predictor_dim;
  data.subsample_factor = spec.subsample_factor;
  data.vocab = make_toy_vocab(spec.vocab_size);

  std::mt19937_64 rng(spec.seed);
  if (spec.family == ToyFamily::kLinearRecurrent) {
    generate_linear_weights(spec, data.linear, rng);
  } else {
    generate_table_rows(spec, data.table, rng);
  }
  return data;
}

ToyModelData generate_asr_shaped_data(int vocab_size, uint64_t seed) {
  if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  const int v = vocab_size;
  const int width = v;  // one feature/embedding channel per output unit

  ToyModelData d;
  d.family = ToyFamily::kLinearRecurrent;
  d.feature_dim = width;
  d.encoder_dim = width;
  d.predictor_dim = width;
  d.subsample_factor = 1;
  d.vocab = make_toy_vocab(v);

  std::mt19937_64 rng(seed);
  auto noise = [&] { return symmetric_draw(rng) * 0.1; };
  auto eye = [&](int n, double gain) {
    Matrix m{n, n, std::vector<double>(static_cast<size_t>(n) * n)};
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) m.at(r, c) = (r == c ? gain : 0.0) + noise();
    }
    return m;
  };

  auto& w = d.linear;
  // Channel-routed encoder: each output unit listens to one feature channel,
  // with mild temporal smoothing from both passes.
  w.enc_left_rec = eye(width, 0.1);
  w.enc_left_in = eye(width, 0.5);
  w.enc_right_rec = eye(width, 0.1);
  w.enc_right_in = eye(width, 0.25);
  // Emitting a token inhibits its own channel for a few frames.
  w.pred_rec = eye(width, 0.7);
  w.pred_token_emb = Matrix{v, width, std::vector<double>(static_cast<size_t>(v) * width)};
  for (int k = 0; k < v; ++k) {
    for (int c = 0; c < width; ++c) w.pred_token_emb.at(k, c) = (k == c ? -4.0 : 0.0) + noise();
  }
  w.pred_h0.assign(width, 0.0);
  // Sharp emissions: a hot channel towers over the blank prior; total channel
  // heat drains the blank slightly so event frames favor the token decisively.
  w.join_proj_audio = eye(width, 3.5);
  w.join_proj_text = eye(width, 1.0);
  w.join_out = Matrix{v, width, std::vector<double>(static_cast<size_t>(v) * width)};
  for (int k = 0; k + 1 < v; ++k) {
    for (int c = 0; c < width; ++c) w.join_out.at(k, c) = (k == c ? 4.0 : 0.0) + noise();
  }
  for (int c = 0; c < width; ++c) w.join_out.at(v - 1, c) = -0.05 + noise();
  w.join_bias.assign(v, 0.0);
  w.join_bias[v - 1] = 12.0;
  return d;
}

ToyModelData generate_zero_linear_data(const ToyModelSpec& spec) {
  ToyModelData data = generate_toy_data(spec);
  auto zero = [](Matrix& m) { std::fill(m.data.begin(), m.data.end(), 0.0); };
  zero(data.linear.enc_left_rec);
  zero(data.linear.enc_left_in);
  zero(data.linear.enc_right_rec);
  zero(data.linear.enc_right_in);
  zero(data.linear.pred_rec);
  zero(data.linear.pred_token_emb);
  zero(data.linear.join_proj_audio);
  zero(data.linear.join_proj_text);
  zero(data.linear.join_out);
  std::fill(data.linear.pred_h0.begin(), data.linear.pred_h0.end(), 0.0);
  std::fill(data.linear.join_bias.begin(), data.linear.join_bias.end(), 0.0);
  return data;
}

TransducerModel instantiate_model(std::shared_ptr<const ToyModelData> data) {
  data->validate();
  TransducerModel model;
  model.vocab = Vocabulary(data->vocab);
  if (data->family == ToyFamily::kLinearRecurrent) {
    model.encoder = std::make_shared<LinearEncoder>(data);
    model.predictor = std::make_shared<LinearPredictor>(data);
    model.joiner = std::make_shared<SumReluSoftmaxJoiner>(data);
  } else {
    model.encoder = std::make_shared<PassthroughEncoder>(data);
    model.predictor = std::make_shared<PrefixHashPredictor>(data);
    model.joiner = std::make_shared<TableJoiner>(data);
  }
  return model;
}

TransducerModel build_toy_model(const ToyModelSpec& spec) {
  return instantiate_model(std::make_shared<const ToyModelData>(generate_toy_data(spec)));
}

std::vector<AudioFrame> synth_features(int64_t n_frames, int feature_dim,
                                       int64_t frame_shift_ms, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<AudioFrame> frames;
  frames.reserve(static_cast<size_t>(n_frames));
  // Speech-like structure: a calm background with short single-channel
  // bursts, roughly one event per dozen frames.
  int64_t burst_left = 0;
  int burst_channel = 0;
  double burst_height = 0.0;
  for (int64_t i = 0; i < n_frames; ++i) {
    AudioFrame f;
    f.timestamp_ms = i * frame_shift_ms;
    f.features.resize(feature_dim);
    for (auto& v : f.features) v = unit_double(rng) * 0.8 - 0.4;
    if (burst_left == 0 && rng() % 12 == 0) {
      burst_left = 2 + static_cast<int64_t>(rng() % 2);
      burst_channel = static_cast<int>(rng() % feature_dim);
      burst_height = 1.8 + unit_double(rng) * 0.4;
    }
    if (burst_left > 0) {
      f.features[burst_channel] = burst_height;
      --burst_left;
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace rnnt
