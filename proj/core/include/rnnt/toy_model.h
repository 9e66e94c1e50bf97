#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rnnt/model.h"
#include "rnnt/types.h"

namespace rnnt {

enum class ToyFamily { kTableDriven, kLinearRecurrent };

std::string to_string(ToyFamily family);
ToyFamily toy_family_from_string(const std::string& name);

struct ToyModelSpec {
  int feature_dim = 2;     // D
  int encoder_dim = 4;     // E
  int predictor_dim = 4;   // P
  int vocab_size = 3;      // V, including blank
  uint64_t seed = 0;
  ToyFamily family = ToyFamily::kLinearRecurrent;
  int subsample_factor = 1;
  // table family: rows are materialized for every frame in [0, table_frames)
  // and every non-blank prefix up to table_prefix_depth; anything deeper falls
  // back to the blank-sink row, which bounds reachable sequence lengths.
  int64_t table_frames = 4;
  int table_prefix_depth = 1;
};

// Row-major matrix small enough for straight loops.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
};

struct LinearWeights {
  // Encoder: chunk-local two-pass recurrence, outputs left + right states.
  Matrix enc_left_rec;    // E x E
  Matrix enc_left_in;     // E x D
  Matrix enc_right_rec;   // E x E
  Matrix enc_right_in;    // E x D
  // Predictor: h' = rec * h + token_emb[label].
  Matrix pred_rec;        // P x P
  Matrix pred_token_emb;  // V x P
  std::vector<double> pred_h0;  // P
  // Joiner: projections, sum, ReLU, output logits, softmax.
  Matrix join_proj_audio;  // J x E
  Matrix join_proj_text;   // J x P
  Matrix join_out;         // V x J
  std::vector<double> join_bias;  // V
};

struct TableWeights {
  int64_t table_frames = 0;
  int prefix_depth = 0;
  // Linear probabilities as authored; each row sums to 1 over the vocabulary.
  std::map<std::pair<int64_t, LabelSeq>, std::vector<double>> rows;
};

// Everything a toy model owns, in serializable form.
struct ToyModelData {
  ToyFamily family = ToyFamily::kLinearRecurrent;
  int feature_dim = 0;
  int encoder_dim = 0;
  int predictor_dim = 0;
  int subsample_factor = 1;
  std::vector<Vocabulary::Entry> vocab;
  LinearWeights linear;
  TableWeights table;

  void validate() const;
};

// Deterministic in spec.seed. linear_recurrent weights are drawn uniform in
// [-0.5, 0.5] and then each matrix is row-sum normalized to a fixed
// per-matrix bound (recurrences 0.9, input maps 0.5, joiner projections 0.2,
// output 2.0) so long recurrences stay bounded and joiner outputs are peaked
// enough to behave like a trained model under pruning.
ToyModelData generate_toy_data(const ToyModelSpec& spec);

// As generate_toy_data with every weight zeroed; the joiner is then uniform.
ToyModelData generate_zero_linear_data(const ToyModelSpec& spec);

// A designed linear_recurrent instance with trained-ASR score geometry:
// channel-routed encoder, self-inhibiting token history, a strong blank prior
// and decisive token emissions on feature bursts. Pruning behaves on it the
// way it does on a real model. Deterministic in the seed (small weight noise).
ToyModelData generate_asr_shaped_data(int vocab_size, uint64_t seed);

TransducerModel instantiate_model(std::shared_ptr<const ToyModelData> data);
TransducerModel build_toy_model(const ToyModelSpec& spec);

// Deterministic synthetic feature stream: values uniform in [-1, 1).
std::vector<AudioFrame> synth_features(int64_t n_frames, int feature_dim,
                                       int64_t frame_shift_ms, uint64_t seed);

}  // namespace rnnt
