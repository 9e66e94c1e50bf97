#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "rnnt/model.h"
#include "rnnt/types.h"

namespace rnnt {

// Caps on exhaustive enumeration. The number of distinct alignment paths is
// checked before running; the oracle refuses instances it cannot enumerate.
struct OracleLimit {
  int64_t max_frames = 6;
  int32_t max_vocab = 4;
  int max_total_symbols = 3;
  int64_t max_sequences = 1 << 20;
  int64_t max_paths = 10'000'000;
};

// Label sequence -> exact log posterior. Sequences with zero mass are absent.
using PosteriorMap = std::map<LabelSeq, double>;

// Number of distinct alignment paths (interleavings of labels and blanks)
// for T frames, n non-blank labels and a total-symbol cap. Saturates at
// numeric limits rather than overflowing.
double count_alignment_paths(int64_t frames, int n_labels, int max_symbols);

// Enumerates every alignment of every label sequence up to the symbol cap,
// multiplying joiner probabilities along each path and log-sum-exp merging
// per sequence. `residual_log` (optional) receives the mass of branches cut
// by the cap; enumerated mass plus residual is 1 for normalized models.
PosteriorMap exhaustive_sequence_posteriors(std::span<const AudioEmbedding> embeddings,
                                            const TransducerModel& model,
                                            const OracleLimit& limit,
                                            double* residual_log = nullptr);

// Independent route to the same posteriors: a forward DP over the (t, u)
// lattice, run once per candidate sequence. Guards golden fixtures against a
// single-oracle bug.
PosteriorMap lattice_forward_posteriors(std::span<const AudioEmbedding> embeddings,
                                        const TransducerModel& model,
                                        const OracleLimit& limit);

// Argmax of normalized score over the exhaustive posteriors, with the
// deterministic tie-break.
Hypothesis oracle_best(std::span<const AudioEmbedding> embeddings,
                       const TransducerModel& model, const OracleLimit& limit);

}  // namespace rnnt
