#include "rnnt/oracle.h"

#include <cmath>
#include <limits>
#include <string>

#include "rnnt/log_prob.h"

namespace rnnt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_limits(std::span<const AudioEmbedding> embeddings, const TransducerModel& model,
                  const OracleLimit& limit) {
  const auto frames = static_cast<int64_t>(embeddings.size());
  if (frames > limit.max_frames) {
    throw ConfigError("oracle: " + std::to_string(frames) + " frames exceed limit " +
                      std::to_string(limit.max_frames));
  }
  if (model.vocab_size() > limit.max_vocab) {
    throw ConfigError("oracle: vocabulary of " + std::to_string(model.vocab_size()) +
                      " exceeds limit " + std::to_string(limit.max_vocab));
  }
  const int n_labels = model.vocab_size() - 1;
  const double paths = count_alignment_paths(frames, n_labels, limit.max_total_symbols);
  if (paths > static_cast<double>(limit.max_paths)) {
    throw ConfigError("oracle: " + std::to_string(paths) + " alignment paths exceed limit " +
                      std::to_string(limit.max_paths));
  }
  double sequences = 0.0;
  double level = 1.0;
  for (int m = 0; m <= limit.max_total_symbols; ++m) {
    sequences += level;
    level *= n_labels;
  }
  if (sequences > static_cast<double>(limit.max_sequences)) {
    throw ConfigError("oracle: " + std::to_string(sequences) + " sequences exceed limit " +
                      std::to_string(limit.max_sequences));
  }
}

struct Enumerator {
  std::span<const AudioEmbedding> embeddings;
  const TransducerModel& model;
  int max_symbols;
  PredictorCache predictor_cache;
  JoinerCache joiner_cache;
  PosteriorMap totals;
  double residual = kNegInf;

  Enumerator(std::span<const AudioEmbedding> embs, const TransducerModel& m, int cap)
      : embeddings(embs),
        model(m),
        max_symbols(cap),
        predictor_cache(*m.predictor),
        joiner_cache(m, predictor_cache) {}

  void merge(const LabelSeq& labels, double log_prob) {
    auto [it, inserted] = totals.emplace(labels, log_prob);
    if (!inserted) it->second = logsumexp(it->second, log_prob);
  }

  // At (frame t, emitted prefix): emit blank to advance (recording the full
  // sequence when t was the last frame) or emit a label and stay at t.
  void walk(size_t t, LabelSeq& prefix, double log_prob) {
    const JoinerOutput& row = joiner_cache.row(embeddings[t], prefix);
    const double blank_total = log_prob + row.log_probs[model.blank_id()].log();
    if (t + 1 == embeddings.size()) {
      merge(prefix, blank_total);
    } else {
      walk(t + 1, prefix, blank_total);
    }
    if (static_cast<int>(prefix.size()) < max_symbols) {
      for (int32_t k = 0; k < model.vocab_size(); ++k) {
        if (k == model.blank_id()) continue;
        prefix.push_back(k);
        walk(t, prefix, log_prob + row.log_probs[k].log());
        prefix.pop_back();
      }
    } else {
      // Branches cut by the cap; their whole subtree mass, for conservation.
      for (int32_t k = 0; k < model.vocab_size(); ++k) {
        if (k == model.blank_id()) continue;
        residual = logsumexp(residual, log_prob + row.log_probs[k].log());
      }
    }
  }
};

}  // namespace

double count_alignment_paths(int64_t frames, int n_labels, int max_symbols) {
  if (frames == 0) return 1.0;
  double total = 0.0;
  // sum over m of C(frames - 1 + m, m) * n_labels^m
  double binom = 1.0;   // C(frames - 1, 0)
  double labels_pow = 1.0;
  for (int m = 0; m <= max_symbols; ++m) {
    total += binom * labels_pow;
    if (total > 1e18) return 1e18;  // saturate
    binom = binom * static_cast<double>(frames + m) / static_cast<double>(m + 1);
    labels_pow *= n_labels;
  }
  return total;
}

PosteriorMap exhaustive_sequence_posteriors(std::span<const AudioEmbedding> embeddings,
                                            const TransducerModel& model,
                                            const OracleLimit& limit, double* residual_log) {
  check_limits(embeddings, model, limit);
  if (embeddings.empty()) {
    if (residual_log != nullptr) *residual_log = kNegInf;
    return PosteriorMap{{LabelSeq{}, 0.0}};
  }
  Enumerator e(embeddings, model, limit.max_total_symbols);
  LabelSeq prefix;
  e.walk(0, prefix, 0.0);
  if (residual_log != nullptr) *residual_log = e.residual;

  PosteriorMap out;
  for (const auto& [labels, log_prob] : e.totals) {
    if (std::isfinite(log_prob)) out.emplace(labels, log_prob);
  }
  return out;
}

PosteriorMap lattice_forward_posteriors(std::span<const AudioEmbedding> embeddings,
                                        const TransducerModel& model,
                                        const OracleLimit& limit) {
  check_limits(embeddings, model, limit);
  const auto frames = static_cast<size_t>(embeddings.size());
  if (frames == 0) return PosteriorMap{{LabelSeq{}, 0.0}};

  PredictorCache predictor_cache(*model.predictor);
  JoinerCache joiner_cache(model, predictor_cache);

  // All candidate sequences up to the cap, level by level in token order.
  std::vector<LabelSeq> candidates;
  {
    candidates.push_back(LabelSeq{});
    std::vector<LabelSeq> frontier{LabelSeq{}};
    for (int depth = 0; depth < limit.max_total_symbols; ++depth) {
      std::vector<LabelSeq> next;
      for (const auto& seq : frontier) {
        for (int32_t k = 0; k < model.vocab_size(); ++k) {
          if (k == model.blank_id()) continue;
          LabelSeq child = seq;
          child.push_back(k);
          candidates.push_back(child);
          next.push_back(std::move(child));
        }
      }
      frontier = std::move(next);
    }
  }

  PosteriorMap out;
  for (const auto& seq : candidates) {
    const size_t m = seq.size();
    // alpha[t][u]: mass of paths that consumed frames [0, t) and emitted
    // seq[0, u). Label moves stay within a frame, blank moves advance it.
    std::vector<std::vector<double>> alpha(frames + 1,
                                           std::vector<double>(m + 1, kNegInf));
    alpha[0][0] = 0.0;
    for (size_t t = 0; t < frames; ++t) {
      for (size_t u = 0; u < m; ++u) {
        if (alpha[t][u] == kNegInf) continue;
        LabelSeq prefix(seq.begin(), seq.begin() + u);
        const JoinerOutput& row = joiner_cache.row(embeddings[t], prefix);
        alpha[t][u + 1] =
            logsumexp(alpha[t][u + 1], alpha[t][u] + row.log_probs[seq[u]].log());
      }
      for (size_t u = 0; u <= m; ++u) {
        if (alpha[t][u] == kNegInf) continue;
        LabelSeq prefix(seq.begin(), seq.begin() + u);
        const JoinerOutput& row = joiner_cache.row(embeddings[t], prefix);
        alpha[t + 1][u] =
            logsumexp(alpha[t + 1][u], alpha[t][u] + row.log_probs[model.blank_id()].log());
      }
    }
    if (std::isfinite(alpha[frames][m])) out.emplace(seq, alpha[frames][m]);
  }
  return out;
}

Hypothesis oracle_best(std::span<const AudioEmbedding> embeddings,
                       const TransducerModel& model, const OracleLimit& limit) {
  const PosteriorMap posteriors = exhaustive_sequence_posteriors(embeddings, model, limit);
  const LabelSeq* best_labels = nullptr;
  double best_log = kNegInf;
  double best_norm = kNegInf;
  for (const auto& [labels, log_prob] : posteriors) {
    const double norm = normalized_score(labels, log_prob);
    if (best_labels == nullptr || norm > best_norm ||
        (norm == best_norm && label_seq_tie_before(labels, *best_labels))) {
      best_labels = &labels;
      best_log = log_prob;
      best_norm = norm;
    }
  }
  if (best_labels == nullptr) return Hypothesis{{}, LogProb::never(), nullptr};
  return Hypothesis{*best_labels, LogProb(best_log), nullptr};
}

}  // namespace rnnt
