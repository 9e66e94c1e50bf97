#include "rnnt/types.h"

#include <algorithm>

namespace rnnt {

Vocabulary::Vocabulary(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id != static_cast<int32_t>(i)) {
      throw IoError("vocab[" + std::to_string(i) + "].id: ids must be dense in [0, V), got " +
                    std::to_string(entries_[i].id));
    }
    if (entries_[i].is_blank) {
      if (blank_id_ >= 0) {
        throw IoError("vocab[" + std::to_string(i) +
                      "].is_blank: vocabulary already has a blank token at id " +
                      std::to_string(blank_id_));
      }
      blank_id_ = entries_[i].id;
    }
  }
  if (!entries_.empty() && blank_id_ < 0) {
    throw IoError("vocab: no token has is_blank = true");
  }
}

std::string Vocabulary::detokenize(const LabelSeq& labels) const {
  std::string out;
  for (int32_t id : labels) out += entries_[id].piece;
  return out;
}

double normalized_score(const LabelSeq& labels, double log_score) {
  const auto denom = std::max<size_t>(1, labels.size());
  return log_score / static_cast<double>(denom);
}

double normalized_score(const Hypothesis& h) {
  return normalized_score(h.labels, h.score.log());
}

bool label_seq_tie_before(const LabelSeq& a, const LabelSeq& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool score_order_before(double score_a, const LabelSeq& a, double score_b,
                        const LabelSeq& b) {
  if (score_a != score_b) return score_a > score_b;
  return label_seq_tie_before(a, b);
}

void BeamConfig::validate() const {
  if (beam_width < 1) throw ConfigError("beam_width must be >= 1");
  if (std::isnan(expand_beam) || expand_beam < 0.0) {
    throw ConfigError("expand_beam must be a non-negative real or +inf");
  }
  if (std::isnan(state_beam) || state_beam < 0.0) {
    throw ConfigError("state_beam must be a non-negative real or +inf");
  }
  if (max_symbols_per_frame < 1) {
    throw ConfigError("max_symbols_per_frame must be >= 1");
  }
}

}  // namespace rnnt
