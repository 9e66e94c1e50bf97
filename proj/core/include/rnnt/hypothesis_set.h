#pragma once

#include <map>
#include <optional>
#include <vector>

#include "rnnt/types.h"

namespace rnnt {

// Hypotheses keyed by label sequence. Inserting an existing sequence merges
// scores via logsumexp; no two entries ever share a label sequence.
class HypothesisSet {
 public:
  struct Entry {
    double score;
    // Non-blank emissions accumulated at the current frame; only meaningful
    // for the search's live set A, always 0 in B.
    int frame_symbols;
  };

  using Map = std::map<LabelSeq, Entry>;

  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  // Merges by logsumexp; a merged entry keeps the smaller frame_symbols so the
  // per-frame cap never tightens because two expansion paths met.
  void insert(const LabelSeq& labels, double score, int frame_symbols = 0);

  const Entry* find(const LabelSeq& labels) const;
  void erase(const LabelSeq& labels) { entries_.erase(labels); }

  // -inf over an empty set.
  double max_score() const;

  // Entries with score strictly greater than `threshold`.
  int count_more_probable_than(double threshold) const;

  // Best entry under (score desc, shorter labels, lexicographic ids).
  const Map::value_type* best() const;

  // Keeps the top `w` under the same order.
  void truncate_to_top(int w);

  // Deterministic (lexicographic by label sequence).
  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }
  Map::iterator begin() { return entries_.begin(); }
  Map::iterator end() { return entries_.end(); }

  std::vector<Hypothesis> to_hypotheses() const;

 private:
  Map entries_;
};

}  // namespace rnnt
