#include "rnnt/hypothesis_set.h"

#include <algorithm>
#include <limits>

#include "rnnt/log_prob.h"

namespace rnnt {

void HypothesisSet::insert(const LabelSeq& labels, double score, int frame_symbols) {
  auto [it, inserted] = entries_.try_emplace(labels, Entry{score, frame_symbols});
  if (!inserted) {
    it->second.score = logsumexp(it->second.score, score);
    it->second.frame_symbols = std::min(it->second.frame_symbols, frame_symbols);
  }
}

const HypothesisSet::Entry* HypothesisSet::find(const LabelSeq& labels) const {
  auto it = entries_.find(labels);
  return it == entries_.end() ? nullptr : &it->second;
}

double HypothesisSet::max_score() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [labels, entry] : entries_) best = std::max(best, entry.score);
  return best;
}

int HypothesisSet::count_more_probable_than(double threshold) const {
  int n = 0;
  for (const auto& [labels, entry] : entries_) {
    if (entry.score > threshold) ++n;
  }
  return n;
}

const HypothesisSet::Map::value_type* HypothesisSet::best() const {
  const Map::value_type* best = nullptr;
  for (const auto& kv : entries_) {
    if (best == nullptr ||
        score_order_before(kv.second.score, kv.first, best->second.score, best->first)) {
      best = &kv;
    }
  }
  return best;
}

void HypothesisSet::truncate_to_top(int w) {
  if (static_cast<int>(entries_.size()) <= w) return;
  std::vector<const Map::value_type*> order;
  order.reserve(entries_.size());
  for (const auto& kv : entries_) order.push_back(&kv);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return score_order_before(a->second.score, a->first, b->second.score, b->first);
  });
  Map kept;
  for (int i = 0; i < w; ++i) {
    kept.emplace((*order[i]).first, (*order[i]).second);
  }
  entries_ = std::move(kept);
}

std::vector<Hypothesis> HypothesisSet::to_hypotheses() const {
  std::vector<Hypothesis> out;
  out.reserve(entries_.size());
  for (const auto& [labels, entry] : entries_) {
    out.push_back(Hypothesis{labels, LogProb(entry.score), nullptr});
  }
  return out;
}

}  // namespace rnnt
