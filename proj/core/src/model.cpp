#include "rnnt/model.h"

namespace rnnt {

const PredictorStateRef& PredictorCache::get(const LabelSeq& prefix) {
  auto it = cache_.find(prefix);
  if (it != cache_.end()) return it->second;

  if (prefix.empty()) {
    auto [ins, ok] = cache_.emplace(prefix, predictor_.initial_state());
    return ins->second;
  }
  LabelSeq parent(prefix.begin(), prefix.end() - 1);
  const PredictorStateRef& parent_state = get(parent);
  auto [ins, ok] = cache_.emplace(prefix, predictor_.step(parent_state, prefix.back()));
  return ins->second;
}

TextEmbedding PredictorCache::embedding(const LabelSeq& prefix) {
  const PredictorStateRef& node = get(prefix);
  return TextEmbedding{node->embedding, node};
}

const JoinerOutput& JoinerCache::row(const AudioEmbedding& a, const LabelSeq& prefix) {
  auto key = std::make_pair(a.frame_index, prefix);
  auto it = rows_.find(key);
  if (it != rows_.end()) return it->second;

  TextEmbedding t = predictor_cache_.embedding(prefix);
  ++joiner_calls_;
  auto [ins, ok] = rows_.emplace(std::move(key), model_.joiner->join(a, t));
  return ins->second;
}

}  // namespace rnnt
