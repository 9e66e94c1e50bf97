#include "rnnt/beam_search.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rnnt/log_prob.h"

namespace rnnt {
namespace {

bool is_proper_prefix(const LabelSeq& prefix, const LabelSeq& full) {
  if (prefix.size() >= full.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), full.begin());
}

std::vector<DecodeTrace::Scored> snapshot(const HypothesisSet& set) {
  std::vector<DecodeTrace::Scored> out;
  out.reserve(set.size());
  for (const auto& [labels, entry] : set) out.push_back({labels, entry.score});
  return out;
}

}  // namespace

DecodeSession::DecodeSession(const TransducerModel& model, const BeamConfig& cfg,
                             DecodeTrace* trace)
    : model_(model),
      cfg_(cfg),
      trace_(trace),
      predictor_cache_(*model.predictor),
      joiner_cache_(model, predictor_cache_) {
  cfg_.validate();
  live_.insert(LabelSeq{}, 0.0);  // Pr(empty) = 1
}

double DecodeSession::extension_log_prob(const AudioEmbedding& a, const LabelSeq& prefix,
                                         const LabelSeq& full) {
  // Product of non-blank probabilities along the extension path at this
  // frame: prod_i Pr(k_i | prefix + k_1..k_{i-1}, t).
  double total = 0.0;
  LabelSeq partial = prefix;
  for (size_t i = prefix.size(); i < full.size(); ++i) {
    const JoinerOutput& row = joiner_cache_.row(a, partial);
    total += row.log_probs[full[i]].log();
    partial.push_back(full[i]);
  }
  return total;
}

void DecodeSession::step(const AudioEmbedding& embedding) {
  if (embedding.frame_index != next_frame_) {
    throw ProtocolError("embedding for frame " + std::to_string(embedding.frame_index) +
                        " fed out of order; expected frame " + std::to_string(next_frame_));
  }
  ++next_frame_;
  ++stats_.frames;

  const int32_t blank = model_.blank_id();
  const int32_t vocab_size = model_.vocab_size();

  // A <- B, B <- {}. Per-frame symbol counts restart.
  HypothesisSet a_set = std::move(live_);
  live_.clear();
  for (auto& [labels, entry] : a_set) entry.frame_symbols = 0;

  // Prefix merge: add the mass of every proper prefix in A extended to the
  // longer sequence at this frame. Contributions use the scores A held on
  // entry to the frame, in deterministic (lexicographic = shortest-first for
  // prefixes) order.
  std::vector<std::pair<LabelSeq, double>> entry_scores;
  entry_scores.reserve(a_set.size());
  for (const auto& [labels, entry] : a_set) entry_scores.emplace_back(labels, entry.score);

  for (auto& [labels, entry] : a_set) {
    for (const auto& [candidate, original_score] : entry_scores) {
      if (!is_proper_prefix(candidate, labels)) continue;
      const double extended = original_score + extension_log_prob(embedding, candidate, labels);
      entry.score = logsumexp(entry.score, extended);
    }
  }

  // Sequences resident in A when the frame began already received their
  // parents' extension flow in the merge above; expanding into them again
  // would count the same alignment paths twice and can push scores past
  // log 1. Such expansions are skipped below.
  const auto was_resident = [&entry_scores](const LabelSeq& labels) {
    auto it = std::lower_bound(
        entry_scores.begin(), entry_scores.end(), labels,
        [](const auto& kv, const LabelSeq& key) { return kv.first < key; });
    return it != entry_scores.end() && it->first == labels;
  };

  DecodeTrace::FrameRecord* frame_trace = nullptr;
  if (trace_ != nullptr) {
    trace_->frames.push_back({});
    frame_trace = &trace_->frames.back();
    frame_trace->frame = embedding.frame_index;
    frame_trace->a_after_merge = snapshot(a_set);
  }

  // Per-frame pop budget. Near-uniform joiner outputs can keep the best of A
  // neck-and-neck with B through whole expansion chains; the budget bounds
  // the decode to T * max_symbols_per_frame * W loop iterations overall.
  const int64_t pop_budget =
      static_cast<int64_t>(cfg_.max_symbols_per_frame) * cfg_.beam_width;
  int64_t pops_this_frame = 0;

  while (!a_set.empty() && pops_this_frame < pop_budget) {
    const auto* best_a = a_set.best();
    const double a_best = best_a->second.score;

    // Beam criterion: W elements of B strictly more probable than the best
    // still expandable hypothesis.
    if (live_.count_more_probable_than(a_best) >= cfg_.beam_width) break;

    // State-beam early exit; can only fire once B holds a blank transition.
    if (!live_.empty() && std::isfinite(cfg_.state_beam)) {
      const double b_best = live_.max_score();
      if (b_best >= cfg_.state_beam + a_best) {
        ++stats_.state_beam_breaks;
        if (frame_trace != nullptr) frame_trace->state_beam_break = true;
        break;
      }
    }

    const LabelSeq popped = best_a->first;
    const HypothesisSet::Entry popped_entry = best_a->second;
    a_set.erase(popped);
    ++stats_.loop_iterations;
    ++pops_this_frame;

    const JoinerOutput& row = joiner_cache_.row(embedding, popped);

    // Blank transition: the popped hypothesis moves to the next frame.
    // Zero-probability transitions carry no mass and are not hypotheses; a
    // real softmax never produces them, only table rows with exact zeros.
    const double blank_score = popped_entry.score + row.log_probs[blank].log();
    if (std::isfinite(blank_score)) live_.insert(popped, blank_score);

    DecodeTrace::PopRecord* pop_trace = nullptr;
    if (frame_trace != nullptr) {
      frame_trace->pops.push_back({popped, popped_entry.score, blank_score, {}, {}});
      pop_trace = &frame_trace->pops.back();
    }

    if (popped_entry.frame_symbols >= cfg_.max_symbols_per_frame) continue;

    double best_non_blank = -std::numeric_limits<double>::infinity();
    for (int32_t k = 0; k < vocab_size; ++k) {
      if (k == blank) continue;
      best_non_blank = std::max(best_non_blank, row.log_probs[k].log());
    }

    for (int32_t k = 0; k < vocab_size; ++k) {
      if (k == blank) continue;
      const double token_log_prob = row.log_probs[k].log();
      if (std::isinf(token_log_prob)) continue;  // impossible path, not pruning
      if (token_log_prob >= best_non_blank - cfg_.expand_beam) {
        LabelSeq child = popped;
        child.push_back(k);
        if (was_resident(child)) continue;  // flow already counted by the merge
        const double child_score = popped_entry.score + token_log_prob;
        a_set.insert(child, child_score, popped_entry.frame_symbols + 1);
        if (pop_trace != nullptr) pop_trace->admitted.push_back({std::move(child), child_score});
      } else {
        ++stats_.expansions_pruned;
        if (pop_trace != nullptr) pop_trace->pruned_tokens.push_back(k);
      }
    }
  }

  live_.truncate_to_top(cfg_.beam_width);
  if (frame_trace != nullptr) frame_trace->b_final = snapshot(live_);
}

void DecodeSession::feed(const AudioEmbedding& embedding) {
  if (finalized_) throw ProtocolError("feed after finalize");
  step(embedding);
}

void DecodeSession::feed(std::span<const AudioEmbedding> embeddings) {
  for (const auto& e : embeddings) feed(e);
}

DecodeResult DecodeSession::result_from_live_set() {
  DecodeResult result;
  result.stats = stats_;
  result.stats.joiner_calls = joiner_cache_.joiner_calls();

  if (live_.empty()) {
    // Reachable only when every path hit a zero-probability blank.
    result.best = Hypothesis{{}, LogProb::never(), nullptr};
    return result;
  }

  std::vector<Hypothesis> ranked = live_.to_hypotheses();
  std::sort(ranked.begin(), ranked.end(), [](const Hypothesis& a, const Hypothesis& b) {
    const double na = normalized_score(a);
    const double nb = normalized_score(b);
    if (na != nb) return na > nb;
    return label_seq_tie_before(a.labels, b.labels);
  });
  if (static_cast<int>(ranked.size()) > cfg_.beam_width) {
    ranked.resize(cfg_.beam_width);
  }
  for (auto& h : ranked) h.predictor_state = predictor_cache_.get(h.labels);
  result.n_best = std::move(ranked);
  result.best = result.n_best.front();
  return result;
}

DecodeResult DecodeSession::partial_result() { return result_from_live_set(); }

DecodeResult DecodeSession::finalize() {
  if (finalized_) throw ProtocolError("finalize called twice");
  finalized_ = true;
  return result_from_live_set();
}

DecodeResult decode_pruned(std::span<const AudioEmbedding> embeddings,
                           const TransducerModel& model, const BeamConfig& cfg,
                           DecodeTrace* trace) {
  DecodeSession session(model, cfg, trace);
  session.feed(embeddings);
  return session.finalize();
}

DecodeResult decode_reference(std::span<const AudioEmbedding> embeddings,
                              const TransducerModel& model, const BeamConfig& cfg) {
  BeamConfig unpruned = cfg;
  unpruned.expand_beam = std::numeric_limits<double>::infinity();
  unpruned.state_beam = std::numeric_limits<double>::infinity();
  return decode_pruned(embeddings, model, unpruned);
}

}  // namespace rnnt
