#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rnnt/log_prob.h"

namespace rnnt {

// Invalid configuration (bad beams, bad chunk geometry, malformed flags).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing or unreadable files, schema violations in model/feature files.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Contract violations on streaming interfaces (e.g. out-of-order frames).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

using LabelSeq = std::vector<int32_t>;

struct Token {
  int32_t id = 0;
  bool is_blank = false;
};

// Output unit set. Exactly one token is the blank; ids are dense in [0, V).
class Vocabulary {
 public:
  struct Entry {
    int32_t id;
    std::string piece;
    bool is_blank;
  };

  Vocabulary() = default;
  explicit Vocabulary(std::vector<Entry> entries);

  int32_t size() const { return static_cast<int32_t>(entries_.size()); }
  int32_t blank_id() const { return blank_id_; }
  Token token(int32_t id) const { return Token{id, id == blank_id_}; }
  const std::string& piece(int32_t id) const { return entries_[id].piece; }
  const std::vector<Entry>& entries() const { return entries_; }

  // Pieces concatenated in order; toy vocabs use single characters.
  std::string detokenize(const LabelSeq& labels) const;

 private:
  std::vector<Entry> entries_;
  int32_t blank_id_ = -1;
};

struct PredictorStateNode;
using PredictorStateRef = std::shared_ptr<const PredictorStateNode>;

// A label-sequence prefix with its accumulated log-probability. labels never
// contains the blank token.
struct Hypothesis {
  LabelSeq labels;
  LogProb score = LogProb::one();
  PredictorStateRef predictor_state;
};

// Ranking score from the search's return criterion: score / max(1, |labels|).
// The clamp keeps the empty transcript eligible.
double normalized_score(const Hypothesis& h);
double normalized_score(const LabelSeq& labels, double log_score);

// Deterministic tie order wherever a "most probable" element is selected:
// shorter label sequence first, then lexicographic token-id order.
// Returns true when a precedes b.
bool label_seq_tie_before(const LabelSeq& a, const LabelSeq& b);

// Total order on (score, labels): higher score first, ties broken as above.
bool score_order_before(double score_a, const LabelSeq& a, double score_b,
                        const LabelSeq& b);

struct BeamConfig {
  int beam_width = 5;  // W
  double expand_beam = std::numeric_limits<double>::infinity();
  double state_beam = std::numeric_limits<double>::infinity();
  // Hard cap on non-blank emissions per hypothesis per frame. Termination
  // guard; both beams at +inf reduce the search to the unpruned reference.
  int max_symbols_per_frame = 10;

  void validate() const;
};

}  // namespace rnnt
