#pragma once

#include <cassert>
#include <cmath>
#include <limits>

namespace rnnt {

// A probability carried as its natural logarithm. Probabilities never appear
// in linear space in any interface; the merge identity is -inf.
class LogProb {
 public:
  constexpr LogProb() : value_(-std::numeric_limits<double>::infinity()) {}
  constexpr explicit LogProb(double log_value) : value_(log_value) {}

  static constexpr LogProb one() { return LogProb(0.0); }
  static constexpr LogProb never() { return LogProb(); }
  static LogProb from_linear(double p) {
    assert(p >= 0.0);
    return LogProb(std::log(p));
  }

  constexpr double log() const { return value_; }
  double linear() const { return std::exp(value_); }

  constexpr bool is_never() const {
    return value_ == -std::numeric_limits<double>::infinity();
  }

  // Joint probability of independent events.
  constexpr LogProb operator*(LogProb rhs) const {
    return LogProb(value_ + rhs.value_);
  }
  LogProb& operator*=(LogProb rhs) {
    value_ += rhs.value_;
    return *this;
  }

  friend constexpr bool operator==(LogProb a, LogProb b) {
    return a.value_ == b.value_;
  }
  friend constexpr bool operator<(LogProb a, LogProb b) {
    return a.value_ < b.value_;
  }
  friend constexpr bool operator>(LogProb a, LogProb b) { return b < a; }
  friend constexpr bool operator<=(LogProb a, LogProb b) { return !(b < a); }
  friend constexpr bool operator>=(LogProb a, LogProb b) { return !(a < b); }

 private:
  double value_;
};

// ln(e^a + e^b), stable for large-magnitude inputs. NaN inputs are a
// programming error.
inline double logsumexp(double a, double b) {
  assert(!std::isnan(a) && !std::isnan(b));
  if (std::isinf(a) && a < 0) return b;
  if (std::isinf(b) && b < 0) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

inline LogProb logsumexp(LogProb a, LogProb b) {
  return LogProb(logsumexp(a.log(), b.log()));
}

}  // namespace rnnt
