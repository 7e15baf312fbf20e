#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace bethe {

// Non-negative quantity stored as a natural-log magnitude plus a zero flag.
// Permanents overflow doubles around n = 171 for all-ones matrices already,
// so every permanent-like result is carried in this form.
struct LogValue {
  double log_mag = -std::numeric_limits<double>::infinity();
  bool is_zero = true;

  static LogValue zero() { return LogValue{}; }

  static LogValue from_log(double lm) { return LogValue{lm, false}; }

  // v must be >= 0; v <= 0 collapses to the zero value.
  static LogValue from_value(double v) {
    if (v <= 0.0) return zero();
    return LogValue{std::log(v), false};
  }

  // exp(log_mag); 0 for the zero value, may overflow to +inf.
  double value() const { return is_zero ? 0.0 : std::exp(log_mag); }

  // True when the linear value fits a double comfortably (|log| < 700).
  bool representable() const { return !is_zero && std::fabs(log_mag) < 700.0; }

  LogValue pow(double e) const {
    if (is_zero) return zero();
    return from_log(log_mag * e);
  }
};

inline LogValue operator*(LogValue a, LogValue b) {
  if (a.is_zero || b.is_zero) return LogValue::zero();
  return LogValue::from_log(a.log_mag + b.log_mag);
}

// log(sum(exp(logs))) with the usual max-shift; -inf entries are skipped.
// Returns -inf when every entry is -inf or the list is empty.
inline double log_sum_exp(const std::vector<double>& logs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logs)
    if (x > mx) mx = x;
  if (!(mx > -std::numeric_limits<double>::infinity())) return mx;
  double s = 0.0;
  for (double x : logs)
    if (x > -std::numeric_limits<double>::infinity()) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace bethe
