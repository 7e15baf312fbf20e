#include "bethe/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <thread>
#include <vector>

namespace bethe {

namespace {

// Divides each row by its maximum entry, accumulating sum(log max) into
// log_scale. Returns false when some row is entirely zero (permanent is 0).
bool scale_rows(const NonNegMatrix& m, std::vector<double>& scaled, double& log_scale) {
  const int n = m.n;
  scaled.assign(std::size_t(n) * n, 0.0);
  log_scale = 0.0;
  for (int i = 0; i < n; ++i) {
    double mx = 0.0;
    for (int j = 0; j < n; ++j) mx = std::max(mx, m.at(i, j));
    if (mx == 0.0) return false;
    log_scale += std::log(mx);
    for (int j = 0; j < n; ++j) scaled[std::size_t(i) * n + j] = m.at(i, j) / mx;
  }
  return true;
}

// Signed Ryser sum over the subset range [begin, end) of 1..2^n-1. Row sums
// are seeded from the Gray code of begin, then updated one column flip per
// step. term sign is (-1)^(n - |S|); the caller folds in nothing further.
long double ryser_range(const std::vector<double>& a, int n, std::uint64_t begin,
                        std::uint64_t end) {
  std::vector<double> rowsum(n, 0.0);
  std::uint64_t gray = begin ^ (begin >> 1);
  for (int j = 0; j < n; ++j)
    if (gray & (std::uint64_t(1) << j))
      for (int i = 0; i < n; ++i) rowsum[i] += a[std::size_t(i) * n + j];

  int popcnt = std::popcount(gray);
  long double acc = 0.0L;
  for (std::uint64_t k = begin; k < end; ++k) {
    if (k != begin) {
      const int bit = std::countr_zero(k);
      const std::uint64_t mask = std::uint64_t(1) << bit;
      gray ^= mask;
      const double sign = (gray & mask) ? 1.0 : -1.0;
      for (int i = 0; i < n; ++i) rowsum[i] += sign * a[std::size_t(i) * n + bit];
      popcnt += (gray & mask) ? 1 : -1;
    }
    double prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= rowsum[i];
    acc += ((n - popcnt) & 1) ? -prod : prod;
  }
  return acc;
}

}  // namespace

LogValue perm_bruteforce(const NonNegMatrix& m) {
  if (m.n > 10) throw SizeError("perm_bruteforce supports n <= 10");
  std::vector<double> a;
  double log_scale = 0.0;
  if (!scale_rows(m, a, log_scale)) return LogValue::zero();

  const int n = m.n;
  std::vector<int> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  long double acc = 0.0L;
  do {
    double prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= a[std::size_t(i) * n + sigma[i]];
    acc += prod;
  } while (std::next_permutation(sigma.begin(), sigma.end()));

  if (acc <= 0.0L) return LogValue::zero();
  return LogValue::from_log(double(std::log(acc)) + log_scale);
}

LogValue perm_ryser(const NonNegMatrix& m, int threads) {
  if (m.n > 30) throw SizeError("perm_ryser supports n <= 30");
  std::vector<double> a;
  double log_scale = 0.0;
  if (!scale_rows(m, a, log_scale)) return LogValue::zero();

  const int n = m.n;
  const std::uint64_t total = std::uint64_t(1) << n;

  long double acc = 0.0L;
  if (threads <= 1 || total < 4096) {
    acc = ryser_range(a, n, 1, total);
  } else {
    const int t = std::min<std::uint64_t>(threads, 64);
    std::vector<long double> part(t, 0.0L);
    std::vector<std::thread> pool;
    for (int w = 0; w < t; ++w) {
      const std::uint64_t begin = 1 + (total - 1) * w / t;
      const std::uint64_t end = 1 + (total - 1) * (w + 1) / t;
      pool.emplace_back([&, w, begin, end] { part[w] = ryser_range(a, n, begin, end); });
    }
    for (auto& th : pool) th.join();
    for (long double p : part) acc += p;
  }

  // In exact arithmetic the signed sum is the (non-negative) permanent of the
  // scaled matrix; a non-positive accumulator therefore means the true value
  // is zero or lost below the cancellation noise floor.
  if (acc <= 0.0L) return LogValue::zero();
  return LogValue::from_log(double(std::log(acc)) + log_scale);
}

}  // namespace bethe
