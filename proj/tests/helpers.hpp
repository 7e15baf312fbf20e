#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bethe/analysis.hpp"
#include "bethe/logvalue.hpp"
#include "bethe/matrix.hpp"

namespace testutil {

inline std::string data_path(const std::string& name) {
  return std::string(TEST_DATA_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline double u01(std::mt19937_64& g) {
  return (g() >> 11) * 0x1.0p-53;
}

inline bethe::NonNegMatrix random_matrix(int n, std::mt19937_64& g, double zero_prob = 0.0) {
  bethe::NonNegMatrix m(n);
  for (double& v : m.entries) v = u01(g) < zero_prob ? 0.0 : u01(g);
  return m;
}

inline bethe::NonNegMatrix random_positive_matrix(int n, std::mt19937_64& g, double lo = 0.05) {
  bethe::NonNegMatrix m(n);
  for (double& v : m.entries) v = lo + (1.0 - lo) * u01(g);
  return m;
}

// Independent ground truth: plain double sum over all n! diagonal products.
// No scaling, no log domain; usable while n! * products stay in range.
inline double perm_enumerate(const bethe::NonNegMatrix& m) {
  std::vector<int> sigma(m.n);
  for (int i = 0; i < m.n; ++i) sigma[i] = i;
  double total = 0.0;
  do {
    double prod = 1.0;
    for (int i = 0; i < m.n; ++i) prod *= m.at(i, sigma[i]);
    total += prod;
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return total;
}

// |log a - log b| normalized by max(1, |log b|); zero/zero compares equal,
// zero/non-zero compares infinitely far.
inline double log_rel_err(const bethe::LogValue& a, const bethe::LogValue& b) {
  if (a.is_zero && b.is_zero) return 0.0;
  if (a.is_zero || b.is_zero) return std::numeric_limits<double>::infinity();
  return std::fabs(a.log_mag - b.log_mag) / std::max(1.0, std::fabs(b.log_mag));
}

inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(1.0, std::fabs(b));
}

// Random interior doubly stochastic matrix: balanced random positive matrix.
inline bethe::DoublyStochastic random_ds(int n, std::mt19937_64& g) {
  return bethe::sinkhorn_support(random_positive_matrix(n, g), 1e-12, 100000).theta_prime;
}

// Random point in the interior of the probability simplex.
inline std::vector<double> random_simplex(int n, std::mt19937_64& g) {
  std::vector<double> x(n);
  double total = 0.0;
  for (double& v : x) {
    v = -std::log(std::max(u01(g), 1e-300));
    total += v;
  }
  for (double& v : x) v /= total;
  return x;
}

}  // namespace testutil
