#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bethe/logvalue.hpp"
#include "bethe/matrix.hpp"

namespace bethe {

// M-cover of the bipartite graph: one permutation of {0..M-1} per matrix
// entry. perm_at(i,j)[r] = c means row copy r connects to column copy c in
// block (i,j). The JSON form uses 1-indexed images.
struct LiftSpec {
  int n = 0;
  int M = 0;
  std::vector<int> perms;  // flattened (i*n + j)*M + r

  int image(int i, int j, int r) const {
    return perms[(std::size_t(i) * n + j) * M + r];
  }

  static LiftSpec identity(int n, int M);
};

// JSON: {"n":int, "M":int, "perms":[[ [1-indexed ints] ]]}.
LiftSpec parse_lift_spec(const std::string& text);
std::string serialize_lift_spec(const LiftSpec& spec);

// Uniform random spec: each block permutation drawn independently by
// Fisher-Yates from a (seed, counter)-derived stream.
LiftSpec random_lift_spec(int n, int M, std::uint64_t seed);

// The (nM) x (nM) lifted matrix with blocks theta_ij * P^(i,j).
NonNegMatrix lift_matrix(const NonNegMatrix& m, const LiftSpec& spec);

// (M!)^(n^2): the number of degree-M covers.
struct LiftCount {
  bool exact = false;  // fits 128 bits
  unsigned __int128 count = 0;
  double log_count = 0.0;
};
LiftCount count_lifts(int n, int M);
std::string to_string(unsigned __int128 v);

// Degree-M Bethe permanent: M-th root of the average of perm(lifted matrix)
// over all covers. For n = 2 the average reduces to the M! lifts with a
// single free block at (2,2); every cover is a row/column permutation of one
// of those and has the same permanent. General n enumerates all (M!)^(n^2)
// covers, feasible while that count stays <= 1e6 and nM <= 30.
LogValue degree_M_bethe_exact(const NonNegMatrix& m, int M, int threads = 1);

// Closed form for n = 2:
//   (perm_{B,M})^M = sum_{l=0}^{M} (theta11 theta22)^(M-l) (theta12 theta21)^l.
LogValue twobytwo_degree_M_closed(const NonNegMatrix& m, int M);

struct SampledDegreeM {
  LogValue estimate;
  double stderr_log = 0.0;  // standard error of log(estimate)
  long samples = 0;
};

// Monte-Carlo version of the average over uniformly drawn covers. A fixed
// seed gives a bit-identical estimate for any thread count because sample k
// always uses the stream counter_rng(seed, k) and the reduction order is by
// sample index.
SampledDegreeM degree_M_bethe_sampled(const NonNegMatrix& m, int M, long samples,
                                      std::uint64_t seed, int threads = 1);

enum class CoverMode { enumerate_all, sample };

struct LiftConjectureReport {
  double max_ratio = 0.0;   // max over lifts of perm(lift) / perm^M
  long violations = 0;      // ratios above 1 + 1e-9
  bool strong_checked = false;  // per-lift bound checked over the complete set
  long lifts_checked = 0;
};

// Checks perm(lifted) <= perm(theta)^M per lift. enumerate_all covers the
// complete set (via the n = 2 reduction when the full count is infeasible);
// sample draws `samples` covers from the seeded stream.
LiftConjectureReport check_lift_conjectures(const NonNegMatrix& m, int M, CoverMode mode,
                                            long samples = 0, std::uint64_t seed = 0,
                                            int threads = 1);

struct LiftBetheIdentity {
  LogValue lhs;  // Bethe permanent of the lifted matrix
  LogValue rhs;  // (Bethe permanent of the base)^M
  double rel_err = 0.0;
};

// perm_B of a lifted matrix equals perm_B(theta)^M; both sides are computed
// by independent solver runs. rel_err compares the logs against max(1, |log|).
LiftBetheIdentity check_lift_bethe_identity(const NonNegMatrix& m, const LiftSpec& spec);

}  // namespace bethe
