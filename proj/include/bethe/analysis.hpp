#pragma once

#include <vector>

#include "bethe/logvalue.hpp"
#include "bethe/matrix.hpp"

namespace bethe {

// Permutation maximizing the diagonal product prod theta_{i,sigma(i)}; the
// vertex with the lowest average energy. InfeasibleError without support.
std::vector<int> best_permutation(const NonNegMatrix& m);

// A_{i,i'} = theta_{i,sigma(i')} / theta_{i,sigma(i)} for i != i', zero on
// the diagonal. SupportError if theta_{i,sigma(i)} = 0 for some i.
NonNegMatrix vertex_transition_matrix(const NonNegMatrix& m, const std::vector<int>& sigma);

struct SpectralResult {
  double rho = 0.0;
  std::vector<double> left_vec;   // unit 1-norm
  std::vector<double> right_vec;  // unit 1-norm
  bool converged = false;
};

// Perron root of a non-negative matrix by power iteration on A and A^T
// (relative tolerance 1e-12, at most 1e5 iterations). Iterating on A + I
// keeps the iteration aperiodic without moving the Perron vector; the shift
// is subtracted from the reported root. Non-convergence (possible for
// defective spectra) falls back to a 50-iteration Rayleigh estimate with
// converged = false.
SpectralResult spectral_radius(const NonNegMatrix& a);

enum class VertexVerdict { unique_minimum, not_minimum, inconclusive };

struct VertexReport {
  double rho = 0.0;
  VertexVerdict verdict = VertexVerdict::inconclusive;
  SpectralResult spectral;
};

// rho < 1 - 1e-9 certifies that the permutation vertex is the unique
// minimizer of F_B; rho > 1 + 1e-9 certifies it is not a minimizer; the
// dead band in between is inconclusive.
VertexReport classify_vertex(const NonNegMatrix& m, const std::vector<int>& sigma);

struct SinkhornResult {
  DoublyStochastic theta_prime;
  std::vector<double> d1, d2;
  bool converged = false;
  long iterations = 0;
  double max_deviation = 0.0;  // worst |line sum - 1| at termination
};

// Alternating row/column normalization (rows first) writing
// theta = D1 * theta_prime * D2. The global scalar ambiguity is fixed by
// rescaling so theta_prime's first row sums to exactly 1. All entries must
// be strictly positive (PositivityError otherwise).
SinkhornResult sinkhorn(const NonNegMatrix& m, double tol = 1e-10, long max_iters = 100000);

// Same iteration with absent edges skipped. Converges when the support
// pattern has total support (every edge on some perfect matching), which
// holds for every residual produced by reduce_support.
SinkhornResult sinkhorn_support(const NonNegMatrix& m, double tol = 1e-10,
                                long max_iters = 100000);

// ((d-1)^(d-1) / d^(d-2))^n: the Bethe partition function of the degree-d
// regular alternative graph model, a lower bound for perm_B of integer
// matrices with constant line sums d.
LogValue regular_bethe_bound(long n, long d);

struct BoundsReport {
  int n = 0;

  bool exact_available = false;  // n <= 30
  LogValue log_perm;

  LogValue log_perm_bethe;
  bool bethe_converged = false;
  bool bethe_oscillation = false;

  LogValue log_perm_frac;  // special kappa
  bool frac_converged = false;

  double ratio_log = 0.0;  // log(perm / perm_B) when exact side available
  bool gurvits_ok = false;        // perm >= perm_B * (1 - 1e-9)
  bool conjecture_ok = false;     // perm <= perm_B * sqrt(2)^n * (1 + 1e-9)
  double upper_ratio_log = 0.0;   // log(sqrt(2)^n)

  bool regular_applicable = false;  // integer entries, constant line sums
  long regular_d = 0;
  LogValue regular_bound;
  bool chain_ok = false;  // perm >= perm_B >= regular bound (with slack)
};

struct BoundsOptions {
  int threads = 1;
};

// Consolidated report: exact permanent (Ryser), Bethe permanent (SPA with
// fallback), fractional permanent with the special kappa, the Gurvits lower
// bound flag, the sqrt(2)^n upper bound flag, and the regular-matrix chain
// check when it applies.
BoundsReport bounds_report(const NonNegMatrix& m, const BoundsOptions& opts = {});

}  // namespace bethe
