#pragma once

#include <vector>

#include "bethe/matrix.hpp"

namespace bethe {

// s(xi) = -xi*log(xi) + (1-xi)*log(1-xi) with 0*log(0) := 0. Vanishes at
// 0, 1/2 and 1; point-symmetric about (1/2, 0). Inputs within 1e-15 of the
// boundary are clamped to it; anything further outside [0,1] is a DomainError.
double s_func(double xi);

// Sum of s over a probability vector (entries >= 0, total 1 within 1e-9).
// Concave and non-negative on the simplex; identically 0 for length 2.
double S_func(const std::vector<double>& xi);

// U_B(gamma) = -sum gamma_ij * log(theta_ij) over supported edges.
// SupportError if gamma puts mass on a zero theta entry.
double bethe_avg_energy(const DoublyStochastic& gamma, const NonNegMatrix& m);

// H_B(gamma) = -sum gamma*log(gamma) + sum (1-gamma)*log(1-gamma); >= 0 on
// the Birkhoff polytope.
double bethe_entropy(const DoublyStochastic& gamma);

// Same value computed as (1/2) sum_i S(row_i) + (1/2) sum_j S(col_j);
// kept as an independent cross-check path through S_func.
double bethe_entropy_via_S(const DoublyStochastic& gamma);

// F_B = U_B - H_B; convex in gamma. exp(-min F_B) is the Bethe permanent.
double bethe_free_energy(const DoublyStochastic& gamma, const NonNegMatrix& m);

// dF_B/dgamma_ij = -log(theta_ij) + log(gamma_ij) + log(1-gamma_ij) + 2 on
// supported edges (entries for absent edges are 0). BoundaryError when a
// supported gamma entry sits at 0 or 1.
std::vector<double> grad_bethe_free_energy(const DoublyStochastic& gamma,
                                           const NonNegMatrix& m);

// Per-row, per-column and per-edge entropy coefficients kappa.
struct FracCoefficients {
  std::vector<double> kappa_rows;   // length n
  std::vector<double> kappa_cols;   // length n
  std::vector<double> kappa_edges;  // row-major n*n

  // Concavity of H^kappa requires kappa_i >= 0, kappa_j >= 0 and
  // kappa_i + kappa_j >= 2*kappa_ij for every edge.
  bool admissible() const;
};

// kappa identically 1: recovers the plain Bethe quantities.
FracCoefficients ones_kappa(int n);

// kappa_i = kappa_j = 1, kappa_ij = 1 - 1/(2n); always admissible.
FracCoefficients special_kappa(int n);

// H^kappa = -sum (kappa_i + kappa_j - kappa_ij) gamma log gamma
//           + sum kappa_ij (1-gamma) log(1-gamma).
double frac_entropy(const DoublyStochastic& gamma, const FracCoefficients& kappa);

// F^kappa = U_B - H^kappa; equals bethe_free_energy when kappa is all ones.
double frac_free_energy(const DoublyStochastic& gamma, const NonNegMatrix& m,
                        const FracCoefficients& kappa);

// dF^kappa/dgamma_ij = -log(theta_ij) + a_ij*(log(gamma_ij) + 1)
//                      + kappa_ij*(log(1-gamma_ij) + 1),
// a_ij = kappa_i + kappa_j - kappa_ij.
std::vector<double> grad_frac_free_energy(const DoublyStochastic& gamma,
                                          const NonNegMatrix& m,
                                          const FracCoefficients& kappa);

}  // namespace bethe
