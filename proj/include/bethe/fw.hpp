#pragma once

#include <vector>

#include "bethe/energy.hpp"
#include "bethe/logvalue.hpp"
#include "bethe/matrix.hpp"

namespace bethe {

// Minimum-cost perfect assignment (Hungarian method with potentials, O(n^3)).
// cost is row-major n*n; absent edges carry +infinity. Ties are broken in
// favor of the lexicographically smallest permutation. InfeasibleError when
// no finite-cost perfect assignment exists.
std::vector<int> assignment_min(const std::vector<double>& cost, int n);

struct FwOptions {
  int max_iters = 20000;
  double dual_gap_tol = 1e-6;
  enum class LineSearch { exact_bisection, diminishing } line_search =
      LineSearch::exact_bisection;
  // Vertex steps are mixed with this much of the support-uniform doubly
  // stochastic matrix to keep iterates interior; <= 0 selects 1e-9/n.
  double boundary_eps = -1.0;
};

struct FwResult {
  DoublyStochastic gamma_star;
  double f_star = 0.0;
  double dual_gap = 0.0;
  int iterations = 0;
  bool converged = false;  // dual_gap <= dual_gap_tol at termination
};

// Conditional-gradient minimization of F^kappa over the Birkhoff polytope
// restricted to the support of m. The linear subproblem is assignment_min on
// the gradient; the duality gap <g, gamma - vertex> certifies optimality.
// kappa must be concavity-admissible (DomainError otherwise) so the objective
// is convex and the certificate valid.
FwResult minimize_frac_bethe(const NonNegMatrix& m, const FracCoefficients& kappa,
                             const FwOptions& opts = {});

// exp(-f_star) of the minimization above.
LogValue frac_bethe_permanent(const NonNegMatrix& m, const FracCoefficients& kappa,
                              const FwOptions& opts = {});

}  // namespace bethe
