#pragma once

#include <cstdint>
#include <vector>

#include "bethe/logvalue.hpp"
#include "bethe/matrix.hpp"

namespace bethe {

// Inverse likelihood ratios V<- (v_left) and V-> (v_right) per edge, row-major
// n*n. Entries on supported edges are finite and positive; entries on absent
// edges stay 0 and are never read.
struct MessageState {
  int n = 0;
  std::vector<double> v_left;
  std::vector<double> v_right;
  long iteration = 0;
};

struct SpaOptions {
  long max_iters = 10000;
  double tol = 1e-10;  // convergence tolerance on belief change
  enum class Gauge { normalize_left_max, none } gauge = Gauge::normalize_left_max;
  // Consecutive steps the period-2 pattern must persist before the
  // Frank-Wolfe fallback kicks in.
  int oscillation_window = 20;
  enum class Init { uniform, random } init = Init::uniform;
  std::uint64_t seed = 0;  // used by random init
};

struct SpaResult {
  LogValue log_perm_bethe;
  DoublyStochastic gamma;
  bool converged = false;
  long iterations_used = 0;
  std::vector<double> pseudo_dual_trace;  // F# after each full iteration
  bool oscillation_detected = false;
  // Worst |row belief - column belief| at the final state; at a fixed point
  // the two families agree (edge consistency).
  double belief_disagreement = 0.0;
};

// Uniform init sets every supported V<- (and V->) to 1; random init draws
// them log-uniformly from [1/e, e] with the given seed.
MessageState init_messages(const NonNegMatrix& m, const SpaOptions& opts = {});

// One full undamped iteration: right half
//   V->_{i,j} = sqrt(theta_ij) / sum_{j' != j} sqrt(theta_ij') V<-_{i,j'},
// then the left half with the roles of rows and columns swapped. With
// gauge = normalize_left_max, all V<- are divided by the maximum supported
// V<- and all V-> multiplied by the same factor afterwards; beliefs and the
// pseudo-dual are invariant under this rescaling while the messages
// themselves stay bounded when they would otherwise diverge at a vertex.
// NumericalError if a denominator underflows to 0.
MessageState spa_iterate(const MessageState& state, const NonNegMatrix& m,
                         SpaOptions::Gauge gauge = SpaOptions::Gauge::normalize_left_max);

// Row-node beliefs beta_ij proportional to sqrt(theta_ij) V<-_{i,j},
// normalized per row. disagreement (optional) receives the maximum absolute
// difference against the column-node beliefs.
DoublyStochastic beliefs(const MessageState& state, const NonNegMatrix& m,
                         double* disagreement = nullptr);

// Pseudo-dual of the Bethe free energy,
//   F# = -sum_i log(sum_j sqrt(theta) V<-) - sum_j log(sum_i sqrt(theta) V->)
//        + sum_{i,j} log(1 + V<- V->),
// evaluable at any iteration and equal to F_B(beliefs) at a fixed point.
double pseudo_dual(const MessageState& state, const NonNegMatrix& m);

// Full solver: support reduction (forced edges contribute their product
// directly), message iteration until the belief change drops below tol, and
// log_perm_bethe = -F# at the final state. A period-2 belief oscillation
// (||gamma_t - gamma_{t-2}|| <= tol while ||gamma_t - gamma_{t-1}|| stays
// above 100*tol for oscillation_window steps) triggers the Frank-Wolfe
// fallback on F_B, which still reports a valid minimum. Non-convergence is
// reported through converged = false, never an exception.
SpaResult run_spa(const NonNegMatrix& m, const SpaOptions& opts = {});

}  // namespace bethe
