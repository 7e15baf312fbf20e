#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bethe/errors.hpp"

namespace bethe {

// Dense square matrix of non-negative weights theta. A zero entry is an
// absent edge of the underlying complete bipartite graph; no consumer ever
// takes log(0) of a theta entry.
struct NonNegMatrix {
  int n = 0;
  std::vector<double> entries;  // row-major, n*n

  NonNegMatrix() = default;
  explicit NonNegMatrix(int n_, double fill = 0.0)
      : n(n_), entries(std::size_t(n_) * n_, fill) {}

  // Validates squareness and non-negativity.
  static NonNegMatrix from_rows(const std::vector<std::vector<double>>& rows);

  double& at(int i, int j) { return entries[std::size_t(i) * n + j]; }
  double at(int i, int j) const { return entries[std::size_t(i) * n + j]; }
};

// Matrix gamma in the Birkhoff polytope: entries in [0,1], every row and
// column summing to 1 within 1e-9. Construction is unchecked; call
// is_doubly_stochastic where the invariant matters.
struct DoublyStochastic {
  int n = 0;
  std::vector<double> entries;  // row-major, n*n

  DoublyStochastic() = default;
  explicit DoublyStochastic(int n_, double fill = 0.0)
      : n(n_), entries(std::size_t(n_) * n_, fill) {}

  double& at(int i, int j) { return entries[std::size_t(i) * n + j]; }
  double at(int i, int j) const { return entries[std::size_t(i) * n + j]; }
};

bool is_doubly_stochastic(const DoublyStochastic& g, double tol = 1e-9);

struct SupportReport {
  bool has_perfect_matching = false;
  std::vector<int> zero_rows;
  std::vector<int> zero_cols;
  long support_edge_count = 0;
};

enum class MatrixFormat { json, csv };

// JSON accepts a bare array-of-arrays or {"n": int, "entries": [[...]]}.
// CSV is newline-separated rows of comma-separated entries, no header.
NonNegMatrix parse_matrix(const std::string& text, MatrixFormat format);

// Emits 17 significant digits so parse(serialize(m)) == m exactly.
std::string serialize_matrix(const NonNegMatrix& m, MatrixFormat format);

// Perfect-matching existence on the support pattern decides perm(theta) > 0.
SupportReport validate_support(const NonNegMatrix& m);

// Maximum bipartite matching (augmenting paths). adj[i] lists the right
// vertices reachable from left vertex i; match_right[j] receives the matched
// left vertex or -1. Returns the matching size.
int kuhn_matching(const std::vector<std::vector<int>>& adj, int n_right,
                  std::vector<int>& match_right);

// Support preprocessing shared by the iterative solvers. Keeps only edges
// that lie on at least one perfect matching of the support, then repeatedly
// peels rows/columns left with a single such edge (those edges carry
// gamma = 1 in every doubly stochastic matrix of this support). What remains
// has at least two admissible edges per line, so interior points exist and
// message denominators stay positive.
struct SupportReduction {
  bool feasible = false;                      // support admits a perfect matching
  std::vector<std::pair<int, int>> forced;    // peeled (row, col) pairs
  double forced_log_product = 0.0;            // sum of log theta over forced edges
  std::vector<int> rows, cols;                // original indices of the residual
  NonNegMatrix residual;                      // admissible entries only; may be 0x0
};

SupportReduction reduce_support(const NonNegMatrix& m);

}  // namespace bethe
