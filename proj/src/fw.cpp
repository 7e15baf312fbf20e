#include "bethe/fw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bethe/analysis.hpp"

namespace bethe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Hungarian method in the potentials formulation. Returns col_of_row and the
// final potentials; entries with +inf cost are never matched unless the
// instance is infeasible, which is reported by throwing.
void hungarian(const std::vector<double>& cost, int n, std::vector<int>& col_of_row,
               std::vector<double>& u, std::vector<double>& v) {
  // 1-based scratch arrays; p[j] is the row matched to column j.
  std::vector<double> uu(n + 1, 0.0), vv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);

  auto c = [&](int i, int j) { return cost[std::size_t(i - 1) * n + (j - 1)]; };

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0, j) - uu[i0] - vv[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (!(delta < kInf))
        throw InfeasibleError("no finite-cost perfect assignment exists");
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          uu[p[j]] += delta;
          vv[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  col_of_row.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) col_of_row[p[j] - 1] = j - 1;
  u.assign(n, 0.0);
  v.assign(n, 0.0);
  for (int i = 0; i < n; ++i) u[i] = uu[i + 1];
  for (int j = 0; j < n; ++j) v[j] = vv[j + 1];
}

}  // namespace

std::vector<int> assignment_min(const std::vector<double>& cost, int n) {
  std::vector<int> match;
  std::vector<double> u, v;
  hungarian(cost, n, match, u, v);

  // Optimal assignments are exactly the perfect matchings of the graph of
  // zero reduced cost. If that graph has spare edges, rebuild the matching
  // row by row, always taking the smallest column that still completes, so
  // ties resolve to the lexicographically smallest permutation.
  std::vector<std::vector<int>> zero_adj(n);
  long zero_edges = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double cij = cost[std::size_t(i) * n + j];
      if (cij == kInf) continue;
      const double r = cij - u[i] - v[j];
      if (r <= 1e-10 * (1.0 + std::fabs(cij) + std::fabs(u[i]) + std::fabs(v[j]))) {
        zero_adj[i].push_back(j);
        ++zero_edges;
      }
    }
  if (zero_edges == n) return match;

  std::vector<int> sigma(n, -1);
  std::vector<char> col_used(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j : zero_adj[i]) {
      if (col_used[j]) continue;
      // Feasibility of fixing (i, j): rows below i must still match into the
      // remaining columns of the zero graph.
      std::vector<std::vector<int>> rest(n - i - 1);
      for (int i2 = i + 1; i2 < n; ++i2)
        for (int j2 : zero_adj[i2])
          if (!col_used[j2] && j2 != j) rest[i2 - i - 1].push_back(j2);
      std::vector<int> mr;
      if (kuhn_matching(rest, n, mr) == n - i - 1) {
        sigma[i] = j;
        col_used[j] = 1;
        break;
      }
    }
    if (sigma[i] < 0) return match;  // noise-level ties only; keep the optimum
  }
  return sigma;
}

namespace {

// Support-uniform doubly stochastic matrix: Sinkhorn scaling of the 0/1
// support pattern. The residual patterns fed here always admit one.
DoublyStochastic support_uniform(const NonNegMatrix& m) {
  NonNegMatrix pat(m.n);
  for (std::size_t k = 0; k < m.entries.size(); ++k)
    pat.entries[k] = m.entries[k] > 0.0 ? 1.0 : 0.0;
  return sinkhorn_support(pat, 1e-12, 200000).theta_prime;
}

struct Objective {
  const NonNegMatrix& m;
  const FracCoefficients& kappa;
  double operator()(const DoublyStochastic& g) const {
    return frac_free_energy(g, m, kappa);
  }
};

}  // namespace

FwResult minimize_frac_bethe(const NonNegMatrix& m, const FracCoefficients& kappa,
                             const FwOptions& opts) {
  if (!kappa.admissible())
    throw DomainError("kappa coefficients are not concavity-admissible");

  SupportReduction red = reduce_support(m);
  if (!red.feasible)
    throw InfeasibleError("support admits no perfect matching");

  const int n = m.n;
  const int r = red.residual.n;

  FwResult out;
  out.gamma_star = DoublyStochastic(n);
  for (auto [fi, fj] : red.forced) out.gamma_star.at(fi, fj) = 1.0;

  if (r == 0) {
    out.f_star = -red.forced_log_product;
    out.converged = true;
    return out;
  }

  FracCoefficients sub;
  sub.kappa_rows.resize(r);
  sub.kappa_cols.resize(r);
  sub.kappa_edges.resize(std::size_t(r) * r);
  for (int a = 0; a < r; ++a) sub.kappa_rows[a] = kappa.kappa_rows[red.rows[a]];
  for (int b = 0; b < r; ++b) sub.kappa_cols[b] = kappa.kappa_cols[red.cols[b]];
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      sub.kappa_edges[std::size_t(a) * r + b] =
          kappa.kappa_edges[std::size_t(red.rows[a]) * n + red.cols[b]];

  const double beps = opts.boundary_eps > 0.0 ? opts.boundary_eps : 1e-9 / r;
  const DoublyStochastic interior = support_uniform(red.residual);
  Objective f{red.residual, sub};

  DoublyStochastic gamma = interior;
  double gap = kInf;
  int iters = 0;

  std::vector<double> lmo_cost(std::size_t(r) * r);
  DoublyStochastic target(r), trial(r);

  for (iters = 0; iters < opts.max_iters; ++iters) {
    const std::vector<double> grad = grad_frac_free_energy(gamma, red.residual, sub);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b)
        lmo_cost[std::size_t(a) * r + b] =
            red.residual.at(a, b) > 0.0 ? grad[std::size_t(a) * r + b] : kInf;
    const std::vector<int> sigma = assignment_min(lmo_cost, r);

    // Duality gap against the true vertex: f(gamma) - f* <= <grad, gamma - P>.
    gap = 0.0;
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b)
        gap += grad[std::size_t(a) * r + b] * (gamma.at(a, b) - (sigma[a] == b ? 1.0 : 0.0));
    if (gap <= opts.dual_gap_tol) break;

    // Step target: the vertex pulled boundary_eps toward the interior point.
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b)
        target.at(a, b) =
            (1.0 - beps) * (sigma[a] == b ? 1.0 : 0.0) + beps * interior.at(a, b);

    double eta;
    if (opts.line_search == FwOptions::LineSearch::diminishing) {
      eta = 2.0 / (iters + 2.0);
    } else {
      // Golden-section search on the convex 1-D restriction.
      const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
      double lo = 0.0, hi = 1.0;
      double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
      auto eval = [&](double t) {
        for (std::size_t k = 0; k < trial.entries.size(); ++k)
          trial.entries[k] = (1.0 - t) * gamma.entries[k] + t * target.entries[k];
        return f(trial);
      };
      double f1 = eval(x1), f2 = eval(x2);
      for (int it = 0; it < 60; ++it) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - invphi * (hi - lo);
          f1 = eval(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + invphi * (hi - lo);
          f2 = eval(x2);
        }
      }
      eta = 0.5 * (lo + hi);
      // The segment endpoint may beat the bracket midpoint on nearly linear
      // objectives; keep whichever evaluates lower.
      if (eval(1.0) < eval(eta)) eta = 1.0;
      if (eval(0.0) < eval(eta)) eta = 0.0;
    }

    if (eta > 0.0)
      for (std::size_t k = 0; k < gamma.entries.size(); ++k)
        gamma.entries[k] = (1.0 - eta) * gamma.entries[k] + eta * target.entries[k];
  }

  out.f_star = f(gamma) - red.forced_log_product;
  out.dual_gap = gap;
  out.iterations = iters;
  out.converged = gap <= opts.dual_gap_tol;
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      out.gamma_star.at(red.rows[a], red.cols[b]) = gamma.at(a, b);
  return out;
}

LogValue frac_bethe_permanent(const NonNegMatrix& m, const FracCoefficients& kappa,
                              const FwOptions& opts) {
  return LogValue::from_log(-minimize_frac_bethe(m, kappa, opts).f_star);
}

}  // namespace bethe
