#include "bethe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bethe/energy.hpp"
#include "bethe/errors.hpp"
#include "bethe/exact.hpp"
#include "bethe/fw.hpp"
#include "bethe/spa.hpp"

namespace bethe {

std::vector<int> best_permutation(const NonNegMatrix& m) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(std::size_t(m.n) * m.n, inf);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      double v = m.at(i, j);
      if (v > 0.0) cost[std::size_t(i) * m.n + j] = -std::log(v);
    }
  return assignment_min(cost, m.n);
}

NonNegMatrix vertex_transition_matrix(const NonNegMatrix& m, const std::vector<int>& sigma) {
  int n = m.n;
  if (static_cast<int>(sigma.size()) != n)
    throw ShapeError("permutation length does not match the matrix order");
  std::vector<bool> seen(n, false);
  for (int j : sigma) {
    if (j < 0 || j >= n || seen[j]) throw DomainError("sigma is not a permutation");
    seen[j] = true;
  }
  for (int i = 0; i < n; ++i)
    if (m.at(i, sigma[i]) == 0.0)
      throw SupportError("theta vanishes on the permutation edge at row " +
                         std::to_string(i + 1));
  NonNegMatrix a(n);
  for (int i = 0; i < n; ++i)
    for (int ip = 0; ip < n; ++ip)
      if (ip != i) a.at(i, ip) = m.at(i, sigma[ip]) / m.at(i, sigma[i]);
  return a;
}

namespace {

// One power step y = (A + I) x followed by 1-norm normalization. x is
// entrywise non-negative throughout, so the 1-norm is the plain sum and the
// normalizer converges to the Perron root of A + I.
double shifted_power_step(const NonNegMatrix& a, bool transpose, std::vector<double>& x,
                          std::vector<double>& y) {
  int n = a.n;
  for (int i = 0; i < n; ++i) {
    double acc = x[i];
    for (int j = 0; j < n; ++j)
      acc += (transpose ? a.at(j, i) : a.at(i, j)) * x[j];
    y[i] = acc;
  }
  double sum = 0.0;
  for (double v : y) sum += v;
  if (sum <= 0.0) throw NumericalError("power iteration collapsed to zero");
  for (double& v : y) v /= sum;
  x.swap(y);
  return sum;
}

void power_iterate(const NonNegMatrix& a, bool transpose, std::vector<double>& vec,
                   double& rho, bool& converged) {
  const long kMaxIters = 100000;
  const double kRelTol = 1e-12;
  int n = a.n;
  vec.assign(n, 1.0 / n);
  std::vector<double> scratch(n);
  double lambda = 0.0;
  converged = false;
  for (long t = 0; t < kMaxIters; ++t) {
    std::vector<double> prev = vec;
    double next = shifted_power_step(a, transpose, vec, scratch);
    double vec_step = 0.0;
    for (int i = 0; i < n; ++i) vec_step = std::max(vec_step, std::fabs(vec[i] - prev[i]));
    bool settled = t > 0 && std::fabs(next - lambda) <= kRelTol * std::max(1.0, next) &&
                   vec_step <= kRelTol;
    lambda = next;
    if (settled) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // Averaging the normalizer over extra steps damps any residual
    // alternation; the estimate is reported with converged = false.
    double acc = 0.0;
    for (int t = 0; t < 50; ++t) acc += shifted_power_step(a, transpose, vec, scratch);
    lambda = acc / 50.0;
  }
  rho = lambda - 1.0;  // undo the aperiodicity shift
}

}  // namespace

SpectralResult spectral_radius(const NonNegMatrix& a) {
  if (a.n < 1) throw ShapeError("spectral radius needs a non-empty matrix");
  SpectralResult out;
  bool right_ok = false, left_ok = false;
  double rho_right = 0.0, rho_left = 0.0;
  power_iterate(a, false, out.right_vec, rho_right, right_ok);
  power_iterate(a, true, out.left_vec, rho_left, left_ok);
  out.converged = right_ok && left_ok;
  out.rho = std::max(0.0, right_ok || !left_ok ? rho_right : rho_left);
  return out;
}

VertexReport classify_vertex(const NonNegMatrix& m, const std::vector<int>& sigma) {
  VertexReport rep;
  rep.spectral = spectral_radius(vertex_transition_matrix(m, sigma));
  rep.rho = rep.spectral.rho;
  if (!rep.spectral.converged) {
    rep.verdict = VertexVerdict::inconclusive;
  } else if (rep.rho < 1.0 - 1e-9) {
    rep.verdict = VertexVerdict::unique_minimum;
  } else if (rep.rho > 1.0 + 1e-9) {
    rep.verdict = VertexVerdict::not_minimum;
  } else {
    rep.verdict = VertexVerdict::inconclusive;
  }
  return rep;
}

namespace {

SinkhornResult sinkhorn_core(const NonNegMatrix& m, double tol, long max_iters) {
  int n = m.n;
  SinkhornResult out;
  out.theta_prime.n = n;
  out.theta_prime.entries = m.entries;
  out.d1.assign(n, 1.0);
  out.d2.assign(n, 1.0);
  auto& e = out.theta_prime.entries;

  auto line_deviation = [&]() {
    double dev = 0.0;
    for (int i = 0; i < n; ++i) {
      double rs = 0.0, cs = 0.0;
      for (int j = 0; j < n; ++j) {
        rs += e[std::size_t(i) * n + j];
        cs += e[std::size_t(j) * n + i];
      }
      dev = std::max(dev, std::max(std::fabs(rs - 1.0), std::fabs(cs - 1.0)));
    }
    return dev;
  };

  for (long t = 0; t < max_iters; ++t) {
    for (int i = 0; i < n; ++i) {
      double rs = 0.0;
      for (int j = 0; j < n; ++j) rs += e[std::size_t(i) * n + j];
      if (rs <= 0.0) throw SupportError("row " + std::to_string(i + 1) + " has no support");
      for (int j = 0; j < n; ++j) e[std::size_t(i) * n + j] /= rs;
      out.d1[i] *= rs;
    }
    for (int j = 0; j < n; ++j) {
      double cs = 0.0;
      for (int i = 0; i < n; ++i) cs += e[std::size_t(i) * n + j];
      if (cs <= 0.0) throw SupportError("column " + std::to_string(j + 1) + " has no support");
      for (int i = 0; i < n; ++i) e[std::size_t(i) * n + j] /= cs;
      out.d2[j] *= cs;
    }
    out.iterations = t + 1;
    out.max_deviation = line_deviation();
    if (out.max_deviation <= tol) {
      out.converged = true;
      break;
    }
  }

  // Fix the scalar ambiguity of the D1 * theta' * D2 factorization: rescale
  // so the first row of theta' sums to exactly 1.
  double c = 0.0;
  for (int j = 0; j < n; ++j) c += e[std::size_t(0) * n + j];
  if (c > 0.0) {
    for (double& v : e) v /= c;
    for (double& v : out.d1) v *= c;
  }
  out.max_deviation = line_deviation();
  return out;
}

}  // namespace

SinkhornResult sinkhorn(const NonNegMatrix& m, double tol, long max_iters) {
  if (m.n < 1) throw ShapeError("scaling needs a non-empty matrix");
  for (double v : m.entries)
    if (v <= 0.0) throw PositivityError("scaling requires strictly positive entries");
  return sinkhorn_core(m, tol, max_iters);
}

SinkhornResult sinkhorn_support(const NonNegMatrix& m, double tol, long max_iters) {
  if (m.n < 1) throw ShapeError("scaling needs a non-empty matrix");
  return sinkhorn_core(m, tol, max_iters);
}

LogValue regular_bethe_bound(long n, long d) {
  if (n < 1 || d < 1) throw DomainError("bound needs positive n and d");
  double per_row = 0.0;  // (d-1)log(d-1) - (d-2)log d, with 0 log 0 = 0
  if (d >= 2) per_row = (d - 1) * std::log(double(d - 1)) - (d - 2) * std::log(double(d));
  return LogValue::from_log(n * per_row);
}

BoundsReport bounds_report(const NonNegMatrix& m, const BoundsOptions& opts) {
  BoundsReport rep;
  rep.n = m.n;
  rep.upper_ratio_log = 0.5 * m.n * std::log(2.0);

  SupportReport support = validate_support(m);
  if (!support.has_perfect_matching) {
    // Every permutation product vanishes: all three permanents are zero and
    // the bounds hold with equality.
    rep.exact_available = m.n <= 30;
    rep.log_perm = LogValue::zero();
    rep.log_perm_bethe = LogValue::zero();
    rep.bethe_converged = true;
    rep.log_perm_frac = LogValue::zero();
    rep.frac_converged = true;
    rep.gurvits_ok = rep.exact_available;
    rep.conjecture_ok = rep.exact_available;
    return rep;
  }

  if (m.n <= 30) {
    rep.exact_available = true;
    rep.log_perm = perm_ryser(m, opts.threads);
  }

  SpaResult spa = run_spa(m);
  rep.log_perm_bethe = spa.log_perm_bethe;
  rep.bethe_converged = spa.converged;
  rep.bethe_oscillation = spa.oscillation_detected;

  FwResult frac = minimize_frac_bethe(m, special_kappa(m.n));
  rep.log_perm_frac = LogValue::from_log(-frac.f_star);
  rep.frac_converged = frac.converged;

  if (rep.exact_available && !rep.log_perm.is_zero && !rep.log_perm_bethe.is_zero) {
    rep.ratio_log = rep.log_perm.log_mag - rep.log_perm_bethe.log_mag;
    rep.gurvits_ok = rep.ratio_log >= std::log1p(-1e-9);
    rep.conjecture_ok = rep.ratio_log <= rep.upper_ratio_log + std::log1p(1e-9);
  }

  // Regular case: integer entries with all line sums equal to the same
  // integer d.
  bool integral = true;
  for (double v : m.entries) {
    if (std::fabs(v - std::round(v)) > 1e-9 * std::max(1.0, std::fabs(v))) {
      integral = false;
      break;
    }
  }
  if (integral && m.n >= 1) {
    double first = 0.0;
    for (int j = 0; j < m.n; ++j) first += m.at(0, j);
    long d = std::llround(first);
    bool constant = d >= 1;
    for (int i = 0; i < m.n && constant; ++i) {
      double rs = 0.0, cs = 0.0;
      for (int j = 0; j < m.n; ++j) {
        rs += m.at(i, j);
        cs += m.at(j, i);
      }
      constant = std::fabs(rs - double(d)) <= 1e-9 * std::max(1.0, double(d)) &&
                 std::fabs(cs - double(d)) <= 1e-9 * std::max(1.0, double(d));
    }
    if (constant) {
      rep.regular_applicable = true;
      rep.regular_d = d;
      rep.regular_bound = regular_bethe_bound(m.n, d);
      bool lower_leg = rep.log_perm_bethe.log_mag >=
                       rep.regular_bound.log_mag + std::log1p(-1e-6);
      rep.chain_ok = lower_leg && (!rep.exact_available || rep.gurvits_ok);
    }
  }
  return rep;
}

}  // namespace bethe
