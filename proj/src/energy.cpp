#include "bethe/energy.hpp"

#include <cmath>
#include <string>

namespace bethe {

namespace {

constexpr double kBoundaryClamp = 1e-15;

// Clamps values within 1e-15 of 0 or 1 onto the boundary so rounding noise
// from long iterative scaling cannot produce log of a negative number.
double clamp01(double xi) {
  if (std::fabs(xi) <= kBoundaryClamp) return 0.0;
  if (std::fabs(1.0 - xi) <= kBoundaryClamp) return 1.0;
  return xi;
}

// x*log(x) with the 0*log(0) := 0 convention as an explicit branch.
double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

}  // namespace

double s_func(double xi) {
  xi = clamp01(xi);
  if (xi < 0.0 || xi > 1.0)
    throw DomainError("s_func argument must lie in [0, 1], got " + std::to_string(xi));
  return -xlogx(xi) + xlogx(1.0 - xi);
}

double S_func(const std::vector<double>& xi) {
  double sum = 0.0;
  for (double v : xi) {
    if (clamp01(v) < 0.0)
      throw DomainError("S_func argument must have non-negative entries");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw DomainError("S_func argument must sum to 1, got " + std::to_string(sum));
  double total = 0.0;
  for (double v : xi) total += s_func(v);
  return total;
}

double bethe_avg_energy(const DoublyStochastic& gamma, const NonNegMatrix& m) {
  double u = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      const double g = clamp01(gamma.at(i, j));
      if (g == 0.0) continue;
      const double th = m.at(i, j);
      if (th == 0.0)
        throw SupportError("gamma places mass on the absent edge (" +
                           std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
      u -= g * std::log(th);
    }
  return u;
}

double bethe_entropy(const DoublyStochastic& gamma) {
  double h = 0.0;
  for (double v : gamma.entries) {
    const double g = clamp01(v);
    h += -xlogx(g) + xlogx(1.0 - g);
  }
  return h;
}

double bethe_entropy_via_S(const DoublyStochastic& gamma) {
  const int n = gamma.n;
  double h = 0.0;
  std::vector<double> line(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) line[j] = gamma.at(i, j);
    h += 0.5 * S_func(line);
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) line[i] = gamma.at(i, j);
    h += 0.5 * S_func(line);
  }
  return h;
}

double bethe_free_energy(const DoublyStochastic& gamma, const NonNegMatrix& m) {
  return bethe_avg_energy(gamma, m) - bethe_entropy(gamma);
}

std::vector<double> grad_bethe_free_energy(const DoublyStochastic& gamma,
                                           const NonNegMatrix& m) {
  return grad_frac_free_energy(gamma, m, ones_kappa(m.n));
}

bool FracCoefficients::admissible() const {
  const int n = int(kappa_rows.size());
  for (double k : kappa_rows)
    if (k < 0.0) return false;
  for (double k : kappa_cols)
    if (k < 0.0) return false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (kappa_rows[i] + kappa_cols[j] < 2.0 * kappa_edges[std::size_t(i) * n + j])
        return false;
  return true;
}

FracCoefficients ones_kappa(int n) {
  FracCoefficients k;
  k.kappa_rows.assign(n, 1.0);
  k.kappa_cols.assign(n, 1.0);
  k.kappa_edges.assign(std::size_t(n) * n, 1.0);
  return k;
}

FracCoefficients special_kappa(int n) {
  FracCoefficients k = ones_kappa(n);
  k.kappa_edges.assign(std::size_t(n) * n, 1.0 - 1.0 / (2.0 * n));
  return k;
}

double frac_entropy(const DoublyStochastic& gamma, const FracCoefficients& kappa) {
  const int n = gamma.n;
  double h = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double g = clamp01(gamma.at(i, j));
      const double a =
          kappa.kappa_rows[i] + kappa.kappa_cols[j] - kappa.kappa_edges[std::size_t(i) * n + j];
      h += -a * xlogx(g) + kappa.kappa_edges[std::size_t(i) * n + j] * xlogx(1.0 - g);
    }
  return h;
}

double frac_free_energy(const DoublyStochastic& gamma, const NonNegMatrix& m,
                        const FracCoefficients& kappa) {
  return bethe_avg_energy(gamma, m) - frac_entropy(gamma, kappa);
}

std::vector<double> grad_frac_free_energy(const DoublyStochastic& gamma,
                                          const NonNegMatrix& m,
                                          const FracCoefficients& kappa) {
  const int n = m.n;
  std::vector<double> grad(std::size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double th = m.at(i, j);
      if (th == 0.0) continue;
      const double g = clamp01(gamma.at(i, j));
      if (g == 0.0 || g == 1.0)
        throw BoundaryError("gradient undefined at gamma(" + std::to_string(i + 1) + "," +
                            std::to_string(j + 1) + ") = " + std::to_string(g));
      const double ke = kappa.kappa_edges[std::size_t(i) * n + j];
      const double a = kappa.kappa_rows[i] + kappa.kappa_cols[j] - ke;
      grad[std::size_t(i) * n + j] =
          -std::log(th) + a * (std::log(g) + 1.0) + ke * (std::log1p(-g) + 1.0);
    }
  return grad;
}

}  // namespace bethe
