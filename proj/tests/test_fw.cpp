#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "bethe/energy.hpp"
#include "bethe/fw.hpp"
#include "bethe/matrix.hpp"
#include "bethe/spa.hpp"
#include "helpers.hpp"

using namespace bethe;
using testutil::log_rel_err;
using testutil::random_positive_matrix;
using testutil::u01;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NonNegMatrix ones(int n) { return NonNegMatrix(n, 1.0); }

// Independent oracle: scan all permutations in lexicographic order, keep the
// strictly best one, so ties resolve to the lexicographically smallest.
struct BruteAssignment {
  bool feasible = false;
  double cost = kInf;
  std::vector<int> sigma;
};

BruteAssignment brute_assignment(const std::vector<double>& cost, int n) {
  BruteAssignment best;
  std::vector<int> sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = i;
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost[std::size_t(i) * n + sigma[i]];
    if (total < best.cost) {
      best.cost = total;
      best.sigma = sigma;
      best.feasible = total < kInf;
    }
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return best;
}

}  // namespace

TEST_CASE("assignment worked examples") {
  SUBCASE("2x2 with a clear optimum") {
    std::vector<int> s = assignment_min({1.0, 2.0, 3.0, 0.0}, 2);
    CHECK(s == std::vector<int>{0, 1});
  }
  SUBCASE("anti-diagonal forced by infinities") {
    std::vector<int> s = assignment_min({kInf, 1.0, 2.0, kInf}, 2);
    CHECK(s == std::vector<int>{1, 0});
  }
  SUBCASE("all-equal costs tie-break to the identity") {
    CHECK(assignment_min(std::vector<double>(9, 1.0), 3) == std::vector<int>{0, 1, 2});
    CHECK(assignment_min(std::vector<double>(16, 0.0), 4) == std::vector<int>{0, 1, 2, 3});
  }
  SUBCASE("tie among two diagonals picks the lexicographically smaller") {
    // Both (0,1) and (1,0) cost 3; (1,0) means sigma[0]=1 which is larger.
    std::vector<int> s = assignment_min({1.0, 2.0, 1.0, 2.0}, 2);
    CHECK(s == std::vector<int>{0, 1});
  }
  SUBCASE("1x1") { CHECK(assignment_min({7.0}, 1) == std::vector<int>{0}); }
  SUBCASE("infeasible when a row is all infinite") {
    CHECK_THROWS_AS(assignment_min({kInf, kInf, 1.0, 1.0}, 2), InfeasibleError);
  }
}

TEST_CASE("assignment agrees with exhaustive search") {
  std::mt19937_64 g(401);
  SUBCASE("random real costs, unique optima") {
    for (int trial = 0; trial < 60; ++trial) {
      int n = 2 + int(g() % 6);
      std::vector<double> cost(std::size_t(n) * n);
      for (double& c : cost) c = u01(g) < 0.1 ? kInf : 10.0 * u01(g) - 5.0;
      BruteAssignment oracle = brute_assignment(cost, n);
      if (!oracle.feasible) {
        CHECK_THROWS_AS(assignment_min(cost, n), InfeasibleError);
        continue;
      }
      std::vector<int> s = assignment_min(cost, n);
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += cost[std::size_t(i) * n + s[i]];
      CHECK(total == doctest::Approx(oracle.cost).epsilon(1e-12));
      CHECK(s == oracle.sigma);
    }
  }
  SUBCASE("small integer costs force ties; lexicographic rule must match") {
    for (int trial = 0; trial < 60; ++trial) {
      int n = 2 + int(g() % 5);
      std::vector<double> cost(std::size_t(n) * n);
      for (double& c : cost) c = double(g() % 4);
      BruteAssignment oracle = brute_assignment(cost, n);
      std::vector<int> s = assignment_min(cost, n);
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += cost[std::size_t(i) * n + s[i]];
      CHECK(total == doctest::Approx(oracle.cost).epsilon(1e-12));
      CHECK(s == oracle.sigma);
    }
  }
}

TEST_CASE("minimization worked values") {
  SUBCASE("[[3,1],[1,3]] reaches the identity vertex, value 9") {
    NonNegMatrix m = parse_matrix("[[3,1],[1,3]]", MatrixFormat::json);
    FwResult r = minimize_frac_bethe(m, ones_kappa(2));
    CHECK(r.converged);
    CHECK(-r.f_star == doctest::Approx(std::log(9.0)).epsilon(1e-6));
    CHECK(r.gamma_star.at(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.gamma_star.at(0, 1) == doctest::Approx(0.0).epsilon(1e-6));
  }
  SUBCASE("all-ones 2x2 with the shifted edge coefficients gives exactly 2") {
    LogValue p = frac_bethe_permanent(ones(2), special_kappa(2));
    CHECK(p.value() == doctest::Approx(2.0).epsilon(1e-8));
  }
  SUBCASE("all-ones 3x3 plain objective gives 64/27") {
    LogValue p = frac_bethe_permanent(ones(3), ones_kappa(3));
    CHECK(p.value() == doctest::Approx(64.0 / 27.0).epsilon(1e-6));
  }
  SUBCASE("1x1") {
    NonNegMatrix m(1);
    m.at(0, 0) = 0.25;
    FwResult r = minimize_frac_bethe(m, ones_kappa(1));
    CHECK(r.converged);
    CHECK(-r.f_star == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  }
  SUBCASE("triangular support is fully forced, objective 0") {
    NonNegMatrix m = parse_matrix("[[1,1],[0,1]]", MatrixFormat::json);
    FwResult r = minimize_frac_bethe(m, ones_kappa(2));
    CHECK(r.converged);
    CHECK(r.f_star == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.gamma_star.at(0, 0) == 1.0);
    CHECK(r.gamma_star.at(0, 1) == 0.0);
    CHECK(r.gamma_star.at(1, 1) == 1.0);
  }
  SUBCASE("inadmissible coefficients are rejected") {
    FracCoefficients bad;
    bad.kappa_rows = {0.0, 0.0};
    bad.kappa_cols = {0.0, 0.0};
    bad.kappa_edges = {1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(minimize_frac_bethe(ones(2), bad), DomainError);
  }
  SUBCASE("zero row is infeasible") {
    NonNegMatrix bad = parse_matrix("[[0,0],[1,1]]", MatrixFormat::json);
    CHECK_THROWS_AS(minimize_frac_bethe(bad, ones_kappa(2)), InfeasibleError);
  }
}

TEST_CASE("shifted-coefficient minimum on all-ones matches the closed form") {
  FwOptions opts;
  opts.max_iters = 5000;
  for (int n = 3; n <= 8; ++n) {
    double expected =
        (n + 0.5) * std::log(double(n)) + (n - 0.5) * (n - 1) * std::log(1.0 - 1.0 / n);
    FwResult r = minimize_frac_bethe(ones(n), special_kappa(n), opts);
    CHECK(std::fabs(-r.f_star - expected) <= 1e-4);
  }
}

TEST_CASE("plain-coefficient minimum agrees with the message-passing solver") {
  std::mt19937_64 g(402);
  FwOptions opts;
  opts.max_iters = 2000;
  int done = 0;
  while (done < 50) {
    int n = 2 + int(g() % 5);
    NonNegMatrix m = random_positive_matrix(n, g);
    SpaResult spa = run_spa(m);
    if (!spa.converged && !spa.oscillation_detected) continue;
    LogValue fw = frac_bethe_permanent(m, ones_kappa(n), opts);
    CHECK(log_rel_err(fw, spa.log_perm_bethe) <= 1e-4);
    ++done;
  }
}

TEST_CASE("objective value is non-increasing in the iteration budget") {
  std::mt19937_64 g(403);
  NonNegMatrix m = random_positive_matrix(4, g);
  double prev = kInf;
  for (int budget : {1, 2, 5, 10, 50}) {
    FwOptions opts;
    opts.max_iters = budget;
    opts.dual_gap_tol = 0.0;  // never stop early
    FwResult r = minimize_frac_bethe(m, ones_kappa(4), opts);
    CHECK(r.f_star <= prev + 1e-12);
    CHECK(r.iterations == budget);
    prev = r.f_star;
  }
}

TEST_CASE("diminishing step sizes still reach the minimum, just more slowly") {
  FwOptions opts;
  opts.line_search = FwOptions::LineSearch::diminishing;

  FwResult r = minimize_frac_bethe(ones(3), ones_kappa(3), opts);
  CHECK(std::fabs(-r.f_star - std::log(64.0 / 27.0)) <= 1e-3);

  NonNegMatrix m = parse_matrix("[[3,1],[1,3]]", MatrixFormat::json);
  FwResult r2 = minimize_frac_bethe(m, ones_kappa(2), opts);
  CHECK(std::fabs(-r2.f_star - std::log(9.0)) <= 1e-3);
}
