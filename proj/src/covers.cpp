#include "bethe/covers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bethe/errors.hpp"
#include "bethe/exact.hpp"
#include "bethe/rng.hpp"
#include "bethe/spa.hpp"

namespace bethe {

namespace {

constexpr long kEnumerationCap = 1000000;  // lifts enumerated exactly
constexpr int kRyserCap = 30;              // perm_ryser order limit

long factorial_capped(int M) {
  long f = 1;
  for (int t = 2; t <= M; ++t) {
    if (f > kEnumerationCap / t + 1) return kEnumerationCap + 1;
    f *= t;
  }
  return f;
}

// k-th permutation of {0..M-1} in lexicographic order (factorial base).
void perm_from_index(int M, long k, std::vector<int>& out) {
  std::vector<int> pool(M);
  std::iota(pool.begin(), pool.end(), 0);
  out.resize(M);
  for (int pos = 0; pos < M; ++pos) {
    long f = 1;
    for (int t = 2; t <= M - 1 - pos; ++t) f *= t;
    long d = k / f;
    k %= f;
    out[pos] = pool[d];
    pool.erase(pool.begin() + d);
  }
}

void check_lift_order(const NonNegMatrix& m, int M) {
  if (M < 1) throw DomainError("cover degree must be at least 1");
  if (m.n * M > kRyserCap)
    throw SizeError("lifted order " + std::to_string(m.n * M) + " exceeds limit " +
                    std::to_string(kRyserCap));
}

// Runs fn(k) for k in [0, total) split into contiguous chunks, one thread per
// chunk. Results must be written to per-index slots so the order of thread
// completion cannot matter.
void parallel_indices(long total, int threads, const std::function<void(long, long)>& chunk_fn) {
  if (threads < 1) threads = 1;
  if (threads == 1 || total < 2) {
    chunk_fn(0, total);
    return;
  }
  int used = static_cast<int>(std::min<long>(threads, total));
  std::vector<std::thread> pool;
  pool.reserve(used);
  long base = total / used, extra = total % used, start = 0;
  for (int t = 0; t < used; ++t) {
    long len = base + (t < extra ? 1 : 0);
    pool.emplace_back(chunk_fn, start, start + len);
    start += len;
  }
  for (auto& th : pool) th.join();
}

// Average of exp(logs) as a log, counting -inf entries in the denominator.
LogValue log_average(const std::vector<double>& logs) {
  double lse = log_sum_exp(logs);
  if (std::isinf(lse) && lse < 0) return LogValue::zero();
  return LogValue::from_log(lse - std::log(static_cast<double>(logs.size())));
}

}  // namespace

LiftSpec LiftSpec::identity(int n, int M) {
  LiftSpec spec;
  spec.n = n;
  spec.M = M;
  spec.perms.resize(std::size_t(n) * n * M);
  for (std::size_t b = 0; b < std::size_t(n) * n; ++b)
    for (int r = 0; r < M; ++r) spec.perms[b * M + r] = r;
  return spec;
}

LiftSpec parse_lift_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("M") || !j.contains("perms"))
    throw ParseError("lift spec must be an object with n, M and perms");
  if (!j["n"].is_number_integer() || !j["M"].is_number_integer())
    throw ParseError("n and M must be integers");
  LiftSpec spec;
  spec.n = j["n"].get<int>();
  spec.M = j["M"].get<int>();
  if (spec.n < 1) throw ParseError("n must be positive");
  if (spec.M < 1) throw ParseError("M must be positive");
  const auto& rows = j["perms"];
  if (!rows.is_array() || static_cast<int>(rows.size()) != spec.n)
    throw ShapeError("perms must have n rows");
  spec.perms.resize(std::size_t(spec.n) * spec.n * spec.M);
  std::vector<bool> seen(spec.M);
  for (int i = 0; i < spec.n; ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || static_cast<int>(row.size()) != spec.n)
      throw ShapeError("perms row " + std::to_string(i + 1) + " must have n entries");
    for (int jc = 0; jc < spec.n; ++jc) {
      const auto& p = row[jc];
      if (!p.is_array() || static_cast<int>(p.size()) != spec.M)
        throw ShapeError("permutation at (" + std::to_string(i + 1) + "," +
                         std::to_string(jc + 1) + ") must list M images");
      std::fill(seen.begin(), seen.end(), false);
      for (int r = 0; r < spec.M; ++r) {
        if (!p[r].is_number_integer())
          throw ParseError("permutation images must be integers");
        int img = p[r].get<int>();
        if (img < 1 || img > spec.M || seen[img - 1])
          throw ParseError("entry at (" + std::to_string(i + 1) + "," +
                           std::to_string(jc + 1) + ") is not a permutation of 1.." +
                           std::to_string(spec.M));
        seen[img - 1] = true;
        spec.perms[(std::size_t(i) * spec.n + jc) * spec.M + r] = img - 1;
      }
    }
  }
  return spec;
}

std::string serialize_lift_spec(const LiftSpec& spec) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < spec.n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < spec.n; ++j) {
      nlohmann::json p = nlohmann::json::array();
      for (int r = 0; r < spec.M; ++r) p.push_back(spec.image(i, j, r) + 1);
      row.push_back(std::move(p));
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json j{{"n", spec.n}, {"M", spec.M}, {"perms", std::move(rows)}};
  return j.dump(2) + "\n";
}

LiftSpec random_lift_spec(int n, int M, std::uint64_t seed) {
  if (n < 1 || M < 1) throw DomainError("lift spec dimensions must be positive");
  LiftSpec spec;
  spec.n = n;
  spec.M = M;
  spec.perms.resize(std::size_t(n) * n * M);
  auto g = counter_rng(seed, 0);
  for (std::size_t b = 0; b < std::size_t(n) * n; ++b) {
    std::vector<int> p = random_permutation(M, g);
    std::copy(p.begin(), p.end(), spec.perms.begin() + b * M);
  }
  return spec;
}

NonNegMatrix lift_matrix(const NonNegMatrix& m, const LiftSpec& spec) {
  if (spec.n != m.n) throw ShapeError("lift spec order does not match the matrix");
  int n = m.n, M = spec.M, N = n * M;
  NonNegMatrix out;
  out.n = N;
  out.entries.assign(std::size_t(N) * N, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = m.at(i, j);
      if (v == 0.0) continue;
      for (int r = 0; r < M; ++r)
        out.entries[std::size_t(i * M + r) * N + (j * M + spec.image(i, j, r))] = v;
    }
  return out;
}

LiftCount count_lifts(int n, int M) {
  if (n < 1 || M < 1) throw DomainError("lift count needs positive n and M");
  LiftCount out;
  out.log_count = double(n) * n * std::lgamma(double(M) + 1.0);

  unsigned __int128 fact = 1;
  bool overflow = false;
  for (int t = 2; t <= M && !overflow; ++t) {
    unsigned __int128 next = fact * static_cast<unsigned>(t);
    if (next / static_cast<unsigned>(t) != fact) overflow = true;
    else fact = next;
  }
  unsigned __int128 total = 1;
  const unsigned __int128 kMax = ~static_cast<unsigned __int128>(0);
  for (long e = 0; e < long(n) * n && !overflow; ++e) {
    if (fact != 0 && total > kMax / fact) overflow = true;
    else total *= fact;
  }
  out.exact = !overflow;
  out.count = overflow ? 0 : total;
  return out;
}

std::string to_string(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v != 0) {
    s.push_back(static_cast<char>('0' + int(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

namespace {

// Enumerates lift permanents as logs, one slot per lift index so threading
// never changes the reduction order. mode: full odometer over all blocks, or
// the n = 2 reduction where only block (2,2) varies. Returns false when the
// index space exceeds the enumeration cap.
bool enumerate_lift_logs(const NonNegMatrix& m, int M, int threads,
                         std::vector<double>& logs) {
  long fact = factorial_capped(M);
  int blocks = m.n * m.n;

  bool reduced = false;
  long total = 1;
  {
    bool over = false;
    for (int b = 0; b < blocks && !over; ++b) {
      if (fact > kEnumerationCap / std::max<long>(total, 1)) over = true;
      else total *= fact;
    }
    if (over || total > kEnumerationCap) {
      // Every cover of a 2 x 2 base is a row/column copy-permutation of one
      // whose first three blocks are identities, so the M! reduced lifts
      // realize every permanent value with equal multiplicity. M caps at 7
      // to keep the M! Ryser evaluations of 2M x 2M lifts under a second.
      if (m.n == 2 && M <= 7) {
        reduced = true;
        total = fact;
      } else {
        return false;
      }
    }
  }

  logs.assign(total, -std::numeric_limits<double>::infinity());
  parallel_indices(total, threads, [&](long lo, long hi) {
    LiftSpec spec = LiftSpec::identity(m.n, M);
    std::vector<int> digit_perm;
    for (long k = lo; k < hi; ++k) {
      if (reduced) {
        perm_from_index(M, k, digit_perm);
        std::copy(digit_perm.begin(), digit_perm.end(), spec.perms.begin() + std::size_t(3) * M);
      } else {
        long rest = k;
        for (int b = blocks - 1; b >= 0; --b) {
          perm_from_index(M, rest % fact, digit_perm);
          rest /= fact;
          std::copy(digit_perm.begin(), digit_perm.end(),
                    spec.perms.begin() + std::size_t(b) * M);
        }
      }
      LogValue p = perm_ryser(lift_matrix(m, spec), 1);
      if (!p.is_zero) logs[k] = p.log_mag;
    }
  });
  return true;
}

}  // namespace

LogValue degree_M_bethe_exact(const NonNegMatrix& m, int M, int threads) {
  check_lift_order(m, M);
  std::vector<double> logs;
  if (!enumerate_lift_logs(m, M, threads, logs))
    throw SizeError("cover enumeration exceeds " + std::to_string(kEnumerationCap) +
                    " lifts; use sampling");
  LogValue avg = log_average(logs);
  if (avg.is_zero) return LogValue::zero();
  return LogValue::from_log(avg.log_mag / M);
}

LogValue twobytwo_degree_M_closed(const NonNegMatrix& m, int M) {
  if (m.n != 2) throw ShapeError("closed form requires a 2 x 2 matrix");
  if (M < 1) throw DomainError("cover degree must be at least 1");
  double d0 = m.at(0, 0) * m.at(1, 1);
  double d1 = m.at(0, 1) * m.at(1, 0);
  std::vector<double> logs;
  logs.reserve(M + 1);
  for (int l = 0; l <= M; ++l) {
    if (d0 == 0.0 && M - l > 0) continue;
    if (d1 == 0.0 && l > 0) continue;
    double lg = 0.0;
    if (M - l > 0) lg += (M - l) * std::log(d0);
    if (l > 0) lg += l * std::log(d1);
    logs.push_back(lg);
  }
  if (logs.empty()) return LogValue::zero();
  return LogValue::from_log(log_sum_exp(logs) / M);
}

SampledDegreeM degree_M_bethe_sampled(const NonNegMatrix& m, int M, long samples,
                                      std::uint64_t seed, int threads) {
  check_lift_order(m, M);
  if (samples < 1) throw DomainError("sample count must be positive");

  std::vector<double> logs(samples, -std::numeric_limits<double>::infinity());
  parallel_indices(samples, threads, [&](long lo, long hi) {
    for (long k = lo; k < hi; ++k) {
      auto g = counter_rng(seed, static_cast<std::uint64_t>(k));
      LiftSpec spec;
      spec.n = m.n;
      spec.M = M;
      spec.perms.resize(std::size_t(m.n) * m.n * M);
      for (std::size_t b = 0; b < std::size_t(m.n) * m.n; ++b) {
        std::vector<int> p = random_permutation(M, g);
        std::copy(p.begin(), p.end(), spec.perms.begin() + b * M);
      }
      LogValue p = perm_ryser(lift_matrix(m, spec), 1);
      if (!p.is_zero) logs[k] = p.log_mag;
    }
  });

  SampledDegreeM out;
  out.samples = samples;
  LogValue avg = log_average(logs);
  if (avg.is_zero) return out;  // zero estimate, zero spread
  out.estimate = LogValue::from_log(avg.log_mag / M);
  if (samples >= 2) {
    // Spread of the log via the delta method: ratios r_k = v_k / mean have
    // mean 1, and sd(log mean) ~ sd(r)/sqrt(K).
    double ss = 0.0;
    for (double lg : logs) {
      double r = std::isinf(lg) ? 0.0 : std::exp(lg - avg.log_mag);
      ss += (r - 1.0) * (r - 1.0);
    }
    double var_mean = ss / (double(samples) - 1.0) / double(samples);
    out.stderr_log = std::sqrt(var_mean) / M;
  }
  return out;
}

LiftConjectureReport check_lift_conjectures(const NonNegMatrix& m, int M, CoverMode mode,
                                            long samples, std::uint64_t seed, int threads) {
  check_lift_order(m, M);
  LogValue pm = perm_ryser(m, threads);
  if (pm.is_zero) throw SupportError("base permanent is zero; lift ratios are undefined");
  double base_log = M * pm.log_mag;

  std::vector<double> logs;
  LiftConjectureReport rep;
  if (mode == CoverMode::enumerate_all) {
    if (!enumerate_lift_logs(m, M, threads, logs))
      throw SizeError("cover enumeration exceeds " + std::to_string(kEnumerationCap) +
                      " lifts; use sampling");
    rep.strong_checked = true;
  } else {
    if (samples < 1) throw DomainError("sample count must be positive");
    logs.assign(samples, -std::numeric_limits<double>::infinity());
    parallel_indices(samples, threads, [&](long lo, long hi) {
      for (long k = lo; k < hi; ++k) {
        auto g = counter_rng(seed, static_cast<std::uint64_t>(k));
        LiftSpec spec;
        spec.n = m.n;
        spec.M = M;
        spec.perms.resize(std::size_t(m.n) * m.n * M);
        for (std::size_t b = 0; b < std::size_t(m.n) * m.n; ++b) {
          std::vector<int> p = random_permutation(M, g);
          std::copy(p.begin(), p.end(), spec.perms.begin() + b * M);
        }
        LogValue p = perm_ryser(lift_matrix(m, spec), 1);
        if (!p.is_zero) logs[k] = p.log_mag;
      }
    });
  }

  rep.lifts_checked = static_cast<long>(logs.size());
  double worst = -std::numeric_limits<double>::infinity();
  for (double lg : logs) {
    double ratio_log = std::isinf(lg) ? -std::numeric_limits<double>::infinity()
                                      : lg - base_log;
    worst = std::max(worst, ratio_log);
    if (ratio_log > std::log1p(1e-9)) ++rep.violations;
  }
  rep.max_ratio = std::isinf(worst) ? 0.0 : std::exp(worst);
  return rep;
}

LiftBetheIdentity check_lift_bethe_identity(const NonNegMatrix& m, const LiftSpec& spec) {
  NonNegMatrix lifted = lift_matrix(m, spec);
  SpaOptions opts;
  SpaResult base = run_spa(m, opts);
  SpaResult lift = run_spa(lifted, opts);
  LiftBetheIdentity out;
  out.lhs = lift.log_perm_bethe;
  out.rhs = base.log_perm_bethe.pow(spec.M);
  if (out.lhs.is_zero && out.rhs.is_zero) {
    out.rel_err = 0.0;
  } else if (out.lhs.is_zero || out.rhs.is_zero) {
    out.rel_err = std::numeric_limits<double>::infinity();
  } else {
    out.rel_err = std::fabs(out.lhs.log_mag - out.rhs.log_mag) /
                  std::max(1.0, std::fabs(out.rhs.log_mag));
  }
  return out;
}

}  // namespace bethe
