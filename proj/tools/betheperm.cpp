#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bethe/analysis.hpp"
#include "bethe/covers.hpp"
#include "bethe/energy.hpp"
#include "bethe/errors.hpp"
#include "bethe/exact.hpp"
#include "bethe/fw.hpp"
#include "bethe/logvalue.hpp"
#include "bethe/matrix.hpp"
#include "bethe/spa.hpp"

namespace {

using bethe::LogValue;
using bethe::NonNegMatrix;
using nlohmann::json;

std::string read_input(const std::string& path) {
  std::ostringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bethe::ParseError("cannot read input: " + path);
  ss << in.rdbuf();
  return ss.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bethe::MatrixFormat detect_format(const std::string& path, const std::string& text) {
  if (ends_with(path, ".json")) return bethe::MatrixFormat::json;
  if (ends_with(path, ".csv")) return bethe::MatrixFormat::csv;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return (c == '[' || c == '{') ? bethe::MatrixFormat::json : bethe::MatrixFormat::csv;
  }
  return bethe::MatrixFormat::json;
}

NonNegMatrix load_matrix(const std::string& path) {
  std::string text = read_input(path);
  return bethe::parse_matrix(text, detect_format(path, text));
}

// Magnitudes are emitted as natural logs ("log_<key>", the string "-inf" for
// an exact zero) plus the linear value when it fits in a double.
void emit_magnitude(json& out, const std::string& key, const LogValue& v) {
  const std::string log_key = "log_" + key;
  if (v.is_zero) {
    out[log_key] = "-inf";
    out[key] = 0.0;
  } else {
    out[log_key] = v.log_mag;
    if (v.representable()) out[key] = v.value();
  }
}

json nested_rows(int n, const std::vector<double>& entries) {
  json rows = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int j = 0; j < n; ++j) row.push_back(entries[std::size_t(i) * n + j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

json one_indexed(const std::vector<int>& v) {
  json arr = json::array();
  for (int x : v) arr.push_back(x + 1);
  return arr;
}

bethe::FracCoefficients parse_kappa_file(const std::string& path, int n) {
  json j;
  try {
    j = json::parse(read_input(path));
  } catch (const json::exception& e) {
    throw bethe::ParseError(std::string("invalid kappa JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kappa_rows") || !j.contains("kappa_cols") ||
      !j.contains("kappa_edges"))
    throw bethe::ParseError("kappa file needs kappa_rows, kappa_cols and kappa_edges");
  bethe::FracCoefficients k;
  auto read_vec = [&](const json& arr, const char* what) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != n)
      throw bethe::ShapeError(std::string(what) + " must have length n");
    std::vector<double> out;
    for (const auto& x : arr) {
      if (!x.is_number()) throw bethe::ParseError(std::string(what) + " must be numeric");
      out.push_back(x.get<double>());
    }
    return out;
  };
  k.kappa_rows = read_vec(j["kappa_rows"], "kappa_rows");
  k.kappa_cols = read_vec(j["kappa_cols"], "kappa_cols");
  const auto& rows = j["kappa_edges"];
  if (!rows.is_array() || static_cast<int>(rows.size()) != n)
    throw bethe::ShapeError("kappa_edges must have n rows");
  for (const auto& row : rows) {
    auto r = read_vec(row, "kappa_edges row");
    k.kappa_edges.insert(k.kappa_edges.end(), r.begin(), r.end());
  }
  return k;
}

void print_json(const json& out) { std::cout << out.dump(2) << "\n"; }

int report_error(const char* type, const std::string& what, int code) {
  json err{{"type", type}, {"error", what}};
  std::cerr << err.dump() << "\n";
  return code;
}

// Exit codes: 2 for malformed or out-of-domain input, 3 for requests that are
// structurally infeasible or beyond the computational caps.
int classify_error(const std::exception& e) {
  if (auto* p = dynamic_cast<const bethe::ParseError*>(&e))
    return report_error("ParseError", p->what(), 2);
  if (auto* p = dynamic_cast<const bethe::ShapeError*>(&e))
    return report_error("ShapeError", p->what(), 2);
  if (auto* p = dynamic_cast<const bethe::NegativeEntryError*>(&e))
    return report_error("NegativeEntryError", p->what(), 2);
  if (auto* p = dynamic_cast<const bethe::DomainError*>(&e))
    return report_error("DomainError", p->what(), 2);
  if (auto* p = dynamic_cast<const bethe::SizeError*>(&e))
    return report_error("SizeError", p->what(), 3);
  if (auto* p = dynamic_cast<const bethe::SupportError*>(&e))
    return report_error("SupportError", p->what(), 3);
  if (auto* p = dynamic_cast<const bethe::InfeasibleError*>(&e))
    return report_error("InfeasibleError", p->what(), 3);
  if (auto* p = dynamic_cast<const bethe::PositivityError*>(&e))
    return report_error("PositivityError", p->what(), 3);
  if (auto* p = dynamic_cast<const bethe::BoundaryError*>(&e))
    return report_error("BoundaryError", p->what(), 3);
  if (auto* p = dynamic_cast<const bethe::NumericalError*>(&e))
    return report_error("NumericalError", p->what(), 3);
  return report_error("InternalError", e.what(), 3);
}

const char* verdict_name(bethe::VertexVerdict v) {
  switch (v) {
    case bethe::VertexVerdict::unique_minimum: return "unique_minimum";
    case bethe::VertexVerdict::not_minimum: return "not_minimum";
    default: return "inconclusive";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and Bethe-approximation permanents of non-negative matrices"};
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 1;
  app.add_option("--threads", threads, "worker threads (default 1, reproducible)");

  std::string perm_input, perm_method = "auto";
  auto* c_perm = app.add_subcommand("perm", "exact permanent");
  c_perm->add_option("input", perm_input, "matrix file (json/csv) or - for stdin")->required();
  c_perm->add_option("--method", perm_method, "auto|brute|ryser")
      ->check(CLI::IsMember({"auto", "brute", "ryser"}));

  std::string bethe_input;
  double bethe_tol = 1e-10;
  long bethe_max_iters = 10000;
  std::string bethe_init = "uniform";
  std::uint64_t bethe_seed = 0;
  bool bethe_trace = false;
  auto* c_bethe = app.add_subcommand("bethe", "Bethe permanent via message passing");
  c_bethe->add_option("input", bethe_input, "matrix file or -")->required();
  c_bethe->add_option("--tol", bethe_tol, "belief-change convergence tolerance");
  c_bethe->add_option("--max-iters", bethe_max_iters, "iteration cap");
  c_bethe->add_option("--init", bethe_init, "uniform|random")
      ->check(CLI::IsMember({"uniform", "random"}));
  c_bethe->add_option("--seed", bethe_seed, "seed for random init");
  c_bethe->add_flag("--trace", bethe_trace, "emit the pseudo-dual trace");

  std::string cover_input, cover_mode = "enumerate";
  int cover_M = 0;
  long cover_samples = 1000;
  std::uint64_t cover_seed = 0;
  auto* c_cover = app.add_subcommand("cover", "degree-M Bethe permanent");
  c_cover->add_option("input", cover_input, "matrix file or -")->required();
  c_cover->add_option("--M", cover_M, "cover degree")->required();
  c_cover->add_option("--mode", cover_mode, "enumerate|sample")
      ->check(CLI::IsMember({"enumerate", "sample"}));
  c_cover->add_option("--samples", cover_samples, "sample count for --mode sample");
  c_cover->add_option("--seed", cover_seed, "sampling seed");

  std::string frac_input, frac_kappa = "special";
  int frac_max_iters = 20000;
  double frac_gap_tol = 1e-6;
  auto* c_frac = app.add_subcommand("frac", "fractional Bethe permanent");
  c_frac->add_option("input", frac_input, "matrix file or -")->required();
  c_frac->add_option("--kappa", frac_kappa, "one|special|file:PATH");
  c_frac->add_option("--max-iters", frac_max_iters, "iteration cap");
  c_frac->add_option("--gap-tol", frac_gap_tol, "duality-gap stopping tolerance");

  std::string bounds_input;
  auto* c_bounds = app.add_subcommand("bounds", "exact/Bethe/fractional bound report");
  c_bounds->add_option("input", bounds_input, "matrix file or -")->required();

  std::string analyze_input;
  auto* c_analyze = app.add_subcommand("analyze", "support, scaling and vertex report");
  c_analyze->add_option("input", analyze_input, "matrix file or -")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (c_perm->parsed()) {
      NonNegMatrix m = load_matrix(perm_input);
      LogValue p;
      std::string used = perm_method;
      if (perm_method == "brute") {
        p = bethe::perm_bruteforce(m);
      } else {
        p = bethe::perm_ryser(m, threads);
        used = "ryser";
      }
      json out{{"n", m.n}, {"method", used}};
      emit_magnitude(out, "perm", p);
      print_json(out);
    } else if (c_bethe->parsed()) {
      NonNegMatrix m = load_matrix(bethe_input);
      bethe::SpaOptions opts;
      opts.tol = bethe_tol;
      opts.max_iters = bethe_max_iters;
      opts.init = bethe_init == "random" ? bethe::SpaOptions::Init::random
                                         : bethe::SpaOptions::Init::uniform;
      opts.seed = bethe_seed;
      bethe::SpaResult r = bethe::run_spa(m, opts);
      json out{{"n", m.n},
               {"converged", r.converged},
               {"iterations", r.iterations_used},
               {"oscillation_detected", r.oscillation_detected},
               {"belief_disagreement", r.belief_disagreement},
               {"gamma", nested_rows(r.gamma.n, r.gamma.entries)}};
      emit_magnitude(out, "perm_bethe", r.log_perm_bethe);
      if (bethe_trace) out["pseudo_dual_trace"] = r.pseudo_dual_trace;
      print_json(out);
    } else if (c_cover->parsed()) {
      NonNegMatrix m = load_matrix(cover_input);
      bethe::LiftCount count = bethe::count_lifts(m.n, cover_M);
      json out{{"n", m.n}, {"M", cover_M}, {"mode", cover_mode}};
      out["log_lift_count"] = count.log_count;
      if (count.exact) out["lift_count"] = bethe::to_string(count.count);
      if (cover_mode == "sample") {
        bethe::SampledDegreeM r =
            bethe::degree_M_bethe_sampled(m, cover_M, cover_samples, cover_seed, threads);
        out["samples"] = r.samples;
        out["stderr_log"] = r.stderr_log;
        out["seed"] = cover_seed;
        emit_magnitude(out, "perm_bethe_M", r.estimate);
      } else {
        LogValue r = bethe::degree_M_bethe_exact(m, cover_M, threads);
        emit_magnitude(out, "perm_bethe_M", r);
      }
      print_json(out);
    } else if (c_frac->parsed()) {
      NonNegMatrix m = load_matrix(frac_input);
      bethe::FracCoefficients kappa;
      if (frac_kappa == "one") {
        kappa = bethe::ones_kappa(m.n);
      } else if (frac_kappa == "special") {
        kappa = bethe::special_kappa(m.n);
      } else if (frac_kappa.rfind("file:", 0) == 0) {
        kappa = parse_kappa_file(frac_kappa.substr(5), m.n);
      } else {
        throw bethe::ParseError("--kappa must be one, special or file:PATH");
      }
      bethe::FwOptions opts;
      opts.max_iters = frac_max_iters;
      opts.dual_gap_tol = frac_gap_tol;
      bethe::FwResult r = bethe::minimize_frac_bethe(m, kappa, opts);
      json out{{"n", m.n},
               {"kappa", frac_kappa},
               {"f_star", r.f_star},
               {"dual_gap", r.dual_gap},
               {"iterations", r.iterations},
               {"converged", r.converged}};
      emit_magnitude(out, "perm_frac", LogValue::from_log(-r.f_star));
      print_json(out);
    } else if (c_bounds->parsed()) {
      NonNegMatrix m = load_matrix(bounds_input);
      bethe::BoundsOptions opts;
      opts.threads = threads;
      bethe::BoundsReport rep = bethe::bounds_report(m, opts);
      json out{{"n", rep.n}, {"exact_available", rep.exact_available}};
      if (rep.exact_available) emit_magnitude(out, "perm", rep.log_perm);
      emit_magnitude(out, "perm_bethe", rep.log_perm_bethe);
      out["bethe_converged"] = rep.bethe_converged;
      out["bethe_oscillation"] = rep.bethe_oscillation;
      emit_magnitude(out, "perm_frac", rep.log_perm_frac);
      out["frac_converged"] = rep.frac_converged;
      out["upper_ratio_log"] = rep.upper_ratio_log;
      if (rep.exact_available) {
        out["ratio_log"] = rep.ratio_log;
        if (std::fabs(rep.ratio_log) < 700.0) out["ratio"] = std::exp(rep.ratio_log);
        out["gurvits_ok"] = rep.gurvits_ok;
        out["conjecture_ok"] = rep.conjecture_ok;
      }
      out["regular_applicable"] = rep.regular_applicable;
      if (rep.regular_applicable) {
        out["regular_d"] = rep.regular_d;
        emit_magnitude(out, "regular_bound", rep.regular_bound);
        out["chain_ok"] = rep.chain_ok;
      }
      print_json(out);
    } else if (c_analyze->parsed()) {
      NonNegMatrix m = load_matrix(analyze_input);
      bethe::SupportReport support = bethe::validate_support(m);
      json out{{"n", m.n},
               {"support",
                json{{"has_perfect_matching", support.has_perfect_matching},
                     {"zero_rows", one_indexed(support.zero_rows)},
                     {"zero_cols", one_indexed(support.zero_cols)},
                     {"support_edge_count", support.support_edge_count}}}};
      std::vector<int> sigma = bethe::best_permutation(m);
      out["sigma_star"] = one_indexed(sigma);
      bethe::VertexReport rep = bethe::classify_vertex(m, sigma);
      out["rho"] = rep.rho;
      out["verdict"] = verdict_name(rep.verdict);
      out["spectral_converged"] = rep.spectral.converged;
      bool positive = true;
      for (double v : m.entries) positive = positive && v > 0.0;
      if (positive) {
        bethe::SinkhornResult s = bethe::sinkhorn(m);
        out["sinkhorn"] = json{{"converged", s.converged},
                               {"iterations", s.iterations},
                               {"max_deviation", s.max_deviation},
                               {"d1", s.d1},
                               {"d2", s.d2}};
      }
      print_json(out);
    }
  } catch (const std::exception& e) {
    return classify_error(e);
  }
  return 0;
}
