#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "helpers.hpp"

using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell, capturing stdout; stderr is dropped.
CliRun run_cli(const std::string& args, const std::string& stdin_payload = "") {
  std::string cmd;
  if (!stdin_payload.empty()) cmd += "printf '%s' '" + stdin_payload + "' | ";
  cmd += std::string(BETHEPERM_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliRun r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json run_json(const std::string& args, const std::string& stdin_payload = "") {
  CliRun r = run_cli(args, stdin_payload);
  REQUIRE(r.code == 0);
  return json::parse(r.out);
}

std::string data(const std::string& name) { return testutil::data_path(name); }

}  // namespace

TEST_CASE("perm subcommand") {
  SUBCASE("factorial of the all-ones matrix") {
    json out = run_json("perm " + data("ones5.json"));
    CHECK(out["n"] == 5);
    CHECK(out["method"] == "ryser");
    CHECK(out["perm"].get<double>() == doctest::Approx(120.0).epsilon(1e-12));
    CHECK(out["log_perm"].get<double>() == doctest::Approx(std::log(120.0)).epsilon(1e-12));
  }
  SUBCASE("brute-force method agrees") {
    json out = run_json("perm --method brute " + data("ones5.json"));
    CHECK(out["method"] == "brute");
    CHECK(out["perm"].get<double>() == doctest::Approx(120.0).epsilon(1e-12));
  }
  SUBCASE("thread count leaves the value unchanged") {
    json a = run_json("perm " + data("m3.json"));
    json b = run_json("--threads 3 perm " + data("m3.json"));
    CHECK(a["perm"].get<double>() == doctest::Approx(b["perm"].get<double>()).epsilon(1e-12));
  }
  SUBCASE("stdin input") {
    json out = run_json("perm -", "[[1,1],[1,1]]");
    CHECK(out["perm"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("csv input") {
    json out = run_json("perm " + data("degenerate22.csv"));
    CHECK(out["perm"].get<double>() == doctest::Approx(8.0).epsilon(1e-12));
  }
  SUBCASE("zero permanent prints -inf log and exits 0") {
    json out = run_json("perm " + data("zero_row.json"));
    CHECK(out["log_perm"] == "-inf");
    CHECK(out["perm"].get<double>() == 0.0);
  }
}

TEST_CASE("bethe subcommand") {
  SUBCASE("2x2 example") {
    json out = run_json("bethe " + data("ex_31_13.json"));
    CHECK(out["converged"].get<bool>());
    CHECK(out["perm_bethe"].get<double>() == doctest::Approx(9.0).epsilon(1e-6));
    CHECK(out["gamma"].size() == 2);
    CHECK(out["gamma"][0].size() == 2);
    CHECK_FALSE(out.contains("pseudo_dual_trace"));
  }
  SUBCASE("trace length matches the iteration count") {
    json out = run_json("bethe --trace " + data("ex_31_13.json"));
    CHECK(out["pseudo_dual_trace"].size() == out["iterations"].get<std::size_t>());
  }
  SUBCASE("rank-one tie oscillates into the fallback") {
    json out = run_json("bethe " + data("degenerate22.csv"));
    CHECK(out["oscillation_detected"].get<bool>());
    CHECK(out["perm_bethe"].get<double>() == doctest::Approx(4.0).epsilon(1e-6));
  }
  SUBCASE("random init is seeded") {
    CliRun a = run_cli("bethe --init random --seed 11 " + data("ex_31_13.json"));
    CliRun b = run_cli("bethe --init random --seed 11 " + data("ex_31_13.json"));
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("cover subcommand") {
  SUBCASE("enumerated degree 3 on all-ones 2x2") {
    json out = run_json("cover --M 3 " + data("ones2.json"));
    CHECK(out["lift_count"] == "1296");
    CHECK(out["log_lift_count"].get<double>() ==
          doctest::Approx(4.0 * std::log(6.0)).epsilon(1e-12));
    CHECK(out["perm_bethe_M"].get<double>() ==
          doctest::Approx(std::pow(4.0, 1.0 / 3.0)).epsilon(1e-10));
  }
  SUBCASE("sampling is byte-reproducible") {
    std::string args = "cover --M 4 --mode sample --samples 50 --seed 3 " + data("ones2.json");
    CliRun a = run_cli(args);
    CliRun b = run_cli(args);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    json out = json::parse(a.out);
    CHECK(out["samples"] == 50);
    CHECK(out["seed"] == 3);
    CHECK(out["stderr_log"].get<double>() >= 0.0);
  }
  SUBCASE("degree too large for enumeration exits 3") {
    CHECK(run_cli("cover --M 8 " + data("ones2.json")).code == 3);
  }
}

TEST_CASE("frac subcommand") {
  SUBCASE("shifted coefficients on all-ones 2x2 give exactly 2") {
    json out = run_json("frac " + data("ones2.json"));
    CHECK(out["kappa"] == "special");
    CHECK(out["converged"].get<bool>());
    CHECK(out["perm_frac"].get<double>() == doctest::Approx(2.0).epsilon(1e-8));
  }
  SUBCASE("plain coefficients reproduce the message-passing value") {
    json out = run_json("frac --kappa one " + data("ex_31_13.json"));
    CHECK(out["perm_frac"].get<double>() == doctest::Approx(9.0).epsilon(1e-5));
    CHECK(out["f_star"].get<double>() == doctest::Approx(-std::log(9.0)).epsilon(1e-5));
  }
  SUBCASE("inadmissible kappa file exits 2") {
    CHECK(run_cli("frac --kappa file:" + data("kappa_bad.json") + " " + data("ones2.json"))
              .code == 2);
  }
}

TEST_CASE("bounds subcommand") {
  json out = run_json("bounds " + data("ex_31_13.json"));
  CHECK(out["exact_available"].get<bool>());
  CHECK(out["perm"].get<double>() == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(out["perm_bethe"].get<double>() == doctest::Approx(9.0).epsilon(1e-5));
  CHECK(out["ratio"].get<double>() == doctest::Approx(10.0 / 9.0).epsilon(1e-5));
  CHECK(out["gurvits_ok"].get<bool>());
  CHECK(out["conjecture_ok"].get<bool>());
  CHECK(out["regular_applicable"].get<bool>());
  CHECK(out["regular_d"] == 4);
  CHECK(out["regular_bound"].get<double>() == doctest::Approx(729.0 / 256.0).epsilon(1e-9));
  CHECK(out["chain_ok"].get<bool>());
}

TEST_CASE("analyze subcommand") {
  SUBCASE("positive 2x2 includes the scaling block") {
    json out = run_json("analyze " + data("ex_31_13.json"));
    CHECK(out["support"]["has_perfect_matching"].get<bool>());
    CHECK(out["support"]["support_edge_count"] == 4);
    CHECK(out["sigma_star"] == json::array({1, 2}));
    CHECK(out["rho"].get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(out["verdict"] == "unique_minimum");
    CHECK(out["sinkhorn"]["converged"].get<bool>());
    CHECK(out["sinkhorn"]["d1"][0].get<double>() == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(out["sinkhorn"]["d1"][1].get<double>() == doctest::Approx(4.0).epsilon(1e-8));
  }
  SUBCASE("matrices with zeros skip the scaling block") {
    json out = run_json("analyze " + data("kron_I3_ones2.json"));
    CHECK_FALSE(out.contains("sinkhorn"));
    CHECK(out["support"]["has_perfect_matching"].get<bool>());
    CHECK(out["verdict"] == "inconclusive");
    CHECK(out["rho"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("infeasible support exits 3") {
    CHECK(run_cli("analyze " + data("zero_row.json")).code == 3);
  }
}

TEST_CASE("input and usage failures map to exit 2") {
  CHECK(run_cli("perm -", "[[1,2],[3]]").code == 2);          // ragged rows
  CHECK(run_cli("perm -", "[[-1,1],[1,1]]").code == 2);       // negative entry
  CHECK(run_cli("perm -", "definitely not a matrix").code == 2);
  CHECK(run_cli("perm --no-such-flag x.json").code == 2);     // CLI parse error
  CHECK(run_cli("perm /no/such/file.json").code == 2);
}

TEST_CASE("caps and infeasibility map to exit 3") {
  // 11 x 11 all-ones exceeds the brute-force cap.
  std::string big = "[";
  for (int i = 0; i < 11; ++i) {
    big += "[1,1,1,1,1,1,1,1,1,1,1]";
    if (i + 1 < 11) big += ",";
  }
  big += "]";
  CHECK(run_cli("perm --method brute -", big).code == 3);
  CHECK(run_cli("bethe " + data("zero_row.json")).code == 3);
}
