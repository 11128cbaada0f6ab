#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "sdiff/error.hpp"
#include "sdiff/verify.hpp"

using namespace sdiff;

TEST_CASE("unknown suite lists the available ones") {
  CHECK_THROWS_WITH_AS(run_suite("nope", SuiteParams{}),
                       doctest::Contains("algebra, connection, spectral"), Error);
}

TEST_CASE("algebra suite passes at N = 2") {
  SuiteParams p;
  p.n = 2;
  p.s_values = {0.0, 1.0};
  const SuiteReport r = run_suite("algebra", p);
  for (const Check& c : r.checks) {
    INFO(c.name << " " << c.measured);
    CHECK(c.pass);
  }
  CHECK(r.pass());
  CHECK(std::is_sorted(r.checks.begin(), r.checks.end(),
                       [](const Check& a, const Check& b) { return a.name < b.name; }));
}

TEST_CASE("spectral suite reports gamma") {
  SuiteParams p;
  p.n = 5;
  p.s_values = {0.0, 1.0};
  const SuiteReport r = run_suite("spectral", p);
  CHECK(r.pass());
  CHECK(r.to_json()["golden"]["gamma"] == 1.0);
}

TEST_CASE("tolerance overrides apply by prefix") {
  SuiteParams p;
  p.n = 2;
  p.tolerances["spectral.max_offdiag"] = -1.0;
  const SuiteReport r = run_suite("spectral", p);
  CHECK_FALSE(r.pass());
  CHECK(r.failures() == 1);
}

TEST_CASE("golden calibrate then assert") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "sdiff_golden_test.json").string();
  std::remove(path.c_str());
  SuiteParams p;
  p.n = 2;
  p.golden_path = path;
  CHECK_THROWS_AS(run_suite("connection", p), Error);
  p.calibrate = true;
  const SuiteReport cal = run_suite("connection", p);
  CHECK(cal.calibrated);
  CHECK(cal.pass());
  const GoldenConstants g = load_golden(path);
  CHECK(g.koszul == "left");
  CHECK(g.rho == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.ricci_orientation == -1);

  GoldenConstants wrong = g;
  wrong.ricci_orientation = 1;
  save_golden(path, wrong);
  p.calibrate = false;
  CHECK_FALSE(run_suite("connection", p).pass());
  std::remove(path.c_str());
}
