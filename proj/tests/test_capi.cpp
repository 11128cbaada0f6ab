#include <doctest.h>

#include <cmath>
#include <string>

#include "sdiff/sdiff.h"

namespace {
std::string take(sdiff_string* s) {
  std::string out(sdiff_string_data(s), sdiff_string_size(s));
  sdiff_string_free(s);
  return out;
}
}  // namespace

TEST_CASE("field handles") {
  sdiff_field *a = nullptr, *b = nullptr, *c = nullptr;
  REQUIRE(sdiff_field_basis('A', 1, 0, 0.0, &a) == SDIFF_OK);
  REQUIRE(sdiff_field_basis('A', 0, 1, 0.0, &b) == SDIFF_OK);
  REQUIRE(sdiff_field_bracket(a, b, &c) == SDIFF_OK);
  sdiff_string* js = nullptr;
  REQUIRE(sdiff_field_to_json(c, &js) == SDIFF_OK);
  const std::string text = take(js);
  CHECK(text.find("[1,-1,0.0,0.7071067811865") != std::string::npos);

  double v[2];
  REQUIRE(sdiff_field_eval(a, 0.5, 0.0, v) == SDIFF_OK);
  CHECK(v[1] == doctest::Approx(-std::cos(0.5)));
  double ip = 0;
  REQUIRE(sdiff_field_inner(a, a, &ip) == SDIFF_OK);
  CHECK(ip == 1.0);

  sdiff_field* r = nullptr;
  REQUIRE(sdiff_field_ricci(a, 2.0, &r) == SDIFF_OK);
  double rc = 0;
  REQUIRE(sdiff_field_inner(r, a, &rc) == SDIFF_OK);
  CHECK(rc == doctest::Approx(1.9).epsilon(1e-14));
  sdiff_field_free(r);
  sdiff_field_free(a);
  sdiff_field_free(b);
  sdiff_field_free(c);
}

TEST_CASE("errors carry status and message") {
  sdiff_field* bad = nullptr;
  CHECK(sdiff_field_basis('A', 0, -1, 0.0, &bad) == SDIFF_ERR_DOMAIN);
  CHECK(sdiff_field_basis('Q', 1, 0, 0.0, &bad) == SDIFF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(sdiff_last_error()).size() > 0);
  CHECK(bad == nullptr);
  CHECK(sdiff_field_from_json("{", &bad) == SDIFF_ERR_INVALID_ARGUMENT);
  double c = 0;
  CHECK(sdiff_c_constant(0.0, 2.0, &c) == SDIFF_OK);
  CHECK(c == 3.0);
  CHECK(std::string(sdiff_last_error()).empty());
  CHECK(sdiff_c_constant(0.0, 2.0, nullptr) == SDIFF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("run: config validation is field level") {
  sdiff_string* rep = nullptr;
  int failed = 0;
  CHECK(sdiff_run("simulate", R"({"dt": 2.0, "T": 1.0})", &rep, &failed) ==
        SDIFF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(sdiff_last_error()).find("'dt'") != std::string::npos);
  CHECK(sdiff_run("simulate", R"({"bogus": 1})", &rep, &failed) == SDIFF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(sdiff_last_error()).find("'bogus'") != std::string::npos);
  CHECK(sdiff_run("verify", R"({"suite": "nope"})", &rep, &failed) == SDIFF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(sdiff_last_error()).find("martingale") != std::string::npos);
  CHECK(sdiff_run("frobnicate", "{}", &rep, &failed) == SDIFF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("run: dump-christoffel and simulate") {
  sdiff_string* rep = nullptr;
  int failed = -1;
  REQUIRE(sdiff_run("dump-christoffel", R"({"N": 1, "s": 0})", &rep, &failed) == SDIFF_OK);
  const std::string csv = take(rep);
  CHECK(csv.rfind("kind_k,k1,k2,kind_l,l1,l2,kind_t,t1,t2,coeff", 0) == 0);
  CHECK(failed == 0);

  REQUIRE(sdiff_run("simulate",
                    R"({"nu": 0, "drift": "zero", "points": [[0.5, 1.5]], "n_paths": 2,
                        "T": 0.1, "dt": 0.01, "timestamp": false})",
                    &rep, &failed) == SDIFF_OK);
  const std::string json = take(rep);
  CHECK(json.find("\"max_displacement\": 0.0") != std::string::npos);
  CHECK(json.find("timestamp") == std::string::npos);
}

TEST_CASE("run: reports are reproducible and independent of workers") {
  auto once = [](int workers) {
    sdiff_string* rep = nullptr;
    int failed = 0;
    const std::string cfg = R"({"nu": 0.5, "N": 2, "n_paths": 500, "dt": 0.001, "seed": 4,
                               "drift": "taylor-green", "timestamp": false, "workers": )" +
                            std::to_string(workers) + "}";
    REQUIRE(sdiff_run("generator", cfg.c_str(), &rep, &failed) == SDIFF_OK);
    return take(rep);
  };
  const std::string a = once(1);
  CHECK(a == once(1));
  CHECK(a == once(3));
}
