#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SDIFF_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("verify spectral exits 0 with a JSON report") {
  const Run r = run("verify spectral --n 5 --s 0 --no-timestamp");
  CHECK(r.code == 0);
  CHECK(r.out.find("\"suite\": \"spectral\"") != std::string::npos);
  CHECK(r.out.find("\"N\": 5.0") != std::string::npos);
}

TEST_CASE("residual for Taylor-Green") {
  const Run r = run("residual --drift taylor-green --nu 0.1 --n 4 --no-timestamp");
  CHECK(r.code == 0);
  CHECK(r.out.find("\"status\": \"pass\"") != std::string::npos);
}

TEST_CASE("config file with flag overrides") {
  const auto path = std::filesystem::temp_directory_path() / "sdiff_cli_run.json";
  {
    std::ofstream os(path);
    os << R"({"drift": "zero", "nu": 0.0, "points": [[1.0, 2.0]], "n_paths": 1, "T": 0.5, "dt": 0.1})";
  }
  const Run a = run("simulate --config " + path.string() + " --no-timestamp");
  CHECK(a.code == 0);
  CHECK(a.out.find("[\n        1.0,\n        2.0\n      ]") != std::string::npos);
  CHECK(a.out == run("simulate --config " + path.string() + " --no-timestamp").out);
  const Run b = run("simulate --config " + path.string() + " --dt 0.7");
  CHECK(b.code == 2);
  CHECK(b.out.find("'dt'") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("exit codes") {
  CHECK(run("").code == 2);
  CHECK(run("verify").code == 2);
  CHECK(run("verify nonsense").code == 2);
  CHECK(run("generator --nu -1").code == 2);
  const auto golden = std::filesystem::temp_directory_path() / "sdiff_cli_golden.json";
  {
    std::ofstream os(golden);
    os << R"({"gamma": 1.0, "rho": 1.0, "ricci_orientation": 1, "ricci_term_sign": -1, "koszul": "left"})";
  }
  CHECK(run("verify connection --n 2 --golden " + golden.string()).code == 1);
  CHECK(run("verify spectral --n 2 --golden " + golden.string()).code == 0);
  std::filesystem::remove(golden);
  CHECK(run("verify spectral --golden /nonexistent/golden.json").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("dump-christoffel writes CSV") {
  const Run r = run("dump-christoffel --n 1 --s 0");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("kind_k,k1,k2", 0) == 0);
}

TEST_CASE("ns-run writes a snapshot and a time series") {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string snap = (dir / "sdiff_cli_snap.bin").string();
  const std::string series = (dir / "sdiff_cli_series.csv").string();
  const Run r = run("ns-run --grid 32 --nu 0.1 --T 0.1 --dt 0.01 --record-every 5 --output " +
                    snap + " --series " + series + " --no-timestamp");
  CHECK(r.code == 0);
  CHECK(r.out.find("taylor_green_error") != std::string::npos);
  std::ifstream is(series);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 4);
  const Run again = run("ns-run --initial snapshot --input " + snap +
                        " --grid 32 --nu 0.1 --T 0.1 --dt 0.01 --no-timestamp");
  CHECK(again.code == 0);
  CHECK(again.out.find("\"final_time\": 0.2") != std::string::npos);
  std::filesystem::remove(snap);
  std::filesystem::remove(series);
}

TEST_CASE("transport and action subcommands") {
  CHECK(run("transport --n 2 --nu 0.5 --T 0.05 --dt 0.001 --paths 4 --no-timestamp").code == 0);
  const Run a = run("action --drift taylor-green --n 2 --nu 0.1 --T 0.2 --dt 0.02 --paths 200 "
                    "--particles 16 --no-timestamp");
  CHECK(a.code == 0);
  CHECK(a.out.find("\"deterministic\"") != std::string::npos);
}
