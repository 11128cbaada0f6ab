#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdiff/sdiff.h"

namespace {

using nlohmann::json;

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::string config;
  std::optional<double> n, nu, T, dt, t;
  std::vector<double> s;
  std::optional<long long> n_paths, n_particles, seed, workers, grid, record_every;
  std::string drift, function, output, series, input, initial, golden, report;
  std::vector<double> theta;
  std::map<std::string, double> tolerances;
  bool calibrate = false;
  bool no_timestamp = false;
  std::string suite;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON config file; flags override its fields");
  sub->add_option("--n,--N", o.n, "noise truncation radius N");
  sub->add_option("--s", o.s, "Sobolev index (repeatable for verify)");
  sub->add_option("--nu", o.nu, "viscosity");
  sub->add_option("--T", o.T, "time horizon");
  sub->add_option("--dt", o.dt, "time step");
  sub->add_option("--t", o.t, "evaluation time (residual)");
  sub->add_option("--paths", o.n_paths, "Monte Carlo paths");
  sub->add_option("--particles", o.n_particles, "particles per path");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--workers", o.workers, "worker threads (results do not depend on it)");
  sub->add_option("--grid", o.grid, "spectral grid size (power of two)");
  sub->add_option("--record-every", o.record_every, "ns-run: steps between recorded samples");
  sub->add_option("--drift", o.drift,
                  "zero | constant | taylor-green | taylor-green-steady (field via config)");
  sub->add_option("--function", o.function, "test function, e.g. cos(t1)");
  sub->add_option("--theta", o.theta, "evaluation point theta1 theta2")->expected(2);
  sub->add_option("--output", o.output, "artifact output path");
  sub->add_option("--series", o.series, "ns-run: CSV time series path");
  sub->add_option("--input", o.input, "ns-run: initial snapshot path");
  sub->add_option("--initial", o.initial, "ns-run: taylor-green | snapshot | field");
  sub->add_option("--golden", o.golden, "golden constants file");
  sub->add_flag("--calibrate", o.calibrate, "measure golden constants and persist them");
  sub->add_option("--tolerance", o.tolerances, "override a tolerance: name=value")
      ->delimiter(',');
  sub->add_option("--report", o.report, "write the report here instead of stdout");
  sub->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp field");
}

json build_config(const Overrides& o) {
  json c = json::object();
  if (!o.config.empty()) {
    std::ifstream is(o.config);
    if (!is) throw std::runtime_error("cannot open config file " + o.config);
    try {
      is >> c;
    } catch (const json::exception& e) {
      throw std::runtime_error("config file " + o.config + " is not valid JSON: " + e.what());
    }
    if (!c.is_object()) throw std::runtime_error("config file must hold a JSON object");
  }
  auto set = [&](const char* key, const auto& v) {
    if (v) c[key] = *v;
  };
  if (o.n) {
    c.erase("n");
    c["N"] = *o.n;
  }
  set("nu", o.nu);
  set("T", o.T);
  set("dt", o.dt);
  set("t", o.t);
  set("n_paths", o.n_paths);
  set("n_particles", o.n_particles);
  set("seed", o.seed);
  set("workers", o.workers);
  set("grid", o.grid);
  set("record_every", o.record_every);
  if (!o.s.empty()) c["s"] = o.s.size() == 1 ? json(o.s.front()) : json(o.s);
  if (!o.drift.empty()) c["drift"] = o.drift;
  if (!o.function.empty()) c["function"] = o.function;
  if (!o.theta.empty()) c["theta"] = o.theta;
  if (!o.output.empty()) c["output"] = o.output;
  if (!o.series.empty()) c["series"] = o.series;
  if (!o.input.empty()) c["input"] = o.input;
  if (!o.initial.empty()) c["initial"] = o.initial;
  if (!o.golden.empty()) c["golden"] = o.golden;
  if (o.calibrate) c["calibrate"] = true;
  if (o.no_timestamp) c["timestamp"] = false;
  if (!o.suite.empty()) c["suite"] = o.suite;
  for (const auto& [k, v] : o.tolerances) c["tolerances"][k] = v;
  return c;
}

std::vector<std::string> split_lines(const char* text) {
  std::vector<std::string> out;
  std::string cur;
  for (const char* p = text; *p; ++p) {
    if (*p == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += *p;
    }
  }
  return out;
}

std::vector<std::string> names_from(sdiff_status (*fn)(sdiff_string**)) {
  sdiff_string* s = nullptr;
  if (fn(&s) != SDIFF_OK) return {};
  auto v = split_lines(sdiff_string_data(s));
  sdiff_string_free(s);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Lagrangian flows on the torus: verification and simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sdiff_version()));

  Overrides o;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> help{
      {"verify", "run a verification suite"},
      {"simulate", "advect particles under the stochastic flow"},
      {"generator", "Monte Carlo estimate of the generator on a test function"},
      {"residual", "geodesic residual of a velocity trajectory"},
      {"transport", "parallel transport isometry defect along noise paths"},
      {"action", "Monte Carlo action functional"},
      {"dump-christoffel", "Christoffel table as CSV"},
      {"ns-run", "pseudo-spectral Navier-Stokes run"}};
  for (const std::string& name : names_from(sdiff_command_names)) {
    const auto it = help.find(name);
    CLI::App* sub = app.add_subcommand(name, it == help.end() ? name : it->second);
    add_common(sub, o);
    subs[name] = sub;
  }
  if (subs.contains("verify")) {
    std::string list;
    for (const auto& s : names_from(sdiff_suite_names)) list += (list.empty() ? "" : ", ") + s;
    subs["verify"]->add_option("suite", o.suite, "suite: " + list)->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  std::string command;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) command = name;

  json config;
  try {
    config = build_config(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  sdiff_string* report = nullptr;
  int failed = 0;
  const std::string text = config.dump();
  const sdiff_status st = sdiff_run(command.c_str(), text.c_str(), &report, &failed);
  if (st != SDIFF_OK) {
    std::cerr << "error (" << sdiff_status_name(st) << "): " << sdiff_last_error() << "\n";
    return kExitUsage;
  }
  if (o.report.empty()) {
    std::fwrite(sdiff_string_data(report), 1, sdiff_string_size(report), stdout);
  } else {
    std::ofstream os(o.report);
    if (!os) {
      std::cerr << "error: cannot write report " << o.report << "\n";
      sdiff_string_free(report);
      return kExitUsage;
    }
    os.write(sdiff_string_data(report), static_cast<std::streamsize>(sdiff_string_size(report)));
  }
  sdiff_string_free(report);
  return failed ? kExitFail : 0;
}
