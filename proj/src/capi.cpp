#include "sdiff/sdiff.h"

#include <string>

#include "sdiff/commands.hpp"
#include "sdiff/connection.hpp"
#include "sdiff/error.hpp"
#include "sdiff/json_io.hpp"
#include "sdiff/verify.hpp"

struct sdiff_string {
  std::string value;
};

struct sdiff_field {
  sdiff::FieldCoeffs value;
};

namespace {

thread_local std::string last_error;

sdiff_status to_status(sdiff::ErrorCode code) {
  switch (code) {
    case sdiff::ErrorCode::invalid_argument: return SDIFF_ERR_INVALID_ARGUMENT;
    case sdiff::ErrorCode::domain: return SDIFF_ERR_DOMAIN;
    case sdiff::ErrorCode::numerical: return SDIFF_ERR_NUMERICAL;
    case sdiff::ErrorCode::io: return SDIFF_ERR_IO;
  }
  return SDIFF_ERR_INTERNAL;
}

template <class F>
sdiff_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return SDIFF_OK;
  } catch (const sdiff::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = std::string("invalid JSON: ") + e.what();
    return SDIFF_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SDIFF_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return SDIFF_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) sdiff::fail(sdiff::ErrorCode::invalid_argument, std::string(what) + " is null");
}

sdiff_string* make_string(std::string s) { return new sdiff_string{std::move(s)}; }
sdiff_field* make_field(sdiff::FieldCoeffs u) { return new sdiff_field{std::move(u)}; }

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += s + "\n";
  return out;
}

}  // namespace

extern "C" {

const char* sdiff_version(void) { return "0.1.0"; }

const char* sdiff_status_name(sdiff_status status) {
  switch (status) {
    case SDIFF_OK: return "ok";
    case SDIFF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SDIFF_ERR_DOMAIN: return "domain error";
    case SDIFF_ERR_NUMERICAL: return "numerical error";
    case SDIFF_ERR_IO: return "i/o error";
    case SDIFF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sdiff_last_error(void) { return last_error.c_str(); }

const char* sdiff_string_data(const sdiff_string* s) { return s ? s->value.c_str() : ""; }
size_t sdiff_string_size(const sdiff_string* s) { return s ? s->value.size() : 0; }
void sdiff_string_free(sdiff_string* s) { delete s; }

sdiff_status sdiff_command_names(sdiff_string** out) {
  return guarded([&] {
    need(out, "out");
    *out = make_string(join(sdiff::command_names()));
  });
}

sdiff_status sdiff_suite_names(sdiff_string** out) {
  return guarded([&] {
    need(out, "out");
    *out = make_string(join(sdiff::suite_names()));
  });
}

sdiff_status sdiff_run(const char* command, const char* config_json, sdiff_string** report,
                       int* checks_failed) {
  return guarded([&] {
    need(command, "command");
    need(report, "report");
    const nlohmann::json config = config_json && *config_json
                                      ? nlohmann::json::parse(config_json)
                                      : nlohmann::json::object();
    sdiff::CommandResult r = sdiff::run_command(command, config);
    *report = make_string(r.text.empty() ? r.report.dump(2) + "\n" : r.text);
    if (checks_failed) *checks_failed = r.status;
  });
}

sdiff_status sdiff_field_basis(char kind, int k1, int k2, double s, sdiff_field** out) {
  return guarded([&] {
    need(out, "out");
    const sdiff::BasisKind bk = sdiff::basis_kind_from_string(std::string(1, kind));
    *out = make_field(sdiff::FieldCoeffs::basis(bk, sdiff::Mode(k1, k2), sdiff::SobolevIndex(s)));
  });
}

sdiff_status sdiff_field_from_json(const char* json, sdiff_field** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = make_field(sdiff::field_from_json_value(nlohmann::json::parse(json)));
  });
}

sdiff_status sdiff_field_to_json(const sdiff_field* u, sdiff_string** out) {
  return guarded([&] {
    need(u, "field");
    need(out, "out");
    *out = make_string(sdiff::field_to_json_value(u->value).dump());
  });
}

sdiff_status sdiff_field_add(const sdiff_field* u, const sdiff_field* v, double alpha,
                             sdiff_field** out) {
  return guarded([&] {
    need(u, "u");
    need(v, "v");
    need(out, "out");
    *out = make_field(u->value + alpha * v->value);
  });
}

sdiff_status sdiff_field_bracket(const sdiff_field* u, const sdiff_field* v, sdiff_field** out) {
  return guarded([&] {
    need(u, "u");
    need(v, "v");
    need(out, "out");
    *out = make_field(sdiff::bracket(u->value, v->value));
  });
}

sdiff_status sdiff_field_covariant(const sdiff_field* x, const sdiff_field* y,
                                   sdiff_field** out) {
  return guarded([&] {
    need(x, "x");
    need(y, "y");
    need(out, "out");
    *out = make_field(sdiff::covariant_derivative(x->value, y->value));
  });
}

sdiff_status sdiff_field_ricci(const sdiff_field* u, double n, sdiff_field** out) {
  return guarded([&] {
    need(u, "u");
    need(out, "out");
    *out = make_field(sdiff::ricci_truncated(n, u->value));
  });
}

sdiff_status sdiff_field_eval(const sdiff_field* u, double theta1, double theta2, double out[2]) {
  return guarded([&] {
    need(u, "u");
    need(out, "out");
    const sdiff::TangentVec2 v = sdiff::synth(u->value, {theta1, theta2});
    out[0] = v.v1;
    out[1] = v.v2;
  });
}

sdiff_status sdiff_field_inner(const sdiff_field* u, const sdiff_field* v, double* out) {
  return guarded([&] {
    need(u, "u");
    need(v, "v");
    need(out, "out");
    *out = sdiff::inner_product(u->value, v->value);
  });
}

void sdiff_field_free(sdiff_field* u) { delete u; }

sdiff_status sdiff_c_constant(double s, double n, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = sdiff::c_constant(sdiff::SobolevIndex(s), n);
  });
}

}  // extern "C"
