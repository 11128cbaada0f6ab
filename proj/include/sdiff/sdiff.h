#ifndef SDIFF_SDIFF_H
#define SDIFF_SDIFF_H

#include <stddef.h>

#if defined(SDIFF_BUILDING_LIBRARY)
#define SDIFF_API __attribute__((visibility("default")))
#else
#define SDIFF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdiff_status {
  SDIFF_OK = 0,
  SDIFF_ERR_INVALID_ARGUMENT = 1,
  SDIFF_ERR_DOMAIN = 2,
  SDIFF_ERR_NUMERICAL = 3,
  SDIFF_ERR_IO = 4,
  SDIFF_ERR_INTERNAL = 5
} sdiff_status;

typedef struct sdiff_string sdiff_string;
typedef struct sdiff_field sdiff_field;

SDIFF_API const char* sdiff_version(void);
SDIFF_API const char* sdiff_status_name(sdiff_status status);

/* Message of the last failing call on this thread; empty if none. */
SDIFF_API const char* sdiff_last_error(void);

SDIFF_API const char* sdiff_string_data(const sdiff_string* s);
SDIFF_API size_t sdiff_string_size(const sdiff_string* s);
SDIFF_API void sdiff_string_free(sdiff_string* s);

/* Newline-separated lists. */
SDIFF_API sdiff_status sdiff_command_names(sdiff_string** out);
SDIFF_API sdiff_status sdiff_suite_names(sdiff_string** out);

/*
 * Runs a subcommand (verify, simulate, generator, residual, transport,
 * action, dump-christoffel, ns-run) on a JSON config object. On SDIFF_OK,
 * *report holds the JSON report (or raw CSV for dump-christoffel without an
 * output path) and *checks_failed is 0 when every check passed.
 */
SDIFF_API sdiff_status sdiff_run(const char* command, const char* config_json,
                                 sdiff_string** report, int* checks_failed);

/* Fields: divergence-free trigonometric vector fields in the A/B basis. */
SDIFF_API sdiff_status sdiff_field_basis(char kind, int k1, int k2, double s,
                                         sdiff_field** out);
SDIFF_API sdiff_status sdiff_field_from_json(const char* json, sdiff_field** out);
SDIFF_API sdiff_status sdiff_field_to_json(const sdiff_field* u, sdiff_string** out);
SDIFF_API sdiff_status sdiff_field_add(const sdiff_field* u, const sdiff_field* v,
                                       double alpha, sdiff_field** out);
SDIFF_API sdiff_status sdiff_field_bracket(const sdiff_field* u, const sdiff_field* v,
                                           sdiff_field** out);
SDIFF_API sdiff_status sdiff_field_covariant(const sdiff_field* x, const sdiff_field* y,
                                             sdiff_field** out);
SDIFF_API sdiff_status sdiff_field_ricci(const sdiff_field* u, double n, sdiff_field** out);
SDIFF_API sdiff_status sdiff_field_eval(const sdiff_field* u, double theta1, double theta2,
                                        double out[2]);
SDIFF_API sdiff_status sdiff_field_inner(const sdiff_field* u, const sdiff_field* v,
                                         double* out);
SDIFF_API void sdiff_field_free(sdiff_field* u);

SDIFF_API sdiff_status sdiff_c_constant(double s, double n, double* out);

#ifdef __cplusplus
}
#endif

#endif
