/* C interface to the pdmp experiment library. */
#ifndef PDMP_PDMP_H
#define PDMP_PDMP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PDMP_BUILDING_LIBRARY)
#    define PDMP_API __declspec(dllexport)
#  else
#    define PDMP_API __declspec(dllimport)
#  endif
#else
#  define PDMP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pdmp_status {
  PDMP_OK = 0,
  PDMP_CONTRACT_VIOLATION = 1,
  PDMP_DOMAIN_ERROR = 2,
  PDMP_NUMERICAL_OVERFLOW = 3,
  PDMP_BOUND_VIOLATION = 4,
  PDMP_QUADRATURE_FAILURE = 5,
  PDMP_PARSE_ERROR = 6,
  PDMP_IO_ERROR = 7,
  PDMP_UNSUPPORTED_MODEL = 8,
  PDMP_INVALID_ARGUMENT = 9,
  PDMP_INTERNAL_ERROR = 10
} pdmp_status;

typedef enum pdmp_verdict { PDMP_PASS = 0, PDMP_FAIL = 1, PDMP_INFO = 2 } pdmp_verdict;

typedef struct pdmp_config pdmp_config;
typedef struct pdmp_report pdmp_report;

/* One report row. Pointers stay valid until the report is freed.
   Absent numeric fields are NaN. */
typedef struct pdmp_row {
  const char* name;
  double estimate;
  double se;
  double oracle;
  double bound;
  double tolerance;
  pdmp_verdict verdict;
  const char* note;
} pdmp_row;

/* Message of the last failed call on this thread ("" if none). */
PDMP_API const char* pdmp_last_error(void);
PDMP_API const char* pdmp_status_name(pdmp_status status);

PDMP_API pdmp_status pdmp_config_parse(const char* text, pdmp_config** out);
PDMP_API pdmp_status pdmp_config_load(const char* path, pdmp_config** out);
PDMP_API pdmp_status pdmp_config_set_seed(pdmp_config* config, uint64_t seed);
/* Writes the experiment kind ("simulate", "gcurve", ...) into buf. */
PDMP_API pdmp_status pdmp_config_kind(const pdmp_config* config, char* buf, size_t size);
PDMP_API void pdmp_config_free(pdmp_config* config);

/* workers = 0 picks the hardware concurrency. */
PDMP_API pdmp_status pdmp_run(const pdmp_config* config, unsigned workers, pdmp_report** out);
PDMP_API pdmp_status pdmp_report_write(const pdmp_report* report, const char* dir);
PDMP_API size_t pdmp_report_row_count(const pdmp_report* report);
PDMP_API pdmp_status pdmp_report_row(const pdmp_report* report, size_t index, pdmp_row* out);
PDMP_API int pdmp_report_passed(const pdmp_report* report);
PDMP_API double pdmp_report_wall_seconds(const pdmp_report* report);
/* JSON report text, owned by the report. */
PDMP_API const char* pdmp_report_json(const pdmp_report* report);
PDMP_API void pdmp_report_free(pdmp_report* report);

/* Closed-form quantities. */
PDMP_API pdmp_status pdmp_storage_mean(double x, double t, double alpha, double beta, double* out);
PDMP_API pdmp_status pdmp_tcp_moment(int n, double x, double t, double lambda, double* out);
PDMP_API pdmp_status pdmp_lyapunov_g(double r, double* out);
PDMP_API pdmp_status pdmp_stability_threshold(double* out);

#ifdef __cplusplus
}
#endif

#endif
