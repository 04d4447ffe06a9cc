#include "pdmp/pdmp.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>
#include <thread>

#include "pdmp/error.hpp"
#include "pdmp/experiment.hpp"
#include "pdmp/oracles.hpp"

struct pdmp_config {
  pdmp::ExperimentConfig value;
};

struct pdmp_report {
  pdmp::ExperimentReport value;
  std::string json;
};

namespace {

thread_local std::string last_error;

pdmp_status status_of(pdmp::ErrorCode code) {
  switch (code) {
    case pdmp::ErrorCode::contract_violation: return PDMP_CONTRACT_VIOLATION;
    case pdmp::ErrorCode::domain_error: return PDMP_DOMAIN_ERROR;
    case pdmp::ErrorCode::numerical_overflow: return PDMP_NUMERICAL_OVERFLOW;
    case pdmp::ErrorCode::bound_violation: return PDMP_BOUND_VIOLATION;
    case pdmp::ErrorCode::quadrature_failure: return PDMP_QUADRATURE_FAILURE;
    case pdmp::ErrorCode::parse_error: return PDMP_PARSE_ERROR;
    case pdmp::ErrorCode::io_error: return PDMP_IO_ERROR;
    case pdmp::ErrorCode::unsupported_model: return PDMP_UNSUPPORTED_MODEL;
  }
  return PDMP_INTERNAL_ERROR;
}

// Runs f, translating exceptions into status codes.
template <class F>
pdmp_status guard(F&& f) noexcept {
  try {
    f();
    last_error.clear();
    return PDMP_OK;
  } catch (const pdmp::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown exception";
  }
  return PDMP_INTERNAL_ERROR;
}

pdmp_status invalid(const char* what) {
  last_error = what;
  return PDMP_INVALID_ARGUMENT;
}

double or_nan(const std::optional<double>& v) { return v ? *v : std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

extern "C" {

const char* pdmp_last_error(void) { return last_error.c_str(); }

const char* pdmp_status_name(pdmp_status status) {
  switch (status) {
    case PDMP_OK: return "ok";
    case PDMP_INVALID_ARGUMENT: return "invalid_argument";
    case PDMP_INTERNAL_ERROR: return "internal_error";
    default: break;
  }
  if (status > PDMP_OK && status < PDMP_INVALID_ARGUMENT)
    return pdmp::to_string(static_cast<pdmp::ErrorCode>(status - 1));
  return "unknown";
}

pdmp_status pdmp_config_parse(const char* text, pdmp_config** out) {
  if (text == nullptr || out == nullptr) return invalid("null argument");
  *out = nullptr;
  return guard([&] { *out = new pdmp_config{pdmp::parse_config(text)}; });
}

pdmp_status pdmp_config_load(const char* path, pdmp_config** out) {
  if (path == nullptr || out == nullptr) return invalid("null argument");
  *out = nullptr;
  return guard([&] { *out = new pdmp_config{pdmp::load_config(path)}; });
}

pdmp_status pdmp_config_set_seed(pdmp_config* config, uint64_t seed) {
  if (config == nullptr) return invalid("null config");
  config->value.seed = seed;
  config->value.entries["seed"] = pdmp::ConfigValue{std::to_string(seed), config->value.entries["seed"].line};
  return PDMP_OK;
}

pdmp_status pdmp_config_kind(const pdmp_config* config, char* buf, size_t size) {
  if (config == nullptr || buf == nullptr || size == 0) return invalid("null argument");
  const std::string kind = pdmp::to_string(config->value.kind);
  if (kind.size() + 1 > size) return invalid("buffer too small");
  std::memcpy(buf, kind.c_str(), kind.size() + 1);
  return PDMP_OK;
}

void pdmp_config_free(pdmp_config* config) { delete config; }

pdmp_status pdmp_run(const pdmp_config* config, unsigned workers, pdmp_report** out) {
  if (config == nullptr || out == nullptr) return invalid("null argument");
  *out = nullptr;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  return guard([&] {
    auto* report = new pdmp_report{pdmp::run_experiment(config->value, workers), {}};
    report->json = report->value.to_json();
    *out = report;
  });
}

pdmp_status pdmp_report_write(const pdmp_report* report, const char* dir) {
  if (report == nullptr || dir == nullptr) return invalid("null argument");
  return guard([&] { pdmp::write_report(report->value, dir); });
}

size_t pdmp_report_row_count(const pdmp_report* report) { return report ? report->value.rows.size() : 0; }

pdmp_status pdmp_report_row(const pdmp_report* report, size_t index, pdmp_row* out) {
  if (report == nullptr || out == nullptr) return invalid("null argument");
  if (index >= report->value.rows.size()) return invalid("row index out of range");
  const pdmp::ReportRow& row = report->value.rows[index];
  out->name = row.name.c_str();
  out->estimate = or_nan(row.estimate);
  out->se = or_nan(row.se);
  out->oracle = or_nan(row.oracle);
  out->bound = or_nan(row.bound);
  out->tolerance = or_nan(row.tolerance);
  out->verdict = row.verdict == pdmp::Verdict::pass ? PDMP_PASS
                 : row.verdict == pdmp::Verdict::fail ? PDMP_FAIL
                                                      : PDMP_INFO;
  out->note = row.note.c_str();
  return PDMP_OK;
}

int pdmp_report_passed(const pdmp_report* report) { return report != nullptr && report->value.passed(); }

double pdmp_report_wall_seconds(const pdmp_report* report) {
  return report ? report->value.wall_seconds : std::numeric_limits<double>::quiet_NaN();
}

const char* pdmp_report_json(const pdmp_report* report) { return report ? report->json.c_str() : ""; }

void pdmp_report_free(pdmp_report* report) { delete report; }

pdmp_status pdmp_storage_mean(double x, double t, double alpha, double beta, double* out) {
  if (out == nullptr) return invalid("null argument");
  return guard([&] { *out = pdmp::storage_mean(x, t, alpha, beta); });
}

pdmp_status pdmp_tcp_moment(int n, double x, double t, double lambda, double* out) {
  if (out == nullptr) return invalid("null argument");
  return guard([&] { *out = pdmp::tcp_moment(n, x, t, lambda); });
}

pdmp_status pdmp_lyapunov_g(double r, double* out) {
  if (out == nullptr) return invalid("null argument");
  return guard([&] { *out = pdmp::lyapunov_g(r); });
}

pdmp_status pdmp_stability_threshold(double* out) {
  if (out == nullptr) return invalid("null argument");
  return guard([&] { *out = pdmp::stability_threshold(); });
}

}  // extern "C"
