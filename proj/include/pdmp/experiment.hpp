#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdmp/models.hpp"

namespace pdmp {

enum class ExperimentKind {
  simulate,
  couple,
  invariant_check,
  moments,
  lyapunov,
  stability,
  gcurve,
  eigen,
  property_suite,
};

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::simulate;
  std::string name;    // report label; defaults to the kind
  std::string output;  // file prefix inside the output directory
  std::uint64_t seed = 0;
  std::optional<ModelSpec> model;
  KeyValues entries;  // every key = value line, echoed in the report

  std::size_t samples = 0;
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<double> x0;  // initial position (simulate, moments: list of starts)
  std::size_t mode0 = 0;
  std::string coupling;    // shared-noise | tv-storage | tv-tcp | switched
  std::vector<double> x, y;
  std::size_t x_mode = 0, y_mode = 0;
  std::vector<double> orders, stationary_orders, powers;
  std::optional<double> stationary_time;
  std::vector<double> alpha_grid, r_grid;
  double search_lo = 0.1, search_hi = 50.0;
  std::size_t bins = 50;
  std::size_t random_checks = 50;
  int max_order = 8;
  double lambda = 1.0;
};

/// Parses `key = value` lines (`#` comments). Throws Error(parse_error)
/// listing every unknown key, missing key and violated constraint, each with
/// its line number where one exists.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

enum class Verdict { pass, fail, info };
std::string to_string(Verdict v);

struct ReportRow {
  std::string name;
  std::optional<double> estimate;
  std::optional<double> se;
  std::optional<double> oracle;
  std::optional<double> bound;
  std::optional<double> tolerance;
  Verdict verdict = Verdict::info;
  std::string note;
};

struct OutputFile {
  std::string suffix;  // appended to the prefix, e.g. ".csv"
  std::string content;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  std::vector<OutputFile> files;  // data tables; the JSON report is added on write
  double wall_seconds = 0.0;
  unsigned workers = 1;

  bool passed() const;
  /// Deterministic JSON mirror of the report (no wall-clock data).
  std::string to_json() const;
};

/// Runs the experiment with `workers` threads; results depend only on the
/// config (and its seed), never on the worker count.
ExperimentReport run_experiment(const ExperimentConfig& config, unsigned workers = 1);

/// Writes <dir>/<prefix>.json, the data tables, and <dir>/<prefix>.meta.json
/// holding the wall-clock data. Throws Error(io_error) naming the path.
void write_report(const ExperimentReport& report, const std::string& dir);

}  // namespace pdmp
