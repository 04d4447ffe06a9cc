#include "pdmp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "experiment_internal.hpp"
#include "pdmp/coupling.hpp"
#include "pdmp/error.hpp"
#include "pdmp/oracles.hpp"
#include "pdmp/stats.hpp"
#include "parallel.hpp"
#include "text_util.hpp"

namespace pdmp {

namespace detail {

ReportRow check_within_se(std::string name, const MeanEstimate& m, double oracle, std::string note) {
  ReportRow row;
  row.name = std::move(name);
  row.estimate = m.mean;
  row.se = m.se;
  row.oracle = oracle;
  row.tolerance = kSeMultiplier * m.se + kRoundingFloor * (1.0 + std::abs(oracle));
  row.verdict = std::abs(m.mean - oracle) <= *row.tolerance ? Verdict::pass : Verdict::fail;
  row.note = std::move(note);
  return row;
}

ReportRow check_below(std::string name, double estimate, double bound, std::string note) {
  ReportRow row;
  row.name = std::move(name);
  row.estimate = estimate;
  row.bound = bound;
  row.verdict = estimate < bound ? Verdict::pass : Verdict::fail;
  row.note = std::move(note);
  return row;
}

ReportRow check_close(std::string name, double estimate, double oracle, double tolerance, std::string note) {
  ReportRow row;
  row.name = std::move(name);
  row.estimate = estimate;
  row.oracle = oracle;
  row.tolerance = tolerance;
  row.verdict = std::abs(estimate - oracle) <= tolerance ? Verdict::pass : Verdict::fail;
  row.note = std::move(note);
  return row;
}

ReportRow check_flag(std::string name, bool ok, std::string note) {
  ReportRow row;
  row.name = std::move(name);
  row.estimate = ok ? 1.0 : 0.0;
  row.verdict = ok ? Verdict::pass : Verdict::fail;
  row.note = std::move(note);
  return row;
}

ReportRow info_row(std::string name, double estimate, std::optional<double> se, std::string note) {
  ReportRow row;
  row.name = std::move(name);
  row.estimate = estimate;
  row.se = se;
  row.verdict = Verdict::info;
  row.note = std::move(note);
  return row;
}

ReportRow failed_row(std::string name, const std::exception& e) {
  ReportRow row;
  row.name = std::move(name);
  row.verdict = Verdict::fail;
  row.note = e.what();
  return row;
}

std::string csv_line(std::initializer_list<double> values) {
  std::string out;
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    out += format_double(v);
    first = false;
  }
  out += '\n';
  return out;
}

std::string label(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

using namespace detail;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::info: return "info";
  }
  return "info";
}

bool ExperimentReport::passed() const {
  return std::none_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.verdict == Verdict::fail; });
}

std::string ExperimentReport::to_json() const {
  using nlohmann::ordered_json;
  auto number = [](const std::optional<double>& v) -> ordered_json {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
  };
  ordered_json j;
  j["name"] = config.name;
  j["kind"] = to_string(config.kind);
  j["seed"] = config.seed;
  ordered_json echo = ordered_json::object();
  for (const auto& [key, value] : config.entries) echo[key] = value.text;
  j["config"] = echo;
  ordered_json list = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row;
    row["name"] = r.name;
    row["estimate"] = number(r.estimate);
    row["se"] = number(r.se);
    row["oracle"] = number(r.oracle);
    row["bound"] = number(r.bound);
    row["tolerance"] = number(r.tolerance);
    row["verdict"] = to_string(r.verdict);
    row["note"] = r.note;
    list.push_back(row);
  }
  j["rows"] = list;
  j["passed"] = passed();
  return j.dump(2) + "\n";
}

ExperimentReport run_experiment(const ExperimentConfig& config, unsigned workers) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = config;
  report.workers = std::max(1u, workers);
  RunContext ctx{config, report.workers, report.rows, report.files};
  try {
    switch (config.kind) {
      case ExperimentKind::simulate: run_simulate(ctx); break;
      case ExperimentKind::couple: run_couple(ctx); break;
      case ExperimentKind::invariant_check: run_invariant_check(ctx); break;
      case ExperimentKind::moments: run_moments(ctx); break;
      case ExperimentKind::lyapunov: run_lyapunov(ctx); break;
      case ExperimentKind::stability: run_stability(ctx); break;
      case ExperimentKind::gcurve: run_gcurve(ctx); break;
      case ExperimentKind::eigen: run_eigen(ctx); break;
      case ExperimentKind::property_suite: run_property_suite(ctx); break;
    }
  } catch (const std::exception& e) {
    report.rows.push_back(failed_row("experiment aborted", e));
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report(const ExperimentReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create output directory " + dir + ": " + ec.message());
  auto put = [&](const std::string& suffix, const std::string& content) {
    const fs::path path = fs::path(dir) / (report.config.output + suffix);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    out << content;
    if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
  };
  put(".json", report.to_json());
  for (const auto& f : report.files) put(f.suffix, f.content);
  nlohmann::ordered_json meta;
  meta["wall_seconds"] = report.wall_seconds;
  meta["workers"] = report.workers;
  put(".meta.json", meta.dump(2) + "\n");
}

}  // namespace pdmp
