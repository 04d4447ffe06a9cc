#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "pdmp/experiment.hpp"
#include "pdmp/stats.hpp"

namespace pdmp::detail {

/// Monte Carlo rows pass within this many standard errors.
inline constexpr double kSeMultiplier = 3.0;
/// Added to every SE-based tolerance so that exact (zero-variance) cases
/// compare up to rounding.
inline constexpr double kRoundingFloor = 1e-12;
/// KS statistic limit of the invariant-law checks.
inline constexpr double kKsLimit = 0.02;

struct RunContext {
  const ExperimentConfig& config;
  unsigned workers;
  std::vector<ReportRow>& rows;
  std::vector<OutputFile>& files;
};

ReportRow check_within_se(std::string name, const MeanEstimate& m, double oracle, std::string note = {});
ReportRow check_below(std::string name, double estimate, double bound, std::string note = {});
ReportRow check_close(std::string name, double estimate, double oracle, double tolerance, std::string note = {});
ReportRow check_flag(std::string name, bool ok, std::string note = {});
ReportRow info_row(std::string name, double estimate, std::optional<double> se = {}, std::string note = {});
ReportRow failed_row(std::string name, const std::exception& e);

std::string csv_line(std::initializer_list<double> values);
std::string label(double v);

void run_simulate(RunContext& ctx);
void run_couple(RunContext& ctx);
void run_invariant_check(RunContext& ctx);
void run_moments(RunContext& ctx);
void run_lyapunov(RunContext& ctx);
void run_stability(RunContext& ctx);
void run_gcurve(RunContext& ctx);
void run_eigen(RunContext& ctx);
void run_property_suite(RunContext& ctx);

}  // namespace pdmp::detail
