#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pdmp/engine.hpp"

namespace pdmp {

/// Pharmacokinetic storage: decay at rate beta, Exp(1) intakes at rate alpha.
struct StorageParams {
  double alpha = 1.0;
  double beta = 1.0;
};

/// Two-armed bandit limit: drift 1 - p - p*y, jumps of size g at rate q*y/g.
struct BanditParams {
  double p = 0.5;
  double q = 0.25;
  double g = 1.0;
};

/// TCP window: unit growth, halving at constant rate lambda.
struct TcpParams {
  double lambda = 1.0;
};

enum class JumpMeasure { dirac, uniform, power };

/// AIMD: unit growth, x -> u*x with u ~ nu at rate
/// rate_base + rate_slope * x^rate_power (nondecreasing in x).
/// nu is given through its quantile function:
///   dirac:   nu_value
///   uniform: nu_low + (nu_high - nu_low) * u
///   power:   u^(1 / nu_shape), i.e. Beta(nu_shape, 1)
struct AimdParams {
  double rate_base = 1.0;
  double rate_slope = 0.0;
  double rate_power = 1.0;
  JumpMeasure measure = JumpMeasure::dirac;
  double nu_value = 0.5;
  double nu_low = 0.0;
  double nu_high = 1.0;
  double nu_shape = 1.0;

  double quantile(double u) const;
};

/// Planar linear system switched at rate r between
/// A0 = [[-a, 1], [0, -a]] and A1 = [[-a, 0], [-1, -a]].
struct SwitchedLinearParams {
  double alpha = 0.1;
  double r = 1.0;
};

/// One-dimensional switched pull toward 0 (mode 0) or 1 (mode 1).
struct Dim1Params {
  double alpha0 = 1.0;
  double alpha1 = 1.0;
  double lambda0 = 1.0;
  double lambda1 = 1.0;
};

/// Fields A x and A (x - a) with A = [[-1, -1], [1, -1]], a = (1, 0).
struct PlanarRotationParams {
  double lambda0 = 1.0;
  double lambda1 = 1.0;
};

/// Velocity jump process; mode 0 is v = -1, mode 1 is v = +1.
struct TelegraphParams {
  double a = 1.0;
  double b = 2.0;
};

/// Stochastic-channel Morris-Lecar neuron. Index 0 and 1 of the two-element
/// arrays are the two gated channel types; g and v also carry the leak (index 2).
struct MorrisLecarParams {
  double capacitance = 20.0;
  double current = 100.0;
  std::array<double, 3> g{4.4, 8.0, 2.0};
  std::array<double, 3> v{204.0, 0.0, 24.0};
  std::array<double, 2> c{0.01, 0.002};
  std::array<double, 2> v_mid{82.8, 86.0};
  std::array<double, 2> v_scale{18.0, 30.0};
  int channels = 5;
};

using ModelSpec = std::variant<StorageParams, BanditParams, TcpParams, AimdParams, SwitchedLinearParams,
                               Dim1Params, PlanarRotationParams, TelegraphParams, MorrisLecarParams>;

/// Variant tag as used in config files ("storage", "tcp", "morris-lecar", ...).
std::string variant_tag(const ModelSpec& spec);

/// Every violated parameter constraint, phrased "requires ...".
std::vector<std::string> constraint_violations(const ModelSpec& spec);

/// Throws Error(domain_error) listing the violated constraints.
void validate(const ModelSpec& spec);

PdmpModel build_model(const ModelSpec& spec);

/// A key = value entry with the line it came from (0 when unknown).
struct ConfigValue {
  std::string text;
  int line = 0;
};
using KeyValues = std::map<std::string, ConfigValue, std::less<>>;

/// Parameter keys accepted for a variant tag; throws on an unknown tag.
std::vector<std::string> model_keys(std::string_view tag);

/// Keys that must be present; the rest have defaults (aimd only).
std::vector<std::string> required_model_keys(std::string_view tag);

/// Builds a spec from a tag and its parameter entries. Missing keys fall back
/// to the defaults above only when allow_defaults is set. Not validated.
ModelSpec model_spec_from_keys(std::string_view tag, const KeyValues& values, bool allow_defaults = false);

/// Canonical "key = value" serialization; variant line first.
std::string to_text(const ModelSpec& spec);
ModelSpec parse_model_spec(std::string_view text);

// Morris-Lecar helpers.

struct ChannelRates {
  double opening;  // alpha_i(V)
  double closing;  // beta_i(V)
};

/// Per-channel opening/closing rates for channel type 1 or 2.
ChannelRates morris_lecar_rates(double voltage, int channel, const MorrisLecarParams& params);

struct Interval {
  double lo;
  double hi;
};

/// Invariant voltage segment [0, max(V1, V2, V3 + (I + 1) / g3)].
Interval voltage_segment(const MorrisLecarParams& params);

std::size_t morris_lecar_mode(int open1, int open2, int channels);
std::pair<int, int> morris_lecar_occupancy(std::size_t mode, int channels);

/// dV/dt for fixed open-channel counts.
double morris_lecar_field(double voltage, int open1, int open2, const MorrisLecarParams& params);

// Worst trajectory of the deterministic switched system.

struct WorstCycle {
  double gamma_plus;
  double gamma_minus;
  double t1;
  double t2;
  double t3;
  std::array<double, 2> at_t1;
  std::array<double, 2> at_t2;
  std::array<double, 2> terminal;
  double growth;
};

WorstCycle worst_trajectory_cycle(double alpha);

struct ModeSegment {
  std::size_t mode;
  double duration;
};

/// Follows the flow of `model` through a fixed mode schedule.
HybridState follow_schedule(const PdmpModel& model, HybridState state, std::span<const ModeSegment> schedule);

/// Runs the worst-trajectory schedule from (0, 1) on the switched-linear model.
HybridState simulate_worst_trajectory(double alpha);

}  // namespace pdmp
