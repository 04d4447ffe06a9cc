#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pdmp/random.hpp"
#include "pdmp/state.hpp"

namespace pdmp {

/// Any coordinate beyond this magnitude ends a run as "exploded".
inline constexpr double kExplosionThreshold = 1e12;

/// Generic-ODE flows use RK4 steps no longer than this.
inline constexpr double kMaxRk4Step = 1e-3;

enum class FlowKind { closed_form, affine, generic };

using VectorField =
    std::function<void(std::size_t mode, std::span<const double> x, std::span<double> dx)>;
using ClosedFormFlow = std::function<void(std::size_t mode, std::span<const double> x, double dt,
                                          std::span<double> out)>;

/// F(x) = matrix * x + offset.
struct AffineField {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd offset;
};

struct FlowSpec {
  FlowKind kind = FlowKind::closed_form;
  ClosedFormFlow closed_form;
  std::vector<AffineField> affine;  // one per mode when kind == affine
  VectorField field;                // required for generic; optional otherwise
};

/// How the jump rate behaves along a deterministic segment.
///   constant            - fixed along the flow from the current state
///   piecewise_constant  - constant on pieces reported by RateSpec::piece
///   bounded             - arbitrary; sampled by thinning against segment_bound
enum class RateKind { constant, piecewise_constant, bounded };

/// Rate on the open flow interval (0, length) from the current state.
struct RatePiece {
  double rate;
  double length;
};

struct RateSpec {
  RateKind kind = RateKind::constant;
  std::function<double(const HybridState&)> rate;
  std::function<double(const HybridState&, double lookahead)> segment_bound;
  std::function<RatePiece(const HybridState&)> piece;
};

struct KernelSpec {
  std::function<HybridState(const HybridState&, RandomSource&)> sample;
};

struct ModeTransition {
  std::size_t target;
  double rate;
};

/// Outgoing mode-switch rates at a state, sorted by ascending target mode.
class SwitchRates {
 public:
  static constexpr std::size_t kCapacity = 8;

  void clear() noexcept { count_ = 0; }
  void push(std::size_t target, double rate);
  std::size_t size() const noexcept { return count_; }
  const ModeTransition& operator[](std::size_t k) const noexcept { return items_[k]; }
  double total() const noexcept;

  /// Inverts the cumulative rate table at u * total(); u in (0, 1).
  std::size_t sample_target(double u) const;

 private:
  std::array<ModeTransition, kCapacity> items_{};
  std::size_t count_ = 0;
};

/// Flow, jump rate and transition kernel of one PDMP.
struct PdmpModel {
  std::string name;
  std::size_t dim = 1;
  std::size_t mode_count = 1;
  FlowSpec flow;
  RateSpec rate;
  KernelSpec kernel;
  /// Set for models whose jumps only change the mode; rate and kernel are
  /// then derived from it.
  std::function<void(const HybridState&, SwitchRates&)> mode_rates;
  /// Region used by sampling-based diagnostics, one (lo, hi) per coordinate.
  std::vector<std::pair<double, double>> sampling_box;

  void check_state(const HybridState& state) const;
};

/// Fills rate and kernel of a mode-switching model from its mode_rates.
void attach_mode_switching(PdmpModel& model, RateKind kind);

HybridState advance_flow(const PdmpModel& model, const HybridState& state, double dt);

struct Jump {
  double dt;
  HybridState pre;
  HybridState post;
};

/// First jump within max_dt, or nullopt when none occurs before max_dt.
std::optional<Jump> sample_next_jump(const PdmpModel& model, const HybridState& state,
                                     RandomSource& rng, double max_dt);

struct JumpEvent {
  double time;
  HybridState pre;
  HybridState post;
};

enum class Outcome { completed, exploded };

struct Trajectory {
  HybridState initial;
  double horizon = 0.0;
  std::vector<JumpEvent> events;
  HybridState terminal;
  Outcome outcome = Outcome::completed;
  double end_time = 0.0;  // horizon, or the explosion time

  /// Number of events with time <= t.
  std::size_t events_until(double t) const;
  /// Reconstructs the path at time t in [0, end_time].
  HybridState state_at(const PdmpModel& model, double t) const;
};

Trajectory simulate(const PdmpModel& model, const HybridState& init, double horizon,
                    RandomSource& rng);

struct RunSummary {
  HybridState terminal;
  std::size_t event_count = 0;
  Outcome outcome = Outcome::completed;
  double end_time = 0.0;
};

/// Same law as simulate() without keeping the event log.
RunSummary run_to(const PdmpModel& model, const HybridState& init, double horizon,
                  RandomSource& rng);

struct SampledPath {
  std::vector<HybridState> states;  // one per requested time reached
  std::size_t event_count = 0;
  Outcome outcome = Outcome::completed;
  double end_time = 0.0;
};

/// Records the state at each of the sorted times (the last one is the horizon).
SampledPath simulate_sampled(const PdmpModel& model, const HybridState& init,
                             std::span<const double> times, RandomSource& rng);

}  // namespace pdmp
