#include "pdmp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "pdmp/error.hpp"
#include "thinning_window.hpp"

namespace pdmp {

namespace {

// Relative slack for floating-point ties between a rate and its bound.
constexpr double kBoundSlack = 1e-12;

void rk4_step(const VectorField& field, std::size_t mode, std::span<double> x, double h) {
  const std::size_t d = x.size();
  std::array<double, kMaxDim> k1{}, k2{}, k3{}, k4{}, tmp{};
  std::span<double> tmp_s(tmp.data(), d);
  field(mode, x, std::span<double>(k1.data(), d));
  for (std::size_t j = 0; j < d; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
  field(mode, tmp_s, std::span<double>(k2.data(), d));
  for (std::size_t j = 0; j < d; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
  field(mode, tmp_s, std::span<double>(k3.data(), d));
  for (std::size_t j = 0; j < d; ++j) tmp[j] = x[j] + h * k3[j];
  field(mode, tmp_s, std::span<double>(k4.data(), d));
  for (std::size_t j = 0; j < d; ++j) x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
}

HybridState rk4_solve(const VectorField& field, const HybridState& state, double dt, std::size_t steps) {
  HybridState out = state;
  const double h = dt / static_cast<double>(steps);
  for (std::size_t s = 0; s < steps; ++s) rk4_step(field, state.mode(), out.position(), h);
  return out;
}

// Fixed-step RK4 with step <= kMaxRk4Step, halved until two successive
// resolutions agree, then Richardson-extrapolated.
HybridState rk4_flow(const VectorField& field, const HybridState& state, double dt) {
  std::size_t steps = static_cast<std::size_t>(std::ceil(dt / kMaxRk4Step));
  steps = std::max<std::size_t>(steps, 1);
  HybridState coarse = rk4_solve(field, state, dt, steps);
  for (int level = 0; level < 8; ++level) {
    steps *= 2;
    HybridState fine = rk4_solve(field, state, dt, steps);
    double diff = 0.0;
    for (std::size_t j = 0; j < state.dim(); ++j) diff = std::max(diff, std::abs(fine[j] - coarse[j]));
    const bool converged = diff <= 1e-12 * (1.0 + fine.max_abs());
    for (std::size_t j = 0; j < state.dim(); ++j) fine[j] += (fine[j] - coarse[j]) / 15.0;
    if (converged || !fine.finite()) return fine;
    coarse = fine;
  }
  return coarse;
}

HybridState affine_flow(const AffineField& field, const HybridState& state, double dt) {
  const auto d = static_cast<Eigen::Index>(state.dim());
  Eigen::MatrixXd augmented = Eigen::MatrixXd::Zero(d + 1, d + 1);
  augmented.topLeftCorner(d, d) = field.matrix * dt;
  augmented.topRightCorner(d, 1) = field.offset * dt;
  const Eigen::MatrixXd propagator = augmented.exp();
  Eigen::VectorXd x(d);
  for (Eigen::Index j = 0; j < d; ++j) x(j) = state[static_cast<std::size_t>(j)];
  const Eigen::VectorXd y = propagator.topLeftCorner(d, d) * x + propagator.topRightCorner(d, 1);
  HybridState out = state;
  for (Eigen::Index j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] = y(j);
  return out;
}

Jump make_jump(const PdmpModel& model, const HybridState& pre, double dt, RandomSource& rng) {
  HybridState post = model.kernel.sample(pre, rng);
  return Jump{dt, pre, post};
}

std::optional<Jump> jump_constant(const PdmpModel& model, const HybridState& state, RandomSource& rng,
                                  double max_dt) {
  const double rate = model.rate.rate(state);
  if (!(rate > 0.0)) return std::nullopt;
  const double dt = rng.exponential() / rate;
  if (dt > max_dt) return std::nullopt;
  return make_jump(model, advance_flow(model, state, dt), dt, rng);
}

// Exact inversion of the integrated rate over constant pieces.
std::optional<Jump> jump_piecewise(const PdmpModel& model, const HybridState& state, RandomSource& rng,
                                   double max_dt) {
  double budget = rng.exponential();
  double elapsed = 0.0;
  HybridState current = state;
  while (elapsed < max_dt) {
    const RatePiece piece = model.rate.piece(current);
    if (!(piece.length > 0.0)) fail(ErrorCode::contract_violation, "rate piece of non-positive length");
    const double span = std::min(piece.length, max_dt - elapsed);
    if (piece.rate > 0.0 && piece.rate * span >= budget) {
      const double dt = budget / piece.rate;
      return make_jump(model, advance_flow(model, current, dt), elapsed + dt, rng);
    }
    budget -= piece.rate * span;
    elapsed += span;
    if (elapsed >= max_dt) break;
    current = advance_flow(model, current, span);
  }
  return std::nullopt;
}

// Thinning against segment_bound over short lookahead windows.
std::optional<Jump> jump_thinning(const PdmpModel& model, const HybridState& state, RandomSource& rng,
                                  double max_dt) {
  double elapsed = 0.0;
  HybridState current = state;
  while (elapsed < max_dt) {
    const auto [window, bound] = detail::thinning_window(
        [&](double w) { return model.rate.segment_bound(current, w); }, max_dt - elapsed);
    if (!std::isfinite(bound) || bound < 0.0)
      fail(ErrorCode::bound_violation, "segment bound is not a finite nonnegative number");
    if (bound == 0.0) {
      elapsed += window;
      if (elapsed >= max_dt) break;
      current = advance_flow(model, current, window);
      continue;
    }
    const double proposal = rng.exponential() / bound;
    if (proposal >= window) {
      elapsed += window;
      if (elapsed >= max_dt) break;
      current = advance_flow(model, current, window);
      continue;
    }
    current = advance_flow(model, current, proposal);
    elapsed += proposal;
    const double rate = model.rate.rate(current);
    if (rate > bound * (1.0 + kBoundSlack))
      fail(ErrorCode::bound_violation, "jump rate " + std::to_string(rate) + " exceeds segment bound " +
                                           std::to_string(bound) + " in model " + model.name);
    if (rng.uniform() * bound <= rate) return make_jump(model, current, elapsed, rng);
  }
  return std::nullopt;
}

bool beyond_threshold(const HybridState& s) { return !s.finite() || s.max_abs() > kExplosionThreshold; }

// Drives one trajectory. on_segment(start, t0, t1, final) sees every
// deterministic piece [t0, t1) before the jump at t1 (or up to the horizon when
// final); on_event(time, pre, post) sees each jump.
template <class OnSegment, class OnEvent>
RunSummary drive(const PdmpModel& model, const HybridState& init, double horizon, RandomSource& rng,
                 OnSegment&& on_segment, OnEvent&& on_event) {
  require(horizon > 0.0, "simulation horizon must be positive");
  model.check_state(init);
  RunSummary summary;
  HybridState current = init;
  double t = 0.0;
  try {
    while (true) {
      const double remaining = horizon - t;
      std::optional<Jump> jump;
      if (remaining > 0.0) jump = sample_next_jump(model, current, rng, remaining);
      if (!jump) {
        on_segment(current, t, horizon, true);
        current = advance_flow(model, current, std::max(remaining, 0.0));
        t = horizon;
        if (beyond_threshold(current)) summary.outcome = Outcome::exploded;
        break;
      }
      const double when = std::min(t + jump->dt, horizon);
      on_segment(current, t, when, false);
      t = when;
      ++summary.event_count;
      on_event(t, jump->pre, jump->post);
      current = jump->post;
      if (beyond_threshold(jump->pre) || beyond_threshold(current)) {
        summary.outcome = Outcome::exploded;
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::numerical_overflow) throw;
    summary.outcome = Outcome::exploded;
  }
  summary.terminal = current;
  summary.end_time = t;
  return summary;
}

}  // namespace

void SwitchRates::push(std::size_t target, double rate) {
  require(count_ < kCapacity, "too many mode transitions");
  require(count_ == 0 || items_[count_ - 1].target < target, "mode transitions must be sorted by target");
  items_[count_++] = ModeTransition{target, rate};
}

double SwitchRates::total() const noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < count_; ++k) s += items_[k].rate;
  return s;
}

std::size_t SwitchRates::sample_target(double u) const {
  require(count_ > 0, "no mode transitions to sample");
  const double level = u * total();
  double cumulative = 0.0;
  for (std::size_t k = 0; k < count_; ++k) {
    cumulative += items_[k].rate;
    if (level < cumulative) return items_[k].target;
  }
  // u * total rounded onto the upper edge: take the last positive-rate target.
  for (std::size_t k = count_; k-- > 0;)
    if (items_[k].rate > 0.0) return items_[k].target;
  return items_[count_ - 1].target;
}

void PdmpModel::check_state(const HybridState& state) const {
  if (state.dim() != dim)
    fail(ErrorCode::contract_violation, "state dimension " + std::to_string(state.dim()) + " does not match model " +
                                            name + " dimension " + std::to_string(dim));
  if (state.mode() >= mode_count)
    fail(ErrorCode::contract_violation,
         "mode index " + std::to_string(state.mode()) + " out of range for model " + name);
}

void attach_mode_switching(PdmpModel& model, RateKind kind) {
  require(static_cast<bool>(model.mode_rates), "attach_mode_switching needs mode_rates");
  model.rate.kind = kind;
  auto rates = model.mode_rates;
  model.rate.rate = [rates](const HybridState& s) {
    SwitchRates table;
    rates(s, table);
    return table.total();
  };
  model.kernel.sample = [rates](const HybridState& s, RandomSource& rng) {
    SwitchRates table;
    rates(s, table);
    HybridState out = s;
    out.set_mode(table.sample_target(rng.uniform()));
    return out;
  };
}

HybridState advance_flow(const PdmpModel& model, const HybridState& state, double dt) {
  require(dt >= 0.0, "advance_flow called with negative dt");
  model.check_state(state);
  if (dt == 0.0) return state;
  HybridState out = state;
  switch (model.flow.kind) {
    case FlowKind::closed_form:
      model.flow.closed_form(state.mode(), state.position(), dt, out.position());
      break;
    case FlowKind::affine:
      out = affine_flow(model.flow.affine.at(state.mode()), state, dt);
      break;
    case FlowKind::generic:
      out = rk4_flow(model.flow.field, state, dt);
      break;
  }
  if (!out.finite())
    fail(ErrorCode::numerical_overflow, "non-finite flow result in model " + model.name);
  return out;
}

std::optional<Jump> sample_next_jump(const PdmpModel& model, const HybridState& state, RandomSource& rng,
                                     double max_dt) {
  require(max_dt > 0.0, "sample_next_jump requires max_dt > 0");
  model.check_state(state);
  switch (model.rate.kind) {
    case RateKind::constant: return jump_constant(model, state, rng, max_dt);
    case RateKind::piecewise_constant: return jump_piecewise(model, state, rng, max_dt);
    case RateKind::bounded: return jump_thinning(model, state, rng, max_dt);
  }
  return std::nullopt;
}

std::size_t Trajectory::events_until(double t) const {
  const auto it = std::upper_bound(events.begin(), events.end(), t,
                                   [](double value, const JumpEvent& e) { return value < e.time; });
  return static_cast<std::size_t>(it - events.begin());
}

HybridState Trajectory::state_at(const PdmpModel& model, double t) const {
  require(t >= 0.0 && t <= end_time, "state_at time outside the simulated range");
  const std::size_t k = events_until(t);
  if (k == 0) return advance_flow(model, initial, t);
  const JumpEvent& e = events[k - 1];
  return advance_flow(model, e.post, t - e.time);
}

Trajectory simulate(const PdmpModel& model, const HybridState& init, double horizon, RandomSource& rng) {
  Trajectory traj;
  traj.initial = init;
  traj.horizon = horizon;
  const RunSummary summary = drive(
      model, init, horizon, rng, [](const HybridState&, double, double, bool) {},
      [&](double t, const HybridState& pre, const HybridState& post) {
        traj.events.push_back(JumpEvent{t, pre, post});
      });
  traj.terminal = summary.terminal;
  traj.outcome = summary.outcome;
  traj.end_time = summary.end_time;
  return traj;
}

RunSummary run_to(const PdmpModel& model, const HybridState& init, double horizon, RandomSource& rng) {
  return drive(
      model, init, horizon, rng, [](const HybridState&, double, double, bool) {},
      [](double, const HybridState&, const HybridState&) {});
}

SampledPath simulate_sampled(const PdmpModel& model, const HybridState& init, std::span<const double> times,
                             RandomSource& rng) {
  require(!times.empty(), "simulate_sampled needs at least one time");
  require(std::is_sorted(times.begin(), times.end()) && times.front() >= 0.0,
          "sample times must be sorted and nonnegative");
  SampledPath path;
  path.states.reserve(times.size());
  std::size_t next = 0;
  const RunSummary summary = drive(
      model, init, times.back(), rng,
      [&](const HybridState& start, double t0, double t1, bool final) {
        while (next < times.size() && (times[next] < t1 || (final && times[next] <= t1))) {
          path.states.push_back(advance_flow(model, start, std::max(times[next] - t0, 0.0)));
          ++next;
        }
      },
      [](double, const HybridState&, const HybridState&) {});
  path.event_count = summary.event_count;
  path.outcome = summary.outcome;
  path.end_time = summary.end_time;
  return path;
}

}  // namespace pdmp
