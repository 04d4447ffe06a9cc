#include <doctest.h>

#include <cmath>
#include <vector>

#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"
#include "pdmp/models.hpp"
#include "pdmp/oracles.hpp"
#include "pdmp/stats.hpp"

using namespace pdmp;

namespace {

constexpr double kSe = 3.0;  // standard errors allowed in Monte Carlo checks

std::vector<ModelSpec> every_variant() {
  return {StorageParams{}, BanditParams{}, TcpParams{}, AimdParams{}, SwitchedLinearParams{},
          Dim1Params{},    PlanarRotationParams{}, TelegraphParams{}, MorrisLecarParams{}};
}

}  // namespace

TEST_CASE("storage flow decays exponentially") {
  const PdmpModel m = build_model(StorageParams{1.0, 1.0});
  CHECK(advance_flow(m, HybridState({1.0}), 1.0)[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("tcp flow grows linearly") {
  const PdmpModel m = build_model(TcpParams{1.0});
  CHECK(advance_flow(m, HybridState({0.5}), 2.0)[0] == 2.5);
}

TEST_CASE("zero time step leaves every model's state unchanged") {
  for (const auto& spec : every_variant()) {
    const PdmpModel m = build_model(spec);
    HybridState s = m.dim == 2 ? HybridState({0.3, -0.7}) : HybridState({0.4});
    s.set_mode(m.mode_count - 1);
    CHECK(advance_flow(m, s, 0.0) == s);
  }
}

TEST_CASE("affine and generic flows agree with the closed form") {
  PdmpModel closed = build_model(SwitchedLinearParams{0.3, 1.0});
  REQUIRE(closed.flow.kind == FlowKind::closed_form);
  PdmpModel generic = closed;
  generic.flow.kind = FlowKind::generic;
  PdmpModel affine = closed;
  affine.flow.kind = FlowKind::affine;
  for (std::size_t mode = 0; mode < 2; ++mode) {
    Eigen::MatrixXd a(2, 2);
    a << -0.3, mode == 0 ? 1.0 : 0.0, mode == 0 ? 0.0 : -1.0, -0.3;
    affine.flow.affine.push_back({a, Eigen::VectorXd::Zero(2)});
  }
  const HybridState s({0.8, -0.2}, 1);
  const HybridState want = advance_flow(closed, s, 1.7);
  const HybridState got_affine = advance_flow(affine, s, 1.7);
  const HybridState got_generic = advance_flow(generic, s, 1.7);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(got_affine[j] == doctest::Approx(want[j]).epsilon(1e-12));
    CHECK(got_generic[j] == doctest::Approx(want[j]).epsilon(1e-9));
  }
}

TEST_CASE("random sources are reproducible and streams differ") {
  RandomSource a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  bool differs_c = false, differs_d = false;
  for (int k = 0; k < 100; ++k) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    differs_c = differs_c || u != c.uniform();
    differs_d = differs_d || u != d.uniform();
  }
  CHECK(differs_c);
  CHECK(differs_d);
}

TEST_CASE("switch table inverts its cumulative rates in target order") {
  SwitchRates t;
  t.push(2, 3.0);
  t.push(5, 1.0);
  REQUIRE(t.size() == 2);
  CHECK(t[0].target == 2);
  CHECK(t.total() == 4.0);
  CHECK(t.sample_target(0.5) == 2);
  CHECK(t.sample_target(0.74) == 2);
  CHECK(t.sample_target(0.76) == 5);
}

TEST_CASE("constant rate waiting times have mean 1") {
  const PdmpModel m = build_model(TcpParams{1.0});
  RandomSource rng(11, 0);
  std::vector<double> waits(1000000);
  for (auto& w : waits) w = sample_next_jump(m, HybridState({1.0}), rng, 1e9)->dt;
  const MeanEstimate e = mean_estimate(waits);
  CHECK(std::abs(e.mean - 1.0) <= kSe * e.se);
}

TEST_CASE("telegraph moving away from zero waits Exp(b)") {
  const PdmpModel m = build_model(TelegraphParams{1.0, 2.0});
  RandomSource rng(12, 0);
  std::vector<double> waits(20000);
  for (auto& w : waits) w = sample_next_jump(m, HybridState({1.0}, 1), rng, 1e9)->dt;
  const double d = ks_statistic(waits, [](double t) { return exponential_cdf(t, 2.0); });
  CHECK(kolmogorov_pvalue(d, static_cast<double>(waits.size())) > 0.01);
}

TEST_CASE("zero rate never jumps and flows to the horizon") {
  PdmpModel m = build_model(TcpParams{1.0});
  m.rate.rate = [](const HybridState&) { return 0.0; };
  RandomSource rng(13, 0);
  CHECK_FALSE(sample_next_jump(m, HybridState({1.0}), rng, 1e6).has_value());
  const Trajectory t = simulate(m, HybridState({1.0}), 3.0, rng);
  CHECK(t.events.empty());
  CHECK(t.terminal[0] == 4.0);
}

TEST_CASE("storage mean at t = 1 from 0") {
  const PdmpModel m = build_model(StorageParams{1.0, 1.0});
  std::vector<double> x(100000);
  for (std::size_t k = 0; k < x.size(); ++k) {
    RandomSource rng(14, k);
    x[k] = run_to(m, HybridState({0.0}), 1.0, rng).terminal[0];
  }
  const MeanEstimate e = mean_estimate(x);
  CHECK(std::abs(e.mean - (1.0 - std::exp(-1.0))) <= kSe * e.se);
}

TEST_CASE("switched linear growth sign matches the quadrature exponent") {
  const PdmpModel m = build_model(SwitchedLinearParams{0.1, 5.0});
  RandomSource rng(15, 0);
  const RunSummary s = run_to(m, HybridState({1.0, 0.0}), 1000.0, rng);
  const double rate = std::log(s.terminal.norm()) / 1000.0;
  const double l = lyapunov_quadrature(0.1, 5.0).l_value;
  CHECK(std::signbit(rate) == std::signbit(l));
}

TEST_CASE("storage generator applied to the identity") {
  // (E_x f(X_h) - f(x)) / h at x = 2 for f(x) = x; exact value -x + alpha/beta.
  const double h = 1e-6;
  CHECK((storage_mean(2.0, h, 1.0, 1.0) - 2.0) / h == doctest::Approx(-1.0).epsilon(1e-5));
  const PdmpModel m = build_model(StorageParams{1.0, 1.0});
  const double step = 0.01;
  std::vector<double> diffs(1000000);
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    RandomSource rng(16, k);
    diffs[k] = (run_to(m, HybridState({2.0}), step, rng).terminal[0] - 2.0) / step;
  }
  const MeanEstimate e = mean_estimate(diffs);
  CHECK(std::abs(e.mean + 1.0) <= kSe * e.se + step);
}

TEST_CASE("run_to and simulate follow the same path") {
  for (const auto& spec : every_variant()) {
    const PdmpModel m = build_model(spec);
    const HybridState s = m.dim == 2 ? HybridState({0.3, -0.7}) : HybridState({0.4});
    RandomSource a(17, 1), b(17, 1);
    const Trajectory t = simulate(m, s, 10.0, a);
    const RunSummary r = run_to(m, s, 10.0, b);
    CHECK(t.terminal == r.terminal);
    CHECK(t.events.size() == r.event_count);
    CHECK(t.state_at(m, 10.0) == t.terminal);
  }
}

TEST_CASE("sampled path records the requested times") {
  const PdmpModel m = build_model(TcpParams{1.0});
  RandomSource a(18, 0), b(18, 0);
  const std::vector<double> times{0.5, 1.0, 4.0};
  const SampledPath p = simulate_sampled(m, HybridState({1.0}), times, a);
  const Trajectory t = simulate(m, HybridState({1.0}), 4.0, b);
  REQUIRE(p.states.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(p.states[k] == t.state_at(m, times[k]));
}

TEST_CASE("runs beyond the explosion threshold are flagged") {
  PdmpModel m = build_model(StorageParams{1.0, 1.0});
  m.flow.closed_form = [](std::size_t, std::span<const double> x, double dt, std::span<double> out) {
    out[0] = x[0] * std::exp(30.0 * dt);
  };
  m.rate.rate = [](const HybridState&) { return 0.0; };
  RandomSource rng(19, 0);
  CHECK(simulate(m, HybridState({1.0}), 2.0, rng).outcome == Outcome::exploded);
}

TEST_CASE("an understated bound is reported, not sampled through") {
  PdmpModel m = build_model(BanditParams{});
  m.rate.segment_bound = [](const HybridState&, double) { return 1e-3; };
  RandomSource rng(20, 0);
  bool raised = false;
  try {
    for (int k = 0; k < 1000; ++k) (void)sample_next_jump(m, HybridState({5.0}), rng, 1e6);
  } catch (const Error& e) {
    raised = e.code() == ErrorCode::bound_violation;
  }
  CHECK(raised);
}

TEST_CASE("state of the wrong dimension is a contract violation") {
  const PdmpModel m = build_model(TcpParams{1.0});
  CHECK_THROWS_AS(advance_flow(m, HybridState({1.0, 2.0}), 1.0), Error);
}
