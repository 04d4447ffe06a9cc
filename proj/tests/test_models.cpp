#include <doctest.h>

#include <cmath>
#include <string>

#include "pdmp/error.hpp"
#include "pdmp/models.hpp"
#include "pdmp/oracles.hpp"

using namespace pdmp;

TEST_CASE("telegraph flips at a toward zero and at b away from it") {
  const PdmpModel m = build_model(TelegraphParams{1.0, 2.0});
  CHECK(m.rate.piece(HybridState({1.0}, 1)).rate == 2.0);
  const RatePiece inward = m.rate.piece(HybridState({1.0}, 0));
  CHECK(inward.rate == 1.0);
  CHECK(inward.length == 1.0);
}

TEST_CASE("model parameter constraints") {
  MorrisLecarParams no_channels;
  no_channels.channels = 0;
  CHECK_THROWS_AS(validate(no_channels), Error);
  CHECK_THROWS_AS(build_model(no_channels), Error);
  try {
    validate(TelegraphParams{2.0, 1.0});
    FAIL("accepted a >= b");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain_error);
    CHECK(std::string(e.what()).find("requires a < b") != std::string::npos);
  }
  CHECK(constraint_violations(StorageParams{-1.0, 0.0}).size() >= 2);
}

TEST_CASE("channel rates at the midpoint voltage are (c, c)") {
  const MorrisLecarParams p;
  for (int ch : {1, 2}) {
    const ChannelRates r = morris_lecar_rates(p.v_mid[ch - 1], ch, p);
    CHECK(r.opening == doctest::Approx(p.c[ch - 1]).epsilon(1e-15));
    CHECK(r.closing == doctest::Approx(p.c[ch - 1]).epsilon(1e-15));
  }
}

TEST_CASE("channel rates are positive and sum to 2c cosh on the voltage segment") {
  const MorrisLecarParams p;
  const Interval seg = voltage_segment(p);
  for (int k = 0; k < 100; ++k) {
    const double v = seg.lo + (seg.hi - seg.lo) * k / 99.0;
    for (int ch : {1, 2}) {
      const ChannelRates r = morris_lecar_rates(v, ch, p);
      CHECK(r.opening > 0.0);
      CHECK(r.closing > 0.0);
      const double want = 2.0 * p.c[ch - 1] * std::cosh((v - p.v_mid[ch - 1]) / (2.0 * p.v_scale[ch - 1]));
      CHECK(std::abs(r.opening + r.closing - want) <= 1e-12 * want);
    }
  }
}

TEST_CASE("voltage segment from the parameters") {
  MorrisLecarParams p;
  p.v = {0.0, 0.0, 1.0};
  p.current = 0.0;
  p.g = {4.4, 8.0, 1.0};
  const Interval seg = voltage_segment(p);
  CHECK(seg.lo == 0.0);
  CHECK(seg.hi == 2.0);
  const Interval standard = voltage_segment(MorrisLecarParams{});
  CHECK(standard.hi == 204.0);
}

TEST_CASE("fields point inward at both ends of the voltage segment") {
  const MorrisLecarParams p;
  const Interval seg = voltage_segment(p);
  for (int n1 = 0; n1 <= p.channels; ++n1)
    for (int n2 = 0; n2 <= p.channels; ++n2) {
      CHECK(morris_lecar_field(seg.lo, n1, n2, p) >= 0.0);
      CHECK(morris_lecar_field(seg.hi, n1, n2, p) <= 0.0);
    }
}

TEST_CASE("mode index and channel occupancy are inverse") {
  for (int n1 = 0; n1 <= 5; ++n1)
    for (int n2 = 0; n2 <= 5; ++n2) {
      const auto [a, b] = morris_lecar_occupancy(morris_lecar_mode(n1, n2, 5), 5);
      CHECK(a == n1);
      CHECK(b == n2);
    }
}

TEST_CASE("dissipativity constants") {
  RandomSource rng(30, 0);
  const MorrisLecarParams ml;
  CHECK(dissipativity_estimate(build_model(ml), 2000, rng) >= ml.g[2] / ml.capacitance - 1e-12);
  CHECK(dissipativity_estimate(build_model(Dim1Params{2.0, 2.0, 1.0, 1.0}), 2000, rng) ==
        doctest::Approx(2.0).epsilon(1e-9));
  CHECK(dissipativity_estimate(build_model(PlanarRotationParams{}), 2000, rng) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(dissipativity_estimate(build_model(SwitchedLinearParams{0.5, 1.0}), 20000, rng)) < 1e-3);
}

TEST_CASE("worst cycle at alpha = 0.5") {
  const WorstCycle w = worst_trajectory_cycle(0.5);
  CHECK(w.gamma_plus == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-15));
  CHECK(w.gamma_minus == doctest::Approx(1.0 - std::sqrt(2.0)).epsilon(1e-14));
  const double e = std::exp(-0.5 * (2.0 * w.gamma_plus - w.gamma_minus));
  CHECK(w.at_t2[0] == doctest::Approx(w.gamma_plus * e).epsilon(1e-14));
  CHECK(w.at_t2[1] == doctest::Approx(-w.gamma_plus * w.gamma_plus * e).epsilon(1e-14));
  const HybridState end = simulate_worst_trajectory(0.5);
  CHECK(std::abs(end[0]) < 1e-12);
  CHECK(end.norm() == doctest::Approx(stability_r(0.5).r_value).epsilon(1e-10));
}

TEST_CASE("worst cycle growth equals R(alpha^2)") {
  RandomSource rng(31, 0);
  for (int k = 0; k < 50; ++k) {
    const double alpha = rng.uniform();
    const double r = stability_r(alpha).r_value;
    CHECK(std::abs(worst_trajectory_cycle(alpha).growth - r) <= 1e-10 * r);
  }
}

TEST_CASE("model specs round-trip through their text form") {
  AimdParams aimd;
  aimd.rate_slope = 0.5;
  aimd.measure = JumpMeasure::uniform;
  aimd.nu_low = 0.1;
  aimd.nu_high = 0.9;
  for (const ModelSpec& spec : {ModelSpec{StorageParams{2.0, 3.0}}, ModelSpec{aimd}, ModelSpec{MorrisLecarParams{}},
                                ModelSpec{Dim1Params{1.0, 2.0, 3.0, 4.0}}, ModelSpec{TelegraphParams{0.5, 1.5}}}) {
    const std::string text = to_text(spec);
    CHECK(to_text(parse_model_spec(text)) == text);
  }
}

TEST_CASE("unknown variant tag is a parse error") {
  try {
    (void)parse_model_spec("variant = nope\n");
    FAIL("accepted an unknown variant");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
  }
}
