#include <doctest.h>

#include <cmath>
#include <vector>

#include "pdmp/coupling.hpp"
#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"
#include "pdmp/models.hpp"
#include "pdmp/oracles.hpp"
#include "pdmp/quadrature.hpp"
#include "pdmp/stats.hpp"

using namespace pdmp;

namespace {

double eval(const std::vector<Rational>& poly, const Rational& x) {
  Rational acc = 0, power = 1;
  for (const auto& c : poly) {
    acc += c * power;
    power *= x;
  }
  return static_cast<double>(acc);
}

}  // namespace

TEST_CASE("storage Laplace transform") {
  const auto one = [](double) { return 1.0; };
  const auto l0 = [](double s) { return 1.0 / (1.0 - s); };
  CHECK(storage_laplace(0.0, 0.3, l0, 1.0, 1.0) == doctest::Approx(l0(0.3)).epsilon(1e-14));
  CHECK(std::abs(storage_laplace(100.0, 0.5, one, 1.0, 1.0) - 2.0) < 1e-6);

  const PdmpModel m = build_model(StorageParams{1.0, 1.0});
  std::vector<double> values(1000000);
  for (std::size_t k = 0; k < values.size(); ++k) {
    RandomSource rng(40, k);
    values[k] = std::exp(0.5 * run_to(m, HybridState({0.0}), 1.0, rng).terminal[0]);
  }
  const MeanEstimate e = mean_estimate(values);
  CHECK(std::abs(e.mean - storage_laplace(1.0, 0.5, one, 1.0, 1.0)) <= 3.0 * e.se);
}

TEST_CASE("storage mean") {
  CHECK(storage_mean(2.0, 3.7, 4.0, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(storage_mean(0.0, 1.0, 1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
  const double h = 1e-4, x = 3.0, t = 0.8, alpha = 1.5, beta = 0.7;
  const double derivative = (storage_mean(x, t + h, alpha, beta) - storage_mean(x, t - h, alpha, beta)) / (2.0 * h);
  CHECK(std::abs(derivative - (alpha - beta * storage_mean(x, t, alpha, beta))) < 1e-8);
}

TEST_CASE("tcp moments") {
  for (double t : {0.1, 1.0, 7.0}) CHECK(tcp_moment(1, 0.0, t, 1.0) == doctest::Approx(2.0 * (1.0 - std::exp(-t / 2.0))));
  CHECK(tcp_moment(0, 3.0, 2.0, 1.0) == 1.0);
  CHECK(std::abs(tcp_moment(2, 1.3, 1000.0, 1.0) - 16.0 / 3.0) < 1e-9);
  CHECK(tcp_invariant_moment(1, 1.0) == doctest::Approx(2.0));
  CHECK(tcp_invariant_moment(0, 1.0) == 1.0);
  CHECK(tcp_invariant_moment_exact(3) == Rational(128, 7));
  CHECK(tcp_invariant_moment(2, 2.0) == doctest::Approx(16.0 / 3.0 / 4.0));
}

TEST_CASE("tcp eigenpolynomials") {
  CHECK(tcp_eigenpoly_exact(0) == std::vector<Rational>{1});
  CHECK(tcp_eigenpoly_exact(1) == std::vector<Rational>{-2, 1});
  CHECK(tcp_eigenpoly_exact(2) == std::vector<Rational>{Rational(32, 3), -8, 1});
  const auto p2 = tcp_eigenpoly_exact(2);
  const auto lp2 = tcp_generator_apply(p2);
  for (int x = 0; x <= 3; ++x) CHECK(eval(lp2, x) == doctest::Approx(-0.75 * eval(p2, x)).epsilon(1e-15));
  for (int n = 1; n <= 8; ++n) {
    auto p = tcp_eigenpoly_exact(n);
    auto lp = tcp_generator_apply(p);
    lp.resize(p.size());
    const Rational theta = 1 - Rational(1, 1 << n);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(lp[k] == -theta * p[k]);
  }
}

TEST_CASE("tcp pairing integrals against the invariant law") {
  CHECK(tcp_pairing_integral_exact(0, 1) == 0);
  CHECK(tcp_pairing_integral_exact(1, 1) == Rational(4, 3));
  CHECK(tcp_pairing_integral_exact(1, 2) == Rational(-64, 21));
  CHECK(tcp_pairing_integral_exact(1, 2) != Rational(-64, 27));
  CHECK(tcp_pairing_integral(1, 2, 1.0) == doctest::Approx(-64.0 / 21.0).epsilon(1e-13));
}

TEST_CASE("angular density is a probability density") {
  for (double r : {0.5, 1.0, 5.0, 20.0}) {
    const LyapunovBreakdown b = lyapunov_quadrature(0.1, r);
    CHECK(std::abs(angular_mass(b.density) - 1.0) < 1e-6);
  }
}

TEST_CASE("G is positive and takes its known values") {
  for (double r : {0.5, 1.0, 4.6, 20.0}) CHECK(lyapunov_g(r) > 0.0);
  CHECK(lyapunov_g(1.0) == doctest::Approx(0.1082587).epsilon(1e-6));
  CHECK(lyapunov_quadrature(0.1, 1.0).c_normalizer == doctest::Approx(0.0736201470).epsilon(1e-8));
  CHECK(lyapunov_g(4.6) == doctest::Approx(0.026939).epsilon(1e-4));
  CHECK(lyapunov_g(50.0) == doctest::Approx(0.0025).epsilon(1e-2));
}

TEST_CASE("maximum of G sits at small flip rate") {
  // The formulas put the peak near r = 0.23 with height about 0.2.
  const GMaximum m = g_argmax(0.1, 50.0);
  CHECK(m.r > 0.2);
  CHECK(m.r < 0.26);
  CHECK(m.g == doctest::Approx(0.1985).epsilon(1e-3));
}

TEST_CASE("quadrature exponent against the ergodic average") {
  RandomSource rng(41, 0);
  const double mc = lyapunov_mc(0.1, 4.6, 1e6, rng);
  CHECK(std::abs(mc - lyapunov_quadrature(0.1, 4.6).l_value) < 0.01);
}

TEST_CASE("ergodic average at extreme parameters") {
  RandomSource rng(42, 0);
  CHECK(std::abs(lyapunov_mc(0.3, 200.0, 2e4, rng) + 0.3) < 0.05);
  CHECK(lyapunov_mc(10.0, 1.0, 1e4, rng) < 0.0);
}

TEST_CASE("deterministic stability function") {
  const StabilityVerdict half = stability_r(0.5);
  CHECK(half.r_value == doctest::Approx(0.3446).epsilon(1e-3));
  CHECK(half.classification == StabilityClass::stable);
  CHECK(std::abs(stability_threshold() - 0.3314) < 1e-3);
  const StabilityVerdict small = stability_r(0.01);
  CHECK(small.r_value > 1.0);
  CHECK(small.classification == StabilityClass::unstable);
}

TEST_CASE("dim1 invariant densities") {
  for (double x : {0.1, 0.5, 0.9}) CHECK(dim1_invariant_density(x, 0, 1, 1, 1, 1) == doctest::Approx(2.0 * (1.0 - x)));
  for (double x : {0.2, 0.7})
    CHECK(dim1_invariant_density(x, 1, 1.0, 2.0, 3.0, 0.5) ==
          doctest::Approx(dim1_invariant_density(1.0 - x, 0, 2.0, 1.0, 0.5, 3.0)));
  CHECK(dim1_invariant_density(1e-6, 0, 2.0, 1.0, 1.0, 1.0) > 1e2);
  const Dim1Law law = dim1_invariant_law(1.0, 1.0, 2.0, 3.0);
  CHECK(law.weight0 == doctest::Approx(0.6));
}

TEST_CASE("telegraph invariant law of the distance to the origin") {
  CHECK(telegraph_invariant_density(0.0, 1.0, 2.0) == 1.0);
  const double mean = integrate([](double x) { return x * telegraph_invariant_density(x, 1.0, 2.0); }, 0.0, 60.0).value;
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("quadrature reports failure instead of a wrong value") {
  CHECK_THROWS_AS(integrate([](double x) { return x < 0.3 ? 0.0 : 1.0; }, 0.0, 1.0, {1e-14, 4}), QuadratureError);
  CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1e-7).value ==
        doctest::Approx(std::expm1(1e-7)).epsilon(1e-12));
}
