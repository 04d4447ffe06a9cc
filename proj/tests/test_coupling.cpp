#include <doctest.h>

#include <cmath>
#include <vector>

#include "pdmp/coupling.hpp"
#include "pdmp/error.hpp"
#include "pdmp/quadrature.hpp"
#include "pdmp/stats.hpp"

using namespace pdmp;

namespace {

constexpr double kSe = 3.0;
constexpr double kRounding = 1e-12;

double not_coalesced_rate(std::size_t n, auto&& couple) {
  std::size_t misses = 0;
  for (std::size_t k = 0; k < n; ++k) {
    RandomSource rng(50, k);
    misses += couple(rng).coalesced ? 0 : 1;
  }
  return static_cast<double>(misses) / static_cast<double>(n);
}

double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

}  // namespace

TEST_CASE("shared-noise storage distance is deterministic") {
  const std::vector<double> times{0.5, 1.0, 3.0};
  for (std::size_t k = 0; k < 1000; ++k) {
    RandomSource rng(51, k);
    const CoupledRun run = couple_shared_noise(StorageParams{1.0, 2.0}, 3.0, 0.5, times, rng);
    REQUIRE(run.distances.size() == times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double want = 2.5 * std::exp(-2.0 * times[i]);
      CHECK(std::abs(run.distances[i] - want) <= kRounding * 3.0);
    }
  }
}

TEST_CASE("shared-noise tcp distance halves at each jump") {
  const std::vector<double> times{2.0};
  std::vector<double> p1, p2;
  for (std::size_t k = 0; k < 100000; ++k) {
    RandomSource rng(52, k);
    const CoupledRun run = couple_shared_noise(TcpParams{1.0}, 3.0, 1.0, times, rng);
    const double want = 2.0 * std::ldexp(1.0, -static_cast<int>(run.jump_count));
    CHECK(std::abs(run.distances[0] - want) <= kRounding * 3.0);
    p1.push_back(run.distances[0]);
    p2.push_back(run.distances[0] * run.distances[0]);
  }
  for (int p : {1, 2}) {
    const double lambda_p = (1.0 - std::pow(2.0, -p)) / p;
    const MeanEstimate e = mean_estimate(p == 1 ? p1 : p2);
    CHECK(std::abs(e.mean - std::pow(2.0, p) * std::exp(-p * lambda_p * 2.0)) <= kSe * e.se);
  }
}

TEST_CASE("couplings from equal starts stay together") {
  const std::vector<double> times{0.5, 2.0};
  RandomSource rng(53, 0);
  for (const ModelSpec& spec : {ModelSpec{StorageParams{}}, ModelSpec{TcpParams{}}, ModelSpec{AimdParams{}}}) {
    const CoupledRun run = couple_shared_noise(spec, 1.5, 1.5, times, rng);
    for (double d : run.distances) CHECK(d == 0.0);
  }
  for (const ModelSpec& spec : {ModelSpec{Dim1Params{}}, ModelSpec{PlanarRotationParams{}}}) {
    const HybridState s = std::holds_alternative<Dim1Params>(spec) ? HybridState({0.4}, 1) : HybridState({0.4, 0.1}, 1);
    const CoupledRun run = couple_switched(spec, s, s, times, rng);
    for (double d : run.distances) CHECK(d == 0.0);
  }
  for (int k = 0; k < 1000; ++k) CHECK(couple_tv_tcp(1.0, 1.0, 3.0, 1.0, rng).coalesced);
}

TEST_CASE("maximal storage coupling respects the total variation bound") {
  const std::size_t n = 100000;
  const double miss = not_coalesced_rate(n, [](RandomSource& rng) { return couple_tv_storage(3.0, 0.0, 4.0, 1.0, 2.0, rng); });
  const double bound = std::exp(-4.0) + 3.0 * (std::exp(-8.0) - std::exp(-4.0)) / (1.0 - 2.0);
  CHECK(miss <= bound + kSe * binomial_se(miss, n));

  const double equal = not_coalesced_rate(n, [](RandomSource& rng) { return couple_tv_storage(2.0, 0.5, 3.0, 1.0, 1.0, rng); });
  CHECK(equal <= (1.0 + 1.5 * 3.0) * std::exp(-3.0) + kSe * binomial_se(equal, n));
}

TEST_CASE("maximal storage coupling from equal starts fails only without jumps") {
  const std::size_t n = 100000;
  std::size_t misses = 0;
  for (std::size_t k = 0; k < n; ++k) {
    RandomSource rng(54, k);
    const CoupledRun run = couple_tv_storage(1.0, 1.0, 1.5, 1.0, 1.0, rng);
    if (run.jump_count > 0) CHECK(run.coalesced);
    misses += run.coalesced ? 0 : 1;
  }
  const double p = static_cast<double>(misses) / n;
  CHECK(std::abs(p - std::exp(-1.5)) <= kSe * binomial_se(std::exp(-1.5), n));
}

TEST_CASE("tcp coupling respects the total variation bound and keeps the atom") {
  const std::size_t n = 100000;
  const double miss = not_coalesced_rate(n, [](RandomSource& rng) { return couple_tv_tcp(2.0, 1.0, 5.0, 1.0, rng); });
  CHECK(miss <= std::exp(-2.5) + std::exp(-5.0) + kSe * binomial_se(miss, n));
  for (std::size_t k = 0; k < 10000; ++k) {
    RandomSource rng(55, k);
    const CoupledRun run = couple_tv_tcp(2.0, 1.0, 1.0, 1.0, rng);
    if (run.jump_count == 0) CHECK_FALSE(run.coalesced);
  }
}

TEST_CASE("switched couplings contract while the modes agree") {
  const std::vector<double> times{0.5, 1.0, 2.0, 4.0};
  for (std::size_t k = 0; k < 2000; ++k) {
    RandomSource rng(56, k);
    const CoupledRun d = couple_switched(Dim1Params{1.0, 3.0, 2.0, 2.0}, HybridState({0.1}, 0), HybridState({0.8}, 0), times, rng);
    for (std::size_t i = 0; i < times.size(); ++i) CHECK(d.distances[i] <= 0.7 * std::exp(-times[i]) * (1.0 + kRounding));
    const CoupledRun p = couple_switched(PlanarRotationParams{1.0, 2.0}, HybridState({0.1, 0.2}, 1),
                                         HybridState({-0.3, 0.5}, 1), times, rng);
    for (std::size_t i = 0; i < times.size(); ++i)
      CHECK(p.distances[i] == doctest::Approx(0.5 * std::exp(-times[i])).epsilon(1e-12));
  }
}

TEST_CASE("unsupported couplings are rejected") {
  RandomSource rng(57, 0);
  const std::vector<double> times{1.0};
  CHECK_THROWS_AS(couple_shared_noise(TelegraphParams{}, 0.0, 1.0, times, rng), Error);
  CHECK_THROWS_AS(couple_switched(StorageParams{}, HybridState({0.0}), HybridState({1.0}), times, rng), Error);
}

TEST_CASE("empirical Wasserstein distance") {
  const std::vector<double> a{0.3, -1.2, 4.0, 2.2};
  CHECK(empirical_wasserstein(a, a, 2.0).value == 0.0);
  std::vector<double> b = a;
  for (auto& x : b) x += 1.75;
  for (double p : {1.0, 2.0, 3.5}) CHECK(empirical_wasserstein(a, b, p).value == doctest::Approx(1.75).epsilon(1e-14));
  const std::vector<double> u{0.0, 1.0}, v{0.0, 3.0};
  CHECK(empirical_wasserstein(u, v, 1.0).value == 1.0);
  const std::vector<double> one{0.0}, three{0.0, 1.0, 2.0};
  CHECK(empirical_wasserstein(one, three, 1.0).value == doctest::Approx(1.0));
}

TEST_CASE("empirical total variation distance") {
  std::vector<double> a, b;
  RandomSource rng(58, 0);
  for (int k = 0; k < 1000; ++k) {
    a.push_back(rng.uniform());
    b.push_back(10.0 + rng.uniform());
  }
  CHECK(empirical_tv(a, a, 0.1).value == 0.0);
  CHECK(empirical_tv(a, b, 0.1).value == doctest::Approx(1.0));

  std::vector<double> e1(1000000), e2(1000000);
  for (auto& x : e1) x = rng.exponential();
  for (auto& x : e2) x = 0.5 * rng.exponential();
  const double exact = 0.5 * integrate([](double x) { return std::abs(std::exp(-x) - 2.0 * std::exp(-2.0 * x)); },
                                       0.0, std::log(2.0)).value +
                       0.5 * integrate([](double x) { return std::abs(std::exp(-x) - 2.0 * std::exp(-2.0 * x)); },
                                       std::log(2.0), 60.0).value;
  CHECK(std::abs(empirical_tv(e1, e2, 0.01).value - exact) < 0.01);
}
