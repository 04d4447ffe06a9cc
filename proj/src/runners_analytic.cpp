#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "experiment_internal.hpp"
#include "parallel.hpp"
#include "pdmp/coupling.hpp"
#include "pdmp/error.hpp"
#include "pdmp/oracles.hpp"
#include "text_util.hpp"

namespace pdmp::detail {

namespace {

// Largest |residual| of the stationary angular equations
//   d/dθ (sin²θ p0) + r (p1 - p0) = 0,  d/dθ (cos²θ p1) + r (p0 - p1) = 0
// on an interior grid, by central differences.
double stationary_residual(const AngularDensity& density) {
  constexpr double h = 1e-4;
  const double r = density.r();
  double worst = 0.0;
  for (int k = 0; k < 16; ++k) {
    const double theta = -1.5 + 1.45 * k / 15.0;
    const auto [a_lo, b_lo] = density.both(theta - h);
    const auto [a_hi, b_hi] = density.both(theta + h);
    const auto [a, b] = density.both(theta);
    const double s_lo = std::sin(theta - h), s_hi = std::sin(theta + h);
    const double c_lo = std::cos(theta - h), c_hi = std::cos(theta + h);
    const double first = (s_hi * s_hi * a_hi - s_lo * s_lo * a_lo) / (2.0 * h) + r * (b - a);
    const double second = (c_hi * c_hi * b_hi - c_lo * c_lo * b_lo) / (2.0 * h) + r * (a - b);
    worst = std::max({worst, std::abs(first), std::abs(second)});
  }
  return worst;
}

std::string rational_text(const Rational& q) {
  std::ostringstream os;
  os << q;
  return os.str();
}

}  // namespace

void run_lyapunov(RunContext& ctx) {
  const auto& c = ctx.config;
  std::string csv = "alpha,r,G,L_quadrature,L_mc,se,C,mass\n";
  std::map<double, double> mass_by_r;
  std::uint64_t block = 0;
  for (double r : c.r_grid) {
    const LyapunovBreakdown base = lyapunov_quadrature(1.0, r);
    const double mass = angular_mass(base.density);
    mass_by_r[r] = mass;
    ctx.rows.push_back(check_close("angular mass r=" + label(r), mass, 1.0, 1e-6));
    ctx.rows.push_back(check_below("stationary equation residual r=" + label(r), stationary_residual(base.density), 1e-5));
    for (double alpha : c.alpha_grid) {
      const double l_quad = base.g_value - alpha;
      const auto estimates = parallel_map(c.samples, ctx.workers, [&](std::size_t k) {
        RandomSource rng(c.seed, stream_index(block, k));
        return lyapunov_mc(alpha, r, c.horizon, rng);
      });
      ++block;
      const MeanEstimate m = mean_estimate(estimates);
      ctx.rows.push_back(check_close("L quadrature vs Monte Carlo alpha=" + label(alpha) + " r=" + label(r), m.mean,
                                     l_quad, 0.01, "G(r) = " + label(base.g_value)));
      csv += csv_line({alpha, r, base.g_value, l_quad, m.mean, m.se, base.c_normalizer, mass});
    }
  }
  ctx.files.push_back({".csv", csv});
}

void run_stability(RunContext& ctx) {
  const auto& c = ctx.config;
  std::string csv = "alpha,R,class\n";
  for (double alpha : c.alpha_grid) {
    const StabilityVerdict v = stability_r(alpha);
    csv += format_double(alpha) + "," + format_double(v.r_value) + "," + to_string(v.classification) + "\n";
  }
  ctx.files.push_back({".csv", csv});

  const double root = stability_threshold();
  ctx.rows.push_back(check_close("root of R(alpha^2) = 1", root, 0.3314, 1e-3));
  bool brackets = false;
  for (std::size_t k = 1; k < c.alpha_grid.size(); ++k) {
    const double r0 = stability_r(c.alpha_grid[k - 1]).r_value - 1.0, r1 = stability_r(c.alpha_grid[k]).r_value - 1.0;
    if (r0 > 0.0 && r1 < 0.0 && c.alpha_grid[k - 1] <= root && root <= c.alpha_grid[k]) brackets = true;
  }
  ctx.rows.push_back(info_row("grid sign change brackets the root", brackets ? 1.0 : 0.0));

  RandomSource rng(c.seed, 0);
  double worst_identity = 0.0, worst_norm = 0.0, worst_axis = 0.0;
  for (std::size_t k = 0; k < c.random_checks; ++k) {
    const double alpha = rng.uniform();
    const double r_value = stability_r(alpha).r_value;
    const WorstCycle w = worst_trajectory_cycle(alpha);
    worst_identity = std::max(worst_identity, std::abs(w.growth - r_value) / std::max(1.0, r_value));
    const HybridState end = simulate_worst_trajectory(alpha);
    worst_norm = std::max(worst_norm, std::abs(end.norm() - r_value) / std::max(1.0, r_value));
    worst_axis = std::max(worst_axis, std::abs(end[0]) / std::max(1.0, end.norm()));
  }
  ctx.rows.push_back(check_close("worst-cycle growth vs R(alpha^2), relative", worst_identity, 0.0, 1e-10,
                                 std::to_string(c.random_checks) + " random alpha in (0,1)"));
  ctx.rows.push_back(check_close("simulated worst trajectory norm vs R(alpha^2), relative", worst_norm, 0.0, 1e-6));
  ctx.rows.push_back(check_close("simulated worst trajectory ends on the vertical axis", worst_axis, 0.0, 1e-6));
}

void run_gcurve(RunContext& ctx) {
  const auto& c = ctx.config;
  std::string csv = "r,G\n";
  for (double r : c.r_grid) csv += csv_line({r, lyapunov_g(r)});
  ctx.files.push_back({".csv", csv});

  const GMaximum best = g_argmax(c.search_lo, c.search_hi);
  ReportRow where;
  where.name = "argmax of G on [" + label(c.search_lo) + ", " + label(c.search_hi) + "]";
  where.estimate = best.r;
  where.oracle = 4.6;
  where.tolerance = 0.6;
  where.verdict = best.r >= 4.0 && best.r <= 5.2 ? Verdict::pass : Verdict::fail;
  where.note = "target window [4.0, 5.2]";
  ctx.rows.push_back(where);
  ReportRow height;
  height.name = "maximum value of G";
  height.estimate = best.g;
  height.oracle = 0.2;
  height.tolerance = 0.03;
  height.verdict = best.g >= 0.17 && best.g <= 0.23 ? Verdict::pass : Verdict::fail;
  height.note = "target window [0.17, 0.23]";
  ctx.rows.push_back(height);
  ctx.rows.push_back(check_below("G at r=" + label(c.search_lo), lyapunov_g(c.search_lo), 0.05, "tail toward 0"));
  ctx.rows.push_back(check_below("G at r=" + label(c.search_hi), lyapunov_g(c.search_hi), 0.05, "tail toward 0"));
}

void run_eigen(RunContext& ctx) {
  const auto& c = ctx.config;
  std::string csv = "n,k,coefficient,exact\n";
  for (int n = 0; n <= c.max_order; ++n) {
    const auto exact = tcp_eigenpoly_exact(n);
    const auto scaled = tcp_eigenpoly(n, c.lambda);
    for (int k = 0; k <= n; ++k)
      csv += std::to_string(n) + "," + std::to_string(k) + "," + format_double(scaled[k]) + "," +
             rational_text(exact[k]) + "\n";
  }
  ctx.files.push_back({".csv", csv});

  const std::vector<Rational> p1{Rational(-2), Rational(1)};
  const std::vector<Rational> p2{Rational(32, 3), Rational(-8), Rational(1)};
  ctx.rows.push_back(check_flag("P1 = x - 2 (exact)", tcp_eigenpoly_exact(1) == p1));
  ctx.rows.push_back(check_flag("P2 = x^2 - 8x + 32/3 (exact)", tcp_eigenpoly_exact(2) == p2));
  bool relation = true;
  for (int n = 0; n <= c.max_order; ++n) {
    const auto poly = tcp_eigenpoly_exact(n);
    const auto image = tcp_generator_apply(poly);
    const Rational theta = 1 - Rational(1) / Rational(boost::multiprecision::cpp_int(1) << n);
    for (std::size_t k = 0; k < poly.size(); ++k) relation = relation && image[k] == -theta * poly[k];
  }
  ctx.rows.push_back(check_flag("L P_n = -theta_n P_n exactly for n <= " + std::to_string(c.max_order), relation));

  // Independent evaluation of the pairings from the double-precision moments.
  auto pairing_from_moments = [](int m, int n) {
    const auto a = tcp_eigenpoly(m, 1.0), b = tcp_eigenpoly(n, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) total += a[i] * b[j] * tcp_invariant_moment(static_cast<int>(i + j), 1.0);
    return total;
  };
  const Rational p12 = tcp_pairing_integral_exact(1, 2);
  ctx.rows.push_back(check_flag("integral P1 P2 = -64/21 (exact)", p12 == Rational(-64, 21)));
  ctx.rows.push_back(check_close("integral P1 P2 vs moment expansion", static_cast<double>(p12), pairing_from_moments(1, 2),
                                 1e-12));
  ctx.rows.push_back(check_flag("integral P0 P1 = 0 (exact)", tcp_pairing_integral_exact(0, 1) == 0));
  ctx.rows.push_back(check_flag("integral P1 P1 = 4/3 (exact)", tcp_pairing_integral_exact(1, 1) == Rational(4, 3)));
  ReportRow known;
  known.name = "integral P1 P2: printed -64/27 vs computed -64/21";
  known.estimate = static_cast<double>(p12);
  known.verdict = Verdict::info;
  known.note = "known issue: the printed value " + label(-64.0 / 27.0) +
               " disagrees with the moment expansion; computed value kept";
  ctx.rows.push_back(known);
  if (c.lambda != 1.0) {
    const double scaled = tcp_pairing_integral(1, 2, c.lambda);
    ctx.rows.push_back(check_close("integral P1 P2 at lambda=" + label(c.lambda), scaled,
                                   -64.0 / 21.0 / std::pow(c.lambda, 3), 1e-12 * (1.0 + std::abs(scaled))));
  }
}

}  // namespace pdmp::detail
