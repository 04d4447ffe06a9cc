#include "pdmp/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pdmp/error.hpp"

namespace pdmp {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;

struct Panel {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

// Boost's own adaptive driver measures each panel's error on [-1, 1]
// without the width factor, so the bisection is done here on top of the
// single-panel rule.
Panel panel(const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double error = 0.0, l1 = 0.0;
  const double r = Rule::integrate([&](double u) { return f(mid + half * u); }, -1.0, 1.0, 0, 0.0, &error, &l1);
  return {half * r, std::abs(half) * error, std::abs(half) * l1};
}

Panel refine(const std::function<double(double)>& f, double a, double b, const Panel& whole, unsigned depth,
             double rel_tol, double abs_tol) {
  if (depth == 0 || whole.error <= rel_tol * std::abs(whole.value) || whole.error <= abs_tol) return whole;
  const double mid = 0.5 * (a + b);
  const Panel left = refine(f, a, mid, panel(f, a, mid), depth - 1, rel_tol, 0.5 * abs_tol);
  const Panel right = refine(f, mid, b, panel(f, mid, b), depth - 1, rel_tol, 0.5 * abs_tol);
  return {left.value + right.value, left.error + right.error, left.l1 + right.l1};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& options) {
  require(std::isfinite(a) && std::isfinite(b), "integration bounds must be finite");
  if (a == b) return {0.0, 0.0};
  // Aim below the requested tolerance so that rounding in the last panels
  // does not push a converged estimate over it.
  const double target = 0.25 * options.rel_tol;
  const Panel top = panel(f, a, b);
  const Panel result = refine(f, a, b, top, options.max_depth, target, target * std::abs(top.value));
  if (!std::isfinite(result.value) || result.error > options.rel_tol * result.l1 + 1e-300) {
    char what[200];
    std::snprintf(what, sizeof what,
                  "quadrature on [%.6g, %.6g] did not reach relative tolerance %.3g (error estimate %.3g, |f| mass %.3g)",
                  a, b, options.rel_tol, result.error, result.l1);
    throw QuadratureError(what, result.error);
  }
  return {result.value, result.error};
}

}  // namespace pdmp
