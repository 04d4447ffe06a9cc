#pragma once

#include <functional>

namespace pdmp {

struct QuadratureOptions {
  double rel_tol = 1e-8;
  unsigned max_depth = 15;
};

struct QuadratureResult {
  double value;
  double error;
};

/// Adaptive bisection with 15-point Gauss-Kronrod panels on [a, b].
/// Throws QuadratureError when the error estimate exceeds
/// rel_tol * integral of |f| at max_depth.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& options = {});

}  // namespace pdmp
