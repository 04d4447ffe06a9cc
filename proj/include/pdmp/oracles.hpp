#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pdmp/engine.hpp"
#include "pdmp/quadrature.hpp"

namespace pdmp {

// Storage model.

/// Laplace transform E[exp(s X_t)] given the initial transform L0 (s < 1).
double storage_laplace(double t, double s, const std::function<double(double)>& initial, double alpha,
                       double beta);
double storage_mean(double x, double t, double alpha, double beta);

// TCP window.

using Rational = boost::multiprecision::cpp_rational;

/// theta_k = lambda (1 - 2^-k).
double tcp_theta(int k, double lambda);

/// E_x[X_t^n] for the TCP process with halving rate lambda.
double tcp_moment(int n, double x, double t, double lambda);
double tcp_invariant_moment(int n, double lambda);
Rational tcp_invariant_moment_exact(int n);  // lambda = 1

/// Coefficients c_0..c_n (ascending powers) of the monic eigenpolynomial
/// P_n with L P_n = -theta_n P_n, exact at lambda = 1.
std::vector<Rational> tcp_eigenpoly_exact(int n);
std::vector<double> tcp_eigenpoly(int n, double lambda);

/// Generator of the lambda = 1 TCP process applied to a polynomial.
std::vector<Rational> tcp_generator_apply(const std::vector<Rational>& poly);

/// Integral of P_m P_n against the invariant law.
Rational tcp_pairing_integral_exact(int m, int n);  // lambda = 1
double tcp_pairing_integral(int m, int n, double lambda);

// Randomly switched planar system.

struct LyapunovOptions {
  double rel_tol = 1e-8;        // outer integrals
  double inner_rel_tol = 1e-12; // the transforms evaluated at each angle
  double clip = 1e-10;          // distance kept from the angular endpoints
  unsigned max_depth = 15;
};

/// Stationary angular densities (p0, p1) of the switched system at flip rate r.
class AngularDensity {
 public:
  AngularDensity() = default;
  AngularDensity(double r, double normalizer, LyapunovOptions options);

  double p0(double theta) const;
  double p1(double theta) const;

  /// Both densities at one angle, sharing the inner integrals.
  std::pair<double, double> both(double theta) const;

  double r() const { return r_; }
  double normalizer() const { return normalizer_; }

 private:
  double r_ = 1.0;
  double normalizer_ = 0.0;
  LyapunovOptions options_;
};

struct LyapunovBreakdown {
  double r = 0.0;
  double alpha = 0.0;
  double g_value = 0.0;
  double l_value = 0.0;  // g_value - alpha
  double c_normalizer = 0.0;
  AngularDensity density;
};

LyapunovBreakdown lyapunov_quadrature(double alpha, double r, const LyapunovOptions& options = {});
double lyapunov_g(double r, const LyapunovOptions& options = {});

/// Total mass of p0 + p1 over a full turn, integrated directly in the angle.
double angular_mass(const AngularDensity& density, const LyapunovOptions& options = {});

struct GMaximum {
  double r;
  double g;
};

/// Maximum of G on [lo, hi]: log-spaced scan then golden-section on log r.
GMaximum g_argmax(double lo, double hi, double tol = 1e-6, const LyapunovOptions& options = {});

enum class StabilityClass { stable, marginal, unstable, common_lyapunov };
std::string to_string(StabilityClass c);

struct StabilityVerdict {
  double r_value;
  StabilityClass classification;
};

/// R(alpha^2) for the deterministic switched system and its classification.
StabilityVerdict stability_r(double alpha);

/// Root of R(alpha^2) = 1 by bisection on [lo, hi].
double stability_threshold(double lo = 0.1, double hi = 0.5, double tol = 1e-12);

// Invariant laws.

struct Dim1Law {
  double weight0;  // P(I = 0)
  double a0, b0;   // Beta parameters of X given I = 0
  double a1, b1;   // ... given I = 1
};
Dim1Law dim1_invariant_law(double alpha0, double alpha1, double lambda0, double lambda1);
double dim1_invariant_density(double x, int mode, double alpha0, double alpha1, double lambda0, double lambda1);

/// Density of |X| under the invariant law (the V marginal is uniform).
double telegraph_invariant_density(double x, double a, double b);

/// Smallest sampled value of -<x - y, F(x) - F(y)> / |x - y|^2 over pairs in
/// the model's sampling box and all modes.
double dissipativity_estimate(const PdmpModel& model, std::size_t sample_count, RandomSource& rng);

}  // namespace pdmp
