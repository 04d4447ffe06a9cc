#include "pdmp/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/beta.hpp>

#include "pdmp/error.hpp"
#include "pdmp/models.hpp"

namespace pdmp {

double storage_laplace(double t, double s, const std::function<double(double)>& initial, double alpha,
                       double beta) {
  if (!(s < 1.0)) fail(ErrorCode::domain_error, "storage_laplace requires s < 1");
  require(alpha > 0.0 && beta > 0.0, "storage_laplace requires alpha, beta > 0");
  require(t >= 0.0, "storage_laplace requires t >= 0");
  const double shrunk = s * std::exp(-beta * t);
  return initial(shrunk) * std::pow((1.0 - shrunk) / (1.0 - s), alpha / beta);
}

double storage_mean(double x, double t, double alpha, double beta) {
  validate(StorageParams{alpha, beta});
  if (!(t >= 0.0)) fail(ErrorCode::domain_error, "storage_mean requires t >= 0");
  const double rest = alpha / beta;
  return rest + (x - rest) * std::exp(-beta * t);
}

double tcp_theta(int k, double lambda) { return lambda * (1.0 - std::ldexp(1.0, -k)); }

double tcp_moment(int n, double x, double t, double lambda) {
  require(n >= 0 && x >= 0.0 && t >= 0.0 && lambda > 0.0, "tcp_moment requires n >= 0, x >= 0, t >= 0, lambda > 0");
  if (n == 0) return 1.0;
  double factorial = 1.0;
  for (int k = 2; k <= n; ++k) factorial *= k;
  double total = tcp_invariant_moment(n, lambda);
  for (int m = 1; m <= n; ++m) {
    const double theta_m = tcp_theta(m, lambda);
    double inner = 0.0;
    double x_pow = 1.0, k_fact = 1.0;
    for (int k = 0; k <= m; ++k) {
      if (k > 0) {
        x_pow *= x;
        k_fact *= k;
      }
      double prod = 1.0;
      for (int j = k; j <= n; ++j)
        if (j != m) prod /= tcp_theta(j, lambda) - theta_m;
      inner += x_pow / k_fact * prod;
    }
    total += factorial * inner * std::exp(-theta_m * t);
  }
  return total;
}

double tcp_invariant_moment(int n, double lambda) {
  require(n >= 0 && lambda > 0.0, "tcp_invariant_moment requires n >= 0, lambda > 0");
  double value = 1.0;
  for (int k = 1; k <= n; ++k) value *= k / tcp_theta(k, lambda);
  return value;
}

namespace {

Rational exact_theta(int k) {
  const Rational pow2 = Rational(boost::multiprecision::cpp_int(1) << k);
  return 1 - 1 / pow2;
}

}  // namespace

Rational tcp_invariant_moment_exact(int n) {
  require(n >= 0, "tcp_invariant_moment_exact requires n >= 0");
  Rational value = 1;
  for (int k = 1; k <= n; ++k) value *= Rational(k) / exact_theta(k);
  return value;
}

std::vector<Rational> tcp_eigenpoly_exact(int n) {
  require(n >= 0, "tcp_eigenpoly requires n >= 0");
  std::vector<Rational> c(static_cast<std::size_t>(n) + 1);
  c[n] = 1;
  const Rational theta_n = exact_theta(n);
  for (int k = n - 1; k >= 0; --k) c[k] = Rational(k + 1) * c[k + 1] / (exact_theta(k) - theta_n);
  return c;
}

std::vector<double> tcp_eigenpoly(int n, double lambda) {
  require(lambda > 0.0, "tcp_eigenpoly requires lambda > 0");
  const auto exact = tcp_eigenpoly_exact(n);
  std::vector<double> out(exact.size());
  for (int k = 0; k <= n; ++k) out[k] = static_cast<double>(exact[k]) / std::pow(lambda, n - k);
  return out;
}

std::vector<Rational> tcp_generator_apply(const std::vector<Rational>& poly) {
  std::vector<Rational> out(poly.size());
  for (std::size_t k = 0; k < poly.size(); ++k) {
    if (k > 0) out[k - 1] += Rational(static_cast<long long>(k)) * poly[k];
    out[k] -= exact_theta(static_cast<int>(k)) * poly[k];
  }
  return out;
}

Rational tcp_pairing_integral_exact(int m, int n) {
  const auto a = tcp_eigenpoly_exact(m);
  const auto b = tcp_eigenpoly_exact(n);
  Rational total = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      total += a[i] * b[j] * tcp_invariant_moment_exact(static_cast<int>(i + j));
  return total;
}

double tcp_pairing_integral(int m, int n, double lambda) {
  require(m >= 0 && n >= 0 && lambda > 0.0, "tcp_pairing_integral requires m, n >= 0 and lambda > 0");
  return static_cast<double>(tcp_pairing_integral_exact(m, n)) / std::pow(lambda, m + n);
}

namespace {

// With t = tan(theta) in (-inf, 0) and phi(t) = 1/t - t (decreasing), the
// angular transforms become Laplace-type integrals in w = phi(T) - phi(t):
//   H(T) = int_0^inf e^{-r w} t^2 / (1 + t^2) dw
//   J(T) = int_0^inf e^{-r w} (-2 t^3) / (1 + t^2)^3 dw
// and 1 - r H = cos^2(theta) + J (integration by parts).
double negative_root(double c) {
  const double root = std::sqrt(c * c + 4.0);
  return c >= 0.0 ? -0.5 * (c + root) : -2.0 / (root - c);
}

struct Transforms {
  double rh;  // r * H
  double j;
};

Transforms transforms(double slope, double r, const LyapunovOptions& options) {
  const double phi = 1.0 / slope - slope;
  const double width = 60.0 / r;  // e^{-60} of the mass is dropped
  const QuadratureOptions q{options.inner_rel_tol, options.max_depth};
  const double h = integrate(
                       [&](double w) {
                         const double t = negative_root(phi - w);
                         const double t2 = t * t;
                         return std::exp(-r * w) * t2 / (1.0 + t2);
                       },
                       0.0, width, q)
                       .value;
  const double j = integrate(
                       [&](double w) {
                         const double t = negative_root(phi - w);
                         const double u = 1.0 + t * t;
                         return std::exp(-r * w) * (-2.0 * t * t * t) / (u * u * u);
                       },
                       0.0, width, q)
                       .value;
  return {r * h, j};
}

// Outer integrals run over s with T = -e^s, s in [log(clip), -log(clip)].
double outer(const std::function<double(double, const Transforms&)>& g, double r, const LyapunovOptions& options) {
  const double edge = -std::log(options.clip);
  const QuadratureOptions q{options.rel_tol, options.max_depth};
  return integrate(
             [&](double s) {
               const double slope = -std::exp(s);
               return g(slope, transforms(slope, r, options)) * std::exp(s);
             },
             -edge, edge, q)
      .value;
}

double normalizer(double r, const LyapunovOptions& options) {
  const double inverse = 4.0 * outer(
                                   [](double t, const Transforms& f) {
                                     return 1.0 / (1.0 + t * t) + f.j + f.rh / (t * t);
                                   },
                                   r, options);
  return 1.0 / inverse;
}

}  // namespace

AngularDensity::AngularDensity(double r, double normalizer, LyapunovOptions options)
    : r_(r), normalizer_(normalizer), options_(options) {}

std::pair<double, double> AngularDensity::both(double theta) const {
  constexpr double pi = std::numbers::pi;
  // Reduce to [-pi/2, pi/2) using period pi, then to (-pi/2, 0) by the
  // quarter-turn symmetry that swaps the two modes.
  double reduced = std::remainder(theta, pi);
  if (reduced >= 0.5 * pi) reduced -= pi;
  bool swapped = false;
  if (reduced >= 0.0) {
    reduced -= 0.5 * pi;
    swapped = true;
  }
  if (reduced < -0.5 * pi + options_.clip || reduced > -options_.clip) return {normalizer_, normalizer_};
  const double slope = std::tan(reduced);
  const Transforms f = transforms(slope, r_, options_);
  const double sec2 = 1.0 + slope * slope;
  const double a = normalizer_ * f.rh * sec2 / (slope * slope);
  const double b = normalizer_ * (1.0 + sec2 * f.j);
  return swapped ? std::pair{b, a} : std::pair{a, b};
}

double AngularDensity::p0(double theta) const { return both(theta).first; }
double AngularDensity::p1(double theta) const { return both(theta).second; }

LyapunovBreakdown lyapunov_quadrature(double alpha, double r, const LyapunovOptions& options) {
  require(alpha > 0.0 && r > 0.0, "lyapunov_quadrature requires alpha > 0 and r > 0");
  const double c = normalizer(r, options);
  const double g = 4.0 * c *
                   outer(
                       [](double t, const Transforms& f) {
                         const double u = 1.0 + t * t;
                         return f.rh / (t * u) - t * (1.0 + u * f.j) / (u * u);
                       },
                       r, options);
  LyapunovBreakdown out;
  out.r = r;
  out.alpha = alpha;
  out.g_value = g;
  out.l_value = g - alpha;
  out.c_normalizer = c;
  out.density = AngularDensity(r, c, options);
  return out;
}

double lyapunov_g(double r, const LyapunovOptions& options) {
  return lyapunov_quadrature(1.0, r, options).g_value;
}

double angular_mass(const AngularDensity& density, const LyapunovOptions& options) {
  constexpr double pi = std::numbers::pi;
  const QuadratureOptions q{options.rel_tol, options.max_depth};
  auto f = [&](double theta) {
    const auto [a, b] = density.both(theta);
    return a + b;
  };
  // The two quarter turns (-pi/2, 0) and (0, pi/2) repeat with period pi.
  const double lower = integrate(f, -0.5 * pi + options.clip, -options.clip, q).value;
  const double upper = integrate(f, options.clip, 0.5 * pi - options.clip, q).value;
  return 2.0 * (lower + upper);
}

GMaximum g_argmax(double lo, double hi, double tol, const LyapunovOptions& options) {
  require(0.0 < lo && lo < hi, "g_argmax requires 0 < lo < hi");
  const double a = std::log(lo), b = std::log(hi);
  constexpr int kScan = 48;
  std::vector<double> grid(kScan + 1), values(kScan + 1);
  int best = 0;
  for (int k = 0; k <= kScan; ++k) {
    grid[k] = a + (b - a) * k / kScan;
    values[k] = lyapunov_g(std::exp(grid[k]), options);
    if (values[k] > values[best]) best = k;
  }
  double left = grid[std::max(best - 1, 0)], right = grid[std::min(best + 1, kScan)];
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = right - ratio * (right - left), x2 = left + ratio * (right - left);
  double f1 = lyapunov_g(std::exp(x1), options), f2 = lyapunov_g(std::exp(x2), options);
  while (right - left > tol) {
    if (f1 < f2) {
      left = x1;
      x1 = x2;
      f1 = f2;
      x2 = left + ratio * (right - left);
      f2 = lyapunov_g(std::exp(x2), options);
    } else {
      right = x2;
      x2 = x1;
      f2 = f1;
      x1 = right - ratio * (right - left);
      f1 = lyapunov_g(std::exp(x1), options);
    }
  }
  GMaximum out{std::exp(0.5 * (left + right)), std::max(f1, f2)};
  if (values[best] > out.g) out = {std::exp(grid[best]), values[best]};
  return out;
}

std::string to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::stable: return "stable";
    case StabilityClass::marginal: return "marginal";
    case StabilityClass::unstable: return "unstable";
    case StabilityClass::common_lyapunov: return "common-lyapunov";
  }
  return "stable";
}

StabilityVerdict stability_r(double alpha) {
  require(alpha > 0.0, "stability_r requires alpha > 0");
  const double a2 = alpha * alpha;
  const double root = std::sqrt(1.0 + 4.0 * a2);
  const double value = (1.0 + 2.0 * a2 + root) / (2.0 * a2) * std::exp(-2.0 * root);
  StabilityClass c = StabilityClass::stable;
  if (2.0 * alpha > 1.0)
    c = StabilityClass::common_lyapunov;
  else if (std::abs(value - 1.0) <= 1e-12)
    c = StabilityClass::marginal;
  else if (value > 1.0)
    c = StabilityClass::unstable;
  return {value, c};
}

double stability_threshold(double lo, double hi, double tol) {
  auto excess = [](double a) { return stability_r(a).r_value - 1.0; };
  require(excess(lo) > 0.0 && excess(hi) < 0.0, "stability_threshold needs a sign change on [lo, hi]");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Dim1Law dim1_invariant_law(double alpha0, double alpha1, double lambda0, double lambda1) {
  require(alpha0 > 0.0 && alpha1 > 0.0 && lambda0 > 0.0 && lambda1 > 0.0, "dim1 parameters must be positive");
  const double u = lambda0 / alpha0, v = lambda1 / alpha1;
  return {lambda1 / (lambda0 + lambda1), u, v + 1.0, u + 1.0, v};
}

double dim1_invariant_density(double x, int mode, double alpha0, double alpha1, double lambda0, double lambda1) {
  if (!(x > 0.0 && x < 1.0)) fail(ErrorCode::domain_error, "dim1_invariant_density requires 0 < x < 1");
  require(mode == 0 || mode == 1, "dim1 mode must be 0 or 1");
  const Dim1Law law = dim1_invariant_law(alpha0, alpha1, lambda0, lambda1);
  if (mode == 0) return boost::math::pdf(boost::math::beta_distribution<double>(law.a0, law.b0), x);
  return boost::math::pdf(boost::math::beta_distribution<double>(law.a1, law.b1), x);
}

double telegraph_invariant_density(double x, double a, double b) {
  if (!(0.0 < a && a < b)) fail(ErrorCode::domain_error, "telegraph density requires 0 < a < b");
  if (x < 0.0) fail(ErrorCode::domain_error, "telegraph density requires x >= 0");
  return (b - a) * std::exp(-(b - a) * x);
}

double dissipativity_estimate(const PdmpModel& model, std::size_t sample_count, RandomSource& rng) {
  require(static_cast<bool>(model.flow.field), "dissipativity_estimate needs a vector field");
  require(model.sampling_box.size() == model.dim, "dissipativity_estimate needs a sampling box");
  require(sample_count > 0, "dissipativity_estimate needs samples");
  const std::size_t d = model.dim;
  double worst = std::numeric_limits<double>::infinity();
  std::array<double, kMaxDim> x{}, y{}, fx{}, fy{};
  for (std::size_t mode = 0; mode < model.mode_count; ++mode) {
    for (std::size_t n = 0; n < sample_count; ++n) {
      double dist2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const auto [lo, hi] = model.sampling_box[j];
        x[j] = lo + (hi - lo) * rng.uniform();
        y[j] = lo + (hi - lo) * rng.uniform();
        dist2 += (x[j] - y[j]) * (x[j] - y[j]);
      }
      if (dist2 == 0.0) continue;
      model.flow.field(mode, std::span<const double>(x.data(), d), std::span<double>(fx.data(), d));
      model.flow.field(mode, std::span<const double>(y.data(), d), std::span<double>(fy.data(), d));
      double inner = 0.0;
      for (std::size_t j = 0; j < d; ++j) inner += (x[j] - y[j]) * (fx[j] - fy[j]);
      worst = std::min(worst, -inner / dist2);
    }
  }
  return worst;
}

}  // namespace pdmp
