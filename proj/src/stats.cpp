#include "pdmp/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "pdmp/error.hpp"

namespace pdmp {

MeanEstimate mean_estimate(std::span<const double> values) {
  require(!values.empty(), "mean_estimate needs at least one value");
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = values.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), values.size()};
}

MeanEstimate frequency_estimate(std::size_t hits, std::size_t count) {
  require(count > 0, "frequency_estimate needs a positive count");
  const double p = static_cast<double>(hits) / static_cast<double>(count);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(count)), count};
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  require(!samples.empty(), "ks_statistic needs samples");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double f = cdf(samples[k]);
    d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "ks_two_sample needs samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double kolmogorov_pvalue(double d, double n) {
  require(n > 0.0, "kolmogorov_pvalue needs n > 0");
  const double root = std::sqrt(n);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

ChiSquareResult poisson_chi_square(std::span<const std::size_t> histogram, double mean) {
  require(!histogram.empty(), "poisson_chi_square needs a histogram");
  require(mean > 0.0, "poisson_chi_square needs a positive mean");
  std::size_t total = 0;
  for (auto c : histogram) total += c;
  require(total > 0, "poisson_chi_square needs observations");
  const boost::math::poisson_distribution<double> law(mean);
  const auto n = static_cast<double>(total);

  // Cells 0..K-1 from the histogram, the last cell absorbing the upper tail.
  std::vector<double> observed, expected;
  for (std::size_t k = 0; k < histogram.size(); ++k) {
    observed.push_back(static_cast<double>(histogram[k]));
    expected.push_back(n * boost::math::pdf(law, static_cast<double>(k)));
  }
  expected.back() = n * boost::math::cdf(boost::math::complement(law, static_cast<double>(histogram.size()) - 2.0));
  if (histogram.size() == 1) expected.back() = n;

  // Pool small cells from both ends toward the centre.
  std::vector<double> obs_pooled, exp_pooled;
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    o += observed[k];
    e += expected[k];
    if (e >= 5.0) {
      obs_pooled.push_back(o);
      exp_pooled.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (exp_pooled.empty()) {
      obs_pooled.push_back(o);
      exp_pooled.push_back(e);
    } else {
      obs_pooled.back() += o;
      exp_pooled.back() += e;
    }
  }
  ChiSquareResult result;
  for (std::size_t k = 0; k < obs_pooled.size(); ++k) {
    const double diff = obs_pooled[k] - exp_pooled[k];
    result.statistic += diff * diff / exp_pooled[k];
  }
  result.dof = static_cast<int>(obs_pooled.size()) - 1;
  if (result.dof < 1) {
    result.p_value = 1.0;
    return result;
  }
  const boost::math::chi_squared_distribution<double> chi(result.dof);
  result.p_value = boost::math::cdf(boost::math::complement(chi, result.statistic));
  return result;
}

double gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::gamma_distribution<double>(shape, 1.0 / rate), x);
}

double beta_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::cdf(boost::math::beta_distribution<double>(a, b), x);
}

double exponential_cdf(double x, double rate) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); }

}  // namespace pdmp
