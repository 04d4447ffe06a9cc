#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pdmp {

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  std::size_t count = 0;
};

/// Sample mean and its standard error; values are summed in the given order.
MeanEstimate mean_estimate(std::span<const double> values);

/// Bernoulli frequency with standard error sqrt(p(1-p)/n).
MeanEstimate frequency_estimate(std::size_t hits, std::size_t count);

/// sup |F_n - F| against a continuous CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov tail P(D > d) with the small-sample correction
/// sqrt(n) + 0.12 + 0.11 / sqrt(n); n is the (effective) sample size.
double kolmogorov_pvalue(double d, double n);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
};

/// Goodness of fit of a histogram of counts to Poisson(mean). Cells with
/// expected count below 5 are pooled into their neighbours.
ChiSquareResult poisson_chi_square(std::span<const std::size_t> histogram, double mean);

double gamma_cdf(double x, double shape, double rate);
double beta_cdf(double x, double a, double b);
double exponential_cdf(double x, double rate);

}  // namespace pdmp
