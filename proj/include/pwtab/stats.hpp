#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>

namespace pwtab {

double mean(std::span<const double> xs);

// Unbiased sample variance (divides by n-1). Requires xs.size() >= 2.
double sample_variance(std::span<const double> xs);

// Kolmogorov-Smirnov distance sup_x |F_n(x) - cdf(x)|.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

// Asymptotic p-value of the one-sample KS statistic `d` at sample size n,
// with the Stephens small-sample correction.
double ks_p_value(double d, std::size_t n);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// KS test of the sample against U(0, 1).
KsResult ks_uniform_test(std::span<const double> sample);

// Exact binomial acceptance band for the rejection *rate*: the lower and
// upper (1-coverage)/2 quantiles of Binomial(trials, p) divided by trials.
std::pair<double, double> binomial_band(std::size_t trials, double p, double coverage);

}  // namespace pwtab
