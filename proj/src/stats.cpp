#include "pwtab/stats.hpp"

#include "pwtab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pwtab {

double mean(std::span<const double> xs) {
  if (xs.empty()) {
    throw DomainError("mean: empty sample");
  }
  double total = 0.0;
  for (double x : xs) total += x;
  return total / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) {
    throw DomainError("sample_variance: need at least two values");
  }
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) {
    throw DomainError("ks_statistic: empty sample");
  }
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_p_value(double d, std::size_t n) {
  if (n == 0) {
    throw DomainError("ks_p_value: n must be positive");
  }
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) {
    return 1.0;
  }
  // Q_KS(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_uniform_test(std::span<const double> sample) {
  KsResult result;
  result.statistic = ks_statistic(sample, [](double u) { return std::clamp(u, 0.0, 1.0); });
  result.p_value = ks_p_value(result.statistic, sample.size());
  return result;
}

std::pair<double, double> binomial_band(std::size_t trials, double p, double coverage) {
  if (trials == 0 || !(p > 0.0 && p < 1.0) || !(coverage > 0.0 && coverage < 1.0)) {
    throw DomainError("binomial_band: need trials > 0, p and coverage in (0, 1)");
  }
  const double tail = 0.5 * (1.0 - coverage);
  // Accumulate the pmf in log space.
  const double n = static_cast<double>(trials);
  double cdf = 0.0;
  std::size_t lower = trials;
  std::size_t upper = trials;
  bool have_lower = false;
  for (std::size_t k = 0; k <= trials; ++k) {
    const double kk = static_cast<double>(k);
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0) +
                           kk * std::log(p) + (n - kk) * std::log1p(-p);
    cdf += std::exp(log_pmf);
    if (!have_lower && cdf >= tail) {
      lower = k;
      have_lower = true;
    }
    if (cdf >= 1.0 - tail) {
      upper = k;
      break;
    }
  }
  return {static_cast<double>(lower) / n, static_cast<double>(upper) / n};
}

}  // namespace pwtab
