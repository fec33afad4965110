#pragma once

#include <cstddef>

namespace pwtab {

// Parameters of the limiting law B(omega, sigma0) of the weighted bandit
// statistic under the optimal policy. omega shifts the two symmetric modes
// away from zero; sigma0 scales them. omega = 0, sigma0 = 1 is N(0, 1).
struct BanditParams {
  double omega = 0.0;
  double sigma0 = 1.0;

  // Throws DomainError unless both fields are finite and sigma0 > 0.
  void validate() const;

  // Limit parameters for IID rewards with mean `mu` and standard deviation
  // `sigma` after `n` steps of the policy with weight `lambda`:
  //   omega  = lambda*mu/(1-lambda) + sqrt(n)*mu/sigma
  //   sigma0 = sqrt(1 + mu^2/sigma^2)
  static BanditParams from_effect(double mu, double sigma, double lambda, std::size_t n);
};

double bandit_density(double y, const BanditParams& params);

// P(|eta| > z) for z >= 0.
double bandit_tail_prob(double z, const BanditParams& params);

// P(eta <= y). Closed form, via symmetry and the tail probability.
double bandit_cdf(double y, const BanditParams& params);

// Two-sided p-value of an observed statistic under B(omega, sigma0).
double bandit_p_value(double t, const BanditParams& params);

}  // namespace pwtab
