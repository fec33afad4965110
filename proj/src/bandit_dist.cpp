#include "pwtab/bandit_dist.hpp"

#include "pwtab/errors.hpp"
#include "pwtab/normal.hpp"

#include <algorithm>
#include <cmath>

namespace pwtab {

void BanditParams::validate() const {
  if (!std::isfinite(omega) || !std::isfinite(sigma0)) {
    throw DomainError("BanditParams: omega and sigma0 must be finite");
  }
  if (!(sigma0 > 0.0)) {
    throw DomainError("BanditParams: sigma0 must be positive");
  }
}

BanditParams BanditParams::from_effect(double mu, double sigma, double lambda, std::size_t n) {
  if (!(sigma > 0.0) || !std::isfinite(mu) || !(lambda >= 0.0 && lambda < 1.0) || n == 0) {
    throw DomainError("BanditParams::from_effect: need sigma > 0, lambda in [0, 1), n >= 1");
  }
  const double ratio = mu / sigma;
  return BanditParams{lambda * mu / (1.0 - lambda) + std::sqrt(static_cast<double>(n)) * ratio,
                      std::sqrt(1.0 + ratio * ratio)};
}

double bandit_density(double y, const BanditParams& params) {
  params.validate();
  if (!std::isfinite(y)) {
    throw DomainError("bandit_density: y must be finite");
  }
  const double w = params.omega;
  const double s = params.sigma0;
  const double ay = std::abs(y);
  const double dev = (ay - w) / s;
  const double bulk = kInvSqrt2Pi / s * std::exp(-0.5 * dev * dev);
  if (w == 0.0) {
    return bulk;
  }
  // exp(2 w |y| / s^2) * Phi(-(|y| + w) / s), combined in log space.
  const double log_tail = 2.0 * w * ay / (s * s) + log_normal_cdf(-(ay + w) / s);
  const double correction = w / (s * s) * std::exp(log_tail);
  return std::max(0.0, bulk - correction);
}

double bandit_tail_prob(double z, const BanditParams& params) {
  params.validate();
  if (!(z >= 0.0)) {
    throw DomainError("bandit_tail_prob: z must be >= 0");
  }
  if (std::isinf(z)) {
    return 0.0;
  }
  const double w = params.omega;
  const double s = params.sigma0;
  const double first = normal_cdf((w - z) / s);
  if (w == 0.0) {
    return std::min(1.0, 2.0 * first);
  }
  const double second = std::exp(2.0 * w * z / (s * s) + log_normal_cdf(-(w + z) / s));
  return std::clamp(first + second, 0.0, 1.0);
}

double bandit_cdf(double y, const BanditParams& params) {
  if (!std::isfinite(y)) {
    if (std::isnan(y)) {
      throw DomainError("bandit_cdf: y must not be NaN");
    }
    return y > 0 ? 1.0 : 0.0;
  }
  const double half_tail = 0.5 * bandit_tail_prob(std::abs(y), params);
  return y >= 0.0 ? 1.0 - half_tail : half_tail;
}

double bandit_p_value(double t, const BanditParams& params) {
  if (std::isnan(t)) {
    throw DomainError("bandit_p_value: t must not be NaN");
  }
  return bandit_tail_prob(std::abs(t), params);
}

}  // namespace pwtab
