#pragma once

namespace pwtab {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x) noexcept;

// Standard normal CDF. Stays strictly positive down to about x = -38.
double normal_cdf(double x) noexcept;

// log(normal_cdf(x)), accurate for arbitrarily negative x.
double log_normal_cdf(double x) noexcept;

// Inverse of normal_cdf on (0, 1). Throws DomainError outside the open interval.
double normal_quantile(double p);

}  // namespace pwtab
