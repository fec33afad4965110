#pragma once

#include "pwtab/dataset.hpp"
#include "pwtab/tab_statistic.hpp"

#include <string>
#include <vector>

namespace pwtab {

enum class BaselineMethod { dim, cuped, zdml };

std::string to_string(BaselineMethod method);

struct BaselineResult {
  BaselineMethod method = BaselineMethod::dim;
  double estimate = 0.0;
  double variance = 0.0;
  double z = 0.0;
  double p_one_sided = 1.0;  // H1: effect > 0
  double p_two_sided = 1.0;
};

// Smallest p-value reported when the z statistic is infinite.
inline constexpr double kPValueFloor = 1e-300;

// Difference in arm means with variance s1^2/n1 + s0^2/n0. Requires at least
// two subjects per arm.
BaselineResult dim_test(const Dataset& data);

// Control-variate adjustment y - theta'(x - mean(x)), theta the pooled
// least-squares slope of y on the selected covariates, followed by dim_test.
// Empty `columns` selects every covariate.
BaselineResult cuped_test(const Dataset& data, const std::vector<std::size_t>& columns = {});

// z = sum(mu_hat) / (sqrt(n) sigma_hat) on DR pseudo-outcomes.
BaselineResult zdml_test(const PseudoOutcomes& pseudo);

}  // namespace pwtab
