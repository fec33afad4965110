#include "pwtab/baselines.hpp"

#include "pwtab/errors.hpp"
#include "pwtab/learners.hpp"
#include "pwtab/normal.hpp"

#include <algorithm>
#include <cmath>

namespace pwtab {

std::string to_string(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::dim: return "DIM";
    case BaselineMethod::cuped: return "CUPED";
    case BaselineMethod::zdml: return "zDML";
  }
  return "unknown";
}

namespace {

// Fills z and both p-values from estimate and variance. A zero variance
// with a nonzero estimate gives an infinite z and floored p-values.
BaselineResult finish(BaselineMethod method, double estimate, double variance) {
  BaselineResult r;
  r.method = method;
  r.estimate = estimate;
  r.variance = variance;
  if (variance > 0.0) {
    r.z = estimate / std::sqrt(variance);
  } else {
    r.z = estimate == 0.0 ? 0.0 : std::copysign(INFINITY, estimate);
  }
  r.p_two_sided = std::max(kPValueFloor, 2.0 * normal_cdf(-std::abs(r.z)));
  r.p_one_sided = std::max(kPValueFloor, normal_cdf(-r.z));
  return r;
}

struct ArmMoments {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

ArmMoments arm_moments(const Eigen::VectorXd& y, const std::vector<std::uint8_t>& a, std::uint8_t arm) {
  ArmMoments m;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == arm) {
      total += y(static_cast<Eigen::Index>(i));
      ++m.count;
    }
  }
  if (m.count < 2) {
    throw DomainError("dim_test: each arm needs at least two subjects");
  }
  m.mean = total / static_cast<double>(m.count);
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == arm) {
      const double dev = y(static_cast<Eigen::Index>(i)) - m.mean;
      ss += dev * dev;
    }
  }
  m.variance = ss / static_cast<double>(m.count - 1);
  return m;
}

BaselineResult difference_in_means(const Eigen::VectorXd& y, const std::vector<std::uint8_t>& a,
                                   BaselineMethod method) {
  if (static_cast<std::size_t>(y.size()) != a.size()) {
    throw DomainError("dim_test: outcome and treatment lengths differ");
  }
  const ArmMoments treated = arm_moments(y, a, 1);
  const ArmMoments control = arm_moments(y, a, 0);
  const double variance = treated.variance / static_cast<double>(treated.count) +
                          control.variance / static_cast<double>(control.count);
  return finish(method, treated.mean - control.mean, variance);
}

}  // namespace

BaselineResult dim_test(const Dataset& data) {
  return difference_in_means(data.y, data.a, BaselineMethod::dim);
}

BaselineResult cuped_test(const Dataset& data, const std::vector<std::size_t>& columns) {
  const Eigen::Index d = data.x.cols();
  if (d == 0) {
    throw DomainError("cuped_test: need at least one covariate");
  }
  Eigen::MatrixXd covariates;
  if (columns.empty()) {
    covariates = data.x;
  } else {
    covariates.resize(data.x.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] >= static_cast<std::size_t>(d)) {
        throw DomainError("cuped_test: covariate column out of range");
      }
      covariates.col(static_cast<Eigen::Index>(j)) = data.x.col(static_cast<Eigen::Index>(columns[j]));
    }
  }
  // least_squares falls back to a 1e-8 ridge on a singular Gram matrix.
  const Eigen::VectorXd coef = least_squares(covariates, data.y);
  const Eigen::RowVectorXd centre = covariates.colwise().mean();
  const Eigen::VectorXd theta = coef.tail(covariates.cols());
  const Eigen::VectorXd adjusted = data.y - (covariates.rowwise() - centre) * theta;
  return difference_in_means(adjusted, data.a, BaselineMethod::cuped);
}

BaselineResult zdml_test(const PseudoOutcomes& pseudo) {
  const double n = static_cast<double>(pseudo.size());
  if (pseudo.size() < 2) {
    throw DomainError("zdml_test: need at least two pseudo-outcomes");
  }
  if (pseudo.sigma_hat == 0.0) {
    throw DegenerateVarianceError("zdml_test: pseudo-outcomes have zero variance");
  }
  // estimate / sqrt(variance) = sum / (sqrt(n) sigma_hat)
  return finish(BaselineMethod::zdml, pseudo.mean, pseudo.sigma_hat * pseudo.sigma_hat / n);
}

}  // namespace pwtab
