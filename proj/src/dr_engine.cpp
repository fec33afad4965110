#include "pwtab/dr_engine.hpp"

#include "pwtab/errors.hpp"
#include "pwtab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <string>

namespace pwtab {

namespace {

constexpr int kFoldAttempts = 5;

bool folds_have_both_arms(const std::vector<std::size_t>& fold, const std::vector<std::uint8_t>& a,
                          std::size_t k) {
  std::vector<std::size_t> treated(k, 0);
  std::vector<std::size_t> total(k, 0);
  for (std::size_t i = 0; i < fold.size(); ++i) {
    ++total[fold[i]];
    treated[fold[i]] += a[i];
  }
  for (std::size_t f = 0; f < k; ++f) {
    if (treated[f] == 0 || treated[f] == total[f]) return false;
  }
  return true;
}

std::vector<std::size_t> choose_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (data.fold_id) {
    const auto& given = *data.fold_id;
    if (std::any_of(given.begin(), given.end(), [k](std::size_t f) { return f >= k; })) {
      throw DomainError("cross_fit: fold_id outside 0..K-1");
    }
    if (!folds_have_both_arms(given, data.a, k)) {
      throw FoldError("cross_fit: supplied folds lack a treatment arm");
    }
    return given;
  }
  for (int attempt = 0; attempt < kFoldAttempts; ++attempt) {
    auto fold = make_folds(n, k, derive_seed(seed, {0, static_cast<std::uint64_t>(attempt)}));
    if (folds_have_both_arms(fold, data.a, k)) return fold;
  }
  auto fold = make_stratified_folds(data.a, k, derive_seed(seed, {0, kFoldAttempts}));
  if (!folds_have_both_arms(fold, data.a, k)) {
    throw FoldError("cross_fit: cannot place both treatment arms in all " + std::to_string(k) +
                    " folds");
  }
  return fold;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Eigen::VectorXd rows_of(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(rows[i]));
  return out;
}

FittedModel fit_on_rows(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::vector<std::size_t>& rows, std::uint64_t seed) {
  FittedModel model = fit(spec, rows_of(x, rows), rows_of(y, rows), seed);
  model.train_row_ids = rows;
  return model;
}

}  // namespace

NuisanceFits cross_fit(const Dataset& data, const CounterfactualConfig& config, std::uint64_t seed) {
  data.validate();
  const std::size_t n = data.size();
  const std::size_t k = config.folds;
  if (k < 2 || n < 2 * k) {
    throw DomainError("cross_fit: need K >= 2 and n >= 2K");
  }
  if (!(config.clip_eps > 0.0 && config.clip_eps < 0.5)) {
    throw DomainError("cross_fit: clip_eps must lie in (0, 0.5)");
  }
  if (config.known_propensity &&
      !(*config.known_propensity > 0.0 && *config.known_propensity < 1.0)) {
    throw DomainError("cross_fit: known propensity must lie in (0, 1)");
  }
  const LearnerSpec outcome_spec = config.learner.for_task(LearnerTask::regression);
  const LearnerSpec propensity_spec = config.learner.for_task(LearnerTask::binary_probability);
  outcome_spec.validate();
  propensity_spec.validate();

  NuisanceFits fits;
  fits.clip_eps = config.clip_eps;
  fits.fold_id = choose_folds(data, k, seed);
  fits.training.resize(k);
  fits.m0_hat.resize(static_cast<Eigen::Index>(n));
  fits.m1_hat.resize(static_cast<Eigen::Index>(n));
  fits.e_hat.resize(static_cast<Eigen::Index>(n));

  Eigen::VectorXd treatment(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) treatment(static_cast<Eigen::Index>(i)) = data.a[i];

  auto run_fold = [&](std::size_t f) {
    FoldTraining& training = fits.training[f];
    std::vector<std::size_t> held;
    for (std::size_t i = 0; i < n; ++i) {
      if (fits.fold_id[i] == f) {
        held.push_back(i);
        continue;
      }
      (data.a[i] ? training.m1_rows : training.m0_rows).push_back(i);
      if (!config.known_propensity) training.e_rows.push_back(i);
    }
    const auto fseed = static_cast<std::uint64_t>(f);
    const FittedModel m0 =
        fit_on_rows(outcome_spec, data.x, data.y, training.m0_rows, derive_seed(seed, {1, fseed, 0}));
    const FittedModel m1 =
        fit_on_rows(outcome_spec, data.x, data.y, training.m1_rows, derive_seed(seed, {1, fseed, 1}));
    const Eigen::MatrixXd x_held = rows_of(data.x, held);
    const Eigen::VectorXd m0_pred = predict(m0, x_held);
    const Eigen::VectorXd m1_pred = predict(m1, x_held);
    Eigen::VectorXd e_pred;
    if (config.known_propensity) {
      e_pred = Eigen::VectorXd::Constant(x_held.rows(), *config.known_propensity);
    } else {
      const FittedModel e = fit_on_rows(propensity_spec, data.x, treatment, training.e_rows,
                                        derive_seed(seed, {1, fseed, 2}));
      e_pred = predict(e, x_held);
    }
    for (std::size_t j = 0; j < held.size(); ++j) {
      const auto i = static_cast<Eigen::Index>(held[j]);
      const auto jj = static_cast<Eigen::Index>(j);
      fits.m0_hat(i) = m0_pred(jj);
      fits.m1_hat(i) = m1_pred(jj);
      fits.e_hat(i) = std::clamp(e_pred(jj), config.clip_eps, 1.0 - config.clip_eps);
    }
  };

  if (config.parallel_folds) {
    std::vector<std::future<void>> tasks;
    tasks.reserve(k);
    for (std::size_t f = 0; f < k; ++f) tasks.push_back(std::async(std::launch::async, run_fold, f));
    for (auto& t : tasks) t.get();
  } else {
    for (std::size_t f = 0; f < k; ++f) run_fold(f);
  }
  return fits;
}

PseudoOutcomes dr_pseudo_outcomes(const Dataset& data, const NuisanceFits& fits) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (data.y.size() != n || fits.m0_hat.size() != n || fits.m1_hat.size() != n ||
      fits.e_hat.size() != n) {
    throw DomainError("dr_pseudo_outcomes: fits not aligned with data");
  }
  std::vector<double> mu(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = std::clamp(fits.e_hat(i), fits.clip_eps, 1.0 - fits.clip_eps);
    const double m0 = fits.m0_hat(i);
    const double m1 = fits.m1_hat(i);
    const double y = data.y(i);
    double value = m1 - m0;
    if (data.a[static_cast<std::size_t>(i)]) {
      value += (y - m1) / e;
    } else {
      value -= (y - m0) / (1.0 - e);
    }
    mu[static_cast<std::size_t>(i)] = value;
  }
  return RewardSequence::from_values(std::move(mu));
}

PseudoOutcomes estimate_pseudo_outcomes(const Dataset& data, const CounterfactualConfig& config,
                                        std::uint64_t seed) {
  return dr_pseudo_outcomes(data, cross_fit(data, config, seed));
}

double ate_point_estimate(const PseudoOutcomes& p) {
  if (p.mu_hat.empty()) {
    throw DomainError("ate_point_estimate: no pseudo-outcomes");
  }
  return p.mean;
}

}  // namespace pwtab
