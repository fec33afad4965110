#include "pwtab/dgp.hpp"

#include "pwtab/errors.hpp"
#include "pwtab/rng.hpp"

#include <cmath>

namespace pwtab {

DgpKind parse_dgp_kind(std::string_view roman) {
  if (roman == "I" || roman == "1") return DgpKind::I;
  if (roman == "II" || roman == "2") return DgpKind::II;
  if (roman == "III" || roman == "3") return DgpKind::III;
  if (roman == "IV" || roman == "4") return DgpKind::IV;
  throw DomainError("unknown configuration '" + std::string(roman) + "' (expected I..IV)");
}

std::string to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::I: return "I";
    case DgpKind::II: return "II";
    case DgpKind::III: return "III";
    case DgpKind::IV: return "IV";
  }
  return "?";
}

void DgpConfig::validate() const {
  if (n < 2) throw DomainError("DgpConfig: n must be >= 2");
  if (!(p_treat > 0.0 && p_treat < 1.0)) throw DomainError("DgpConfig: p_treat must lie in (0, 1)");
  if (!(sigma_eps >= 0.0) || !std::isfinite(sigma_eps)) {
    throw DomainError("DgpConfig: sigma_eps must be finite and >= 0");
  }
}

double baseline_function(DgpKind kind, double x1, double x2) noexcept {
  switch (kind) {
    case DgpKind::I: return 2.0 * x1 + x2;
    case DgpKind::II: return x1 * (x2 + 1.0);
    case DgpKind::III: return x1 * x1 + x2 + 1.0;
    case DgpKind::IV: return 0.5 * x1 * std::exp(x2);
  }
  return 0.0;
}

double effect_function(DgpKind kind, double x1, double x2) noexcept {
  switch (kind) {
    case DgpKind::I: return 0.0;
    case DgpKind::II: return (x1 + 2.0 * x2) / 10.0;
    case DgpKind::III: return (x1 * x1 + x2 * x2) / 110.0;
    case DgpKind::IV: return (x1 + 2.0 * x2 * x2) / 105.0;
  }
  return 0.0;
}

double true_ate(DgpKind g_kind) noexcept {
  switch (g_kind) {
    case DgpKind::I:
    case DgpKind::II: return 0.0;
    case DgpKind::III: return 2.0 / 110.0;
    case DgpKind::IV: return 2.0 / 105.0;
  }
  return 0.0;
}

Dataset generate(const DgpConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.n);
  Dataset data;
  data.x.resize(n, 2);
  data.y.resize(n);
  data.a.resize(config.n);

  // Separate streams per variable, so e.g. changing sigma_eps leaves X and A
  // untouched.
  Rng covariates(derive_seed(config.seed, {0}));
  Rng assignment(derive_seed(config.seed, {1}));
  Rng noise(derive_seed(config.seed, {2}));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = covariates.normal();
    const double x2 = covariates.normal();
    const std::uint8_t a = assignment.bernoulli(config.p_treat) ? 1 : 0;
    data.x(i, 0) = x1;
    data.x(i, 1) = x2;
    data.a[static_cast<std::size_t>(i)] = a;
    data.y(i) = baseline_function(config.f_kind, x1, x2) +
                (a ? effect_function(config.g_kind, x1, x2) : 0.0) + config.sigma_eps * noise.normal();
  }
  return data;
}

}  // namespace pwtab
