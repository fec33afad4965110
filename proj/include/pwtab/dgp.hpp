#pragma once

// Synthetic randomized trials: X1, X2 iid N(0, 1), A ~ Bernoulli(p_treat)
// independent of X, Y = F(X1, X2) + A G(X1, X2) + eps, eps ~ N(0, sigma_eps^2).
//
//        F                    G
//   I    2 X1 + X2            0
//   II   X1 (X2 + 1)          (X1 + 2 X2) / 10
//   III  X1^2 + X2 + 1        (X1^2 + X2^2) / 110
//   IV   0.5 X1 exp(X2)       (X1 + 2 X2^2) / 105

#include "pwtab/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace pwtab {

enum class DgpKind { I = 1, II, III, IV };

DgpKind parse_dgp_kind(std::string_view roman);
std::string to_string(DgpKind kind);

struct DgpConfig {
  DgpKind f_kind = DgpKind::I;
  DgpKind g_kind = DgpKind::I;
  double sigma_eps = 0.5;
  std::size_t n = 20000;
  double p_treat = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

double baseline_function(DgpKind kind, double x1, double x2) noexcept;
double effect_function(DgpKind kind, double x1, double x2) noexcept;

Dataset generate(const DgpConfig& config);

// E[G(X1, X2)] for standard normal covariates.
double true_ate(DgpKind g_kind) noexcept;
inline double true_ate(const DgpConfig& config) noexcept { return true_ate(config.g_kind); }

}  // namespace pwtab
