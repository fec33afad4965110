#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace pwtab {

// Observational triples (x_i, y_i, a_i). Covariates are stored column-major,
// one row per subject.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::uint8_t> a;
  std::optional<std::vector<std::size_t>> fold_id;

  std::size_t size() const noexcept { return a.size(); }
  std::size_t covariates() const noexcept { return static_cast<std::size_t>(x.cols()); }
  std::size_t treated() const noexcept;
  std::size_t control() const noexcept { return size() - treated(); }

  // Throws DomainError on mismatched lengths, treatment values outside
  // {0, 1}, non-finite entries, or an empty treatment arm.
  void validate() const;

  // Rows of `data` at `rows` (duplicates allowed), fold ids dropped.
  static Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows);
};

}  // namespace pwtab
