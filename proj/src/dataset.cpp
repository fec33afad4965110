#include "pwtab/dataset.hpp"

#include "pwtab/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace pwtab {

std::size_t Dataset::treated() const noexcept {
  return static_cast<std::size_t>(std::count(a.begin(), a.end(), std::uint8_t{1}));
}

void Dataset::validate() const {
  const auto n = static_cast<Eigen::Index>(a.size());
  if (x.rows() != n || y.size() != n) {
    throw DomainError("Dataset: X rows, Y and A lengths differ (" + std::to_string(x.rows()) +
                      ", " + std::to_string(y.size()) + ", " + std::to_string(n) + ")");
  }
  for (std::uint8_t ai : a) {
    if (ai > 1) {
      throw DomainError("Dataset: treatment indicator outside {0, 1}");
    }
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw DomainError("Dataset: non-finite covariate or outcome");
  }
  const std::size_t n1 = treated();
  if (n1 == 0 || n1 == a.size()) {
    throw DomainError("Dataset: both treatment arms must be non-empty");
  }
  if (fold_id && fold_id->size() != a.size()) {
    throw DomainError("Dataset: fold_id length mismatch");
  }
}

Dataset Dataset::subset(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.x.resize(m, data.x.cols());
  out.y.resize(m);
  out.a.resize(rows.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    out.x.row(i) = data.x.row(r);
    out.y(i) = data.y(r);
    out.a[static_cast<std::size_t>(i)] = data.a[static_cast<std::size_t>(r)];
  }
  return out;
}

}  // namespace pwtab
