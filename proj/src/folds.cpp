#include "pwtab/folds.hpp"

#include "pwtab/errors.hpp"
#include "pwtab/rng.hpp"

namespace pwtab {

std::vector<std::size_t> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > n) {
    throw DomainError("make_folds: need 1 <= k <= n");
  }
  Rng rng(seed);
  const std::vector<std::size_t> perm = random_permutation(n, rng);
  std::vector<std::size_t> fold(n);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    for (std::size_t j = 0; j < len; ++j) {
      fold[perm[pos++]] = f;
    }
  }
  return fold;
}

std::vector<std::size_t> make_stratified_folds(const std::vector<std::uint8_t>& labels, std::size_t k,
                                               std::uint64_t seed) {
  if (k == 0 || k > labels.size()) {
    throw DomainError("make_stratified_folds: need 1 <= k <= n");
  }
  Rng rng(seed);
  std::vector<std::size_t> fold(labels.size());
  std::size_t next = 0;
  for (std::uint8_t arm : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == arm) rows.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(rows));
    for (std::size_t r : rows) {
      fold[r] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

}  // namespace pwtab
