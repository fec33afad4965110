#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pwtab {

// Random partition of 0..n-1 into k near-equal folds: shuffle, then cut into
// contiguous chunks; the first n % k folds get one extra element. Returns the
// fold id of every index.
std::vector<std::size_t> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

// Fold ids with each arm shuffled and dealt round-robin, so every fold gets
// floor or ceil of each arm's share.
std::vector<std::size_t> make_stratified_folds(const std::vector<std::uint8_t>& labels, std::size_t k,
                                               std::uint64_t seed);

}  // namespace pwtab
