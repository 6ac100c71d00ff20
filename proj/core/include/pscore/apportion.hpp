#pragma once

#include <cstdint>
#include <vector>

namespace pscore {

// Largest-remainder (Hamilton) apportionment of `total` units over weights.
// Weights must be non-negative with a positive sum. Ideal shares are
// total * w_i / sum(w); each slot gets the floor, and leftover units go to the
// largest fractional remainders (ties broken toward the lower index).
std::vector<std::int64_t> largest_remainder_apportion(std::int64_t total,
                                                      const std::vector<double>& weights);

}  // namespace pscore
