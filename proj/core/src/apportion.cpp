#include "pscore/apportion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pscore {

std::vector<std::int64_t> largest_remainder_apportion(std::int64_t total,
                                                      const std::vector<double>& weights) {
  if (total < 0) throw std::invalid_argument("apportion: negative total");
  if (weights.empty()) throw std::invalid_argument("apportion: no weights");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("apportion: negative or NaN weight");
    sum += w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("apportion: weights sum to zero");

  const std::size_t k = weights.size();
  std::vector<std::int64_t> base(k);
  std::vector<double> remainder(k);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double share = static_cast<double>(total) * (weights[i] / sum);
    base[i] = static_cast<std::int64_t>(std::floor(share));
    remainder[i] = share - static_cast<double>(base[i]);
    assigned += base[i];
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a < b;
  });

  std::int64_t leftover = total - assigned;
  for (std::size_t pos = 0; leftover > 0 && pos < k; ++pos) {
    ++base[order[pos]];
    --leftover;
  }
  // Floating-point shares can over-floor by a unit in pathological cases; trim
  // from the smallest remainders so the result always sums to total.
  for (std::size_t pos = k; leftover < 0 && pos > 0; --pos) {
    const std::size_t idx = order[pos - 1];
    if (base[idx] > 0) {
      --base[idx];
      ++leftover;
    }
  }
  return base;
}

}  // namespace pscore
