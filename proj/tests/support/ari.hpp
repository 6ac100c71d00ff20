#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace test_support {

// Adjusted Rand index between two labelings of the same rows.
// 1.0 = identical partitions (up to renaming), ~0 = chance agreement.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  int ka = 0, kb = 0;
  for (int v : a) ka = std::max(ka, v + 1);
  for (int v : b) kb = std::max(kb, v + 1);
  std::vector<std::vector<std::int64_t>> table(static_cast<std::size_t>(ka),
                                               std::vector<std::int64_t>(static_cast<std::size_t>(kb), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
  }
  auto choose2 = [](std::int64_t n) { return n * (n - 1) / 2; };

  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  std::vector<std::int64_t> col_sums(static_cast<std::size_t>(kb), 0);
  for (int i = 0; i < ka; ++i) {
    std::int64_t row_sum = 0;
    for (int j = 0; j < kb; ++j) {
      const std::int64_t n = table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      sum_cells += static_cast<double>(choose2(n));
      row_sum += n;
      col_sums[static_cast<std::size_t>(j)] += n;
    }
    sum_rows += static_cast<double>(choose2(row_sum));
  }
  for (std::int64_t c : col_sums) sum_cols += static_cast<double>(choose2(c));

  const double total = static_cast<double>(choose2(static_cast<std::int64_t>(a.size())));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_cells - expected) / (max_index - expected);
}

}  // namespace test_support
