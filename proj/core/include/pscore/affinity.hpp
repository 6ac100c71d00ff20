#pragma once

#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

#include "pscore/dataset.hpp"

namespace pscore {

struct KernelParams {
  // Gaussian bandwidth; unset means the median heuristic on the standardized
  // continuous block.
  std::optional<double> sigma;
  // Dense m x m storage cap; larger datasets must be subsampled first.
  std::size_t max_dense_samples = 12000;
};

struct AffinityMatrix {
  Eigen::MatrixXd values;
  // Resolved bandwidth; 0 when the dataset has no continuous block (or the
  // matrix was loaded from a cache dump, which stores values only).
  double sigma = 0.0;
};

// Z-scored continuous block (m x n_cont, population std); constant columns
// are centered to all-zero and otherwise left alone.
Eigen::MatrixXd standardized_continuous(const Dataset& data);

// exp(-|a - b|^2 / (2 sigma^2)).
double gaussian_kernel(std::span<const double> a, std::span<const double> b, double sigma);

// sqrt of the median off-diagonal pairwise squared Euclidean distance; the
// median of an even count is the mean of the two central order statistics.
double median_sigma(const Eigen::MatrixXd& points);

// Similarity for one discrete column: entry (i,j) = 1/N(v) when
// codes[i] = codes[j] = v, where N(v) counts rows with value v; 0 otherwise.
Eigen::MatrixXd delta_kernel_matrix(std::span<const int> codes);

// Feature-wise affinity: sum of per-discrete-column delta kernels plus one
// Gaussian kernel over the standardized continuous block.
AffinityMatrix build_affinity(const Dataset& data, const KernelParams& params);

// Cache dump: 4-byte magic "PSAF", uint32 row count (little-endian), then
// row-major 64-bit floats.
void write_affinity(const AffinityMatrix& affinity, const std::string& path);
AffinityMatrix read_affinity(const std::string& path);

}  // namespace pscore
