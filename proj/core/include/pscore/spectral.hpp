#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "pscore/affinity.hpp"
#include "pscore/dataset.hpp"

namespace pscore {

struct SpectralEmbedding {
  Eigen::MatrixXd rows;             // m x n, row-normalized eigenvector block
  std::vector<double> eigenvalues;  // full spectrum of the normalized operator, descending
};

// Ng-Jordan-Weiss embedding: S = D^{-1/2} A D^{-1/2}, top-n eigenvectors as
// columns (descending eigenvalue, largest-magnitude entry of each made
// positive), rows normalized to unit length (exactly-zero rows left zero).
SpectralEmbedding spectral_embed(const AffinityMatrix& affinity, int n_clusters);

struct ClusterAssignment {
  std::vector<int> labels;   // m values in [0, n)
  int n = 0;
  Eigen::MatrixXd embedded;  // the points that were clustered
  double inertia = 0.0;      // best within-cluster sum of squared distances
};

// Lloyd's algorithm from k-means++ starts; per-restart stream seeded with
// seed + restart index; best restart by (inertia, restart index).
ClusterAssignment kmeans(const Eigen::MatrixXd& points, int n_clusters, int restarts,
                         std::uint64_t seed);

// build_affinity -> spectral_embed -> kmeans.
ClusterAssignment cluster(const Dataset& data, int n_clusters, const KernelParams& params,
                          std::uint64_t seed, int restarts = 10);

}  // namespace pscore
