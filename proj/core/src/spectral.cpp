#include "pscore/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <dlfcn.h>
#include <lapacke.h>

#include "pscore/errors.hpp"
#include "pscore/parallel.hpp"
#include "pscore/rng.hpp"

namespace pscore {
namespace {

constexpr double kCentroidTolerance = 1e-10;
constexpr int kMaxLloydIterations = 300;

// The LAPACK backend (OpenBLAS here) spawns its own threads unless told not
// to; pin it to the pipeline-wide cap so runs are deterministic by default.
void pin_blas_threads() {
  static const bool done = [] {
    using SetNumThreads = void (*)(int);
    void* sym = dlsym(RTLD_DEFAULT, "openblas_set_num_threads");
    if (sym != nullptr) {
      reinterpret_cast<SetNumThreads>(sym)(static_cast<int>(thread_cap()));
    }
    return true;
  }();
  (void)done;
}

struct LloydResult {
  std::vector<int> labels;
  double inertia = 0.0;
};

double squared_distance(const Eigen::MatrixXd& points, Eigen::Index row,
                        const Eigen::MatrixXd& centroids, Eigen::Index c) {
  return (points.row(row) - centroids.row(c)).squaredNorm();
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int n, Rng& rng);

}  // namespace

SpectralEmbedding spectral_embed(const AffinityMatrix& affinity, int n_clusters) {
  const Eigen::MatrixXd& a = affinity.values;
  const Eigen::Index m = a.rows();
  if (a.cols() != m) throw DataError("affinity matrix is not square");
  if (n_clusters < 2) throw ConfigError("spectral embedding needs at least 2 clusters");
  if (static_cast<Eigen::Index>(n_clusters) > m) {
    throw DataError("cluster count " + std::to_string(n_clusters) + " exceeds sample count " +
                    std::to_string(m));
  }

  Eigen::VectorXd degrees = a.rowwise().sum();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(degrees(i) > 0.0)) {
      throw DataError("sample " + std::to_string(i) + " has zero affinity degree (isolated)");
    }
  }
  Eigen::VectorXd inv_sqrt = degrees.array().rsqrt();

  Eigen::MatrixXd s(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      s(i, j) = a(i, j) * inv_sqrt(i) * inv_sqrt(j);
    }
  }

  pin_blas_threads();
  std::vector<double> eigenvalues_asc(static_cast<std::size_t>(m));
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(m), s.data(),
                     static_cast<lapack_int>(m), eigenvalues_asc.data());
  if (info != 0) {
    throw NumericError("symmetric eigensolver failed to converge (info=" +
                       std::to_string(info) + ")");
  }

  SpectralEmbedding result;
  result.eigenvalues.assign(eigenvalues_asc.rbegin(), eigenvalues_asc.rend());

  result.rows.resize(m, n_clusters);
  for (int k = 0; k < n_clusters; ++k) {
    Eigen::VectorXd v = s.col(m - 1 - k);
    // Fixed sign convention: the largest-magnitude entry (first on ties) is
    // made positive so eigenvector signs do not depend on solver internals.
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double mag = std::abs(v(i));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (v(arg) < 0.0) v = -v;
    result.rows.col(k) = v;
  }

  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm = result.rows.row(i).norm();
    if (norm > 0.0) result.rows.row(i) /= norm;
  }
  return result;
}

namespace {

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int n, Rng& rng) {
  const Eigen::Index m = points.rows();
  Eigen::MatrixXd centroids(n, points.cols());
  std::vector<double> d2(static_cast<std::size_t>(m));
  std::vector<char> chosen(static_cast<std::size_t>(m), 0);

  const Eigen::Index first = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(m)));
  centroids.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  for (Eigen::Index i = 0; i < m; ++i) {
    d2[static_cast<std::size_t>(i)] = (points.row(i) - centroids.row(0)).squaredNorm();
  }

  for (int k = 1; k < n; ++k) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double w = d2[static_cast<std::size_t>(i)];
        if (w <= 0.0) continue;
        cum += w;
        pick = i;
        if (u < cum) break;
      }
    } else {
      // All remaining points coincide with chosen centroids; take the first
      // unchosen index so the run can proceed deterministically.
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(k) = points.row(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double dist = (points.row(i) - centroids.row(k)).squaredNorm();
      double& cur = d2[static_cast<std::size_t>(i)];
      if (dist < cur) cur = dist;
    }
  }
  return centroids;
}

LloydResult lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids) {
  const Eigen::Index m = points.rows();
  const int n = static_cast<int>(centroids.rows());
  std::vector<int> labels(static_cast<std::size_t>(m), 0);
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(n), 0);

  auto assign_all = [&] {
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      int best_c = 0;
      double best_d = squared_distance(points, i, centroids, 0);
      for (int c = 1; c < n; ++c) {
        const double d = squared_distance(points, i, centroids, c);
        if (d < best_d) {  // ties keep the lowest cluster index
          best_d = d;
          best_c = c;
        }
      }
      labels[static_cast<std::size_t>(i)] = best_c;
      ++counts[static_cast<std::size_t>(best_c)];
    }
  };

  auto repair_empty = [&] {
    for (int c = 0; c < n; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      // Re-seed at the point farthest from its assigned centroid, skipping
      // points that are the sole member of their cluster.
      Eigen::Index far_row = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const int owner = labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(owner)] <= 1) continue;
        const double d = squared_distance(points, i, centroids, owner);
        if (d > far_d) {
          far_d = d;
          far_row = i;
        }
      }
      if (far_row < 0) continue;  // no donor available; leave empty
      const int owner = labels[static_cast<std::size_t>(far_row)];
      --counts[static_cast<std::size_t>(owner)];
      labels[static_cast<std::size_t>(far_row)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      centroids.row(c) = points.row(far_row);
    }
  };

  for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
    assign_all();
    repair_empty();

    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, points.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
      next.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
    }
    for (int c = 0; c < n; ++c) {
      const Eigen::Index count = counts[static_cast<std::size_t>(c)];
      if (count > 0) next.row(c) /= static_cast<double>(count);
      else next.row(c) = centroids.row(c);
    }

    double movement = 0.0;
    for (int c = 0; c < n; ++c) {
      movement = std::max(movement, (next.row(c) - centroids.row(c)).norm());
    }
    centroids = std::move(next);
    if (movement < kCentroidTolerance) break;
  }

  assign_all();
  LloydResult result;
  result.labels = labels;
  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    result.inertia +=
        squared_distance(points, i, centroids, labels[static_cast<std::size_t>(i)]);
  }
  return result;
}

}  // namespace

ClusterAssignment kmeans(const Eigen::MatrixXd& points, int n_clusters, int restarts,
                         std::uint64_t seed) {
  const Eigen::Index m = points.rows();
  if (n_clusters < 1) throw ConfigError("kmeans needs at least 1 cluster");
  if (restarts < 1) throw ConfigError("kmeans needs at least 1 restart");
  if (m < static_cast<Eigen::Index>(n_clusters)) {
    throw DataError("kmeans: fewer points than clusters");
  }

  {
    std::set<std::vector<double>> distinct;
    for (Eigen::Index i = 0; i < m; ++i) {
      std::vector<double> row(points.row(i).begin(), points.row(i).end());
      distinct.insert(std::move(row));
      if (distinct.size() >= static_cast<std::size_t>(n_clusters)) break;
    }
    if (distinct.size() < static_cast<std::size_t>(n_clusters)) {
      throw DataError("kmeans: fewer distinct points than clusters");
    }
  }

  // Restarts run independently (parallelizable); the winner is the lowest
  // inertia with ties to the lowest restart index, equal to the sequential
  // outcome.
  std::vector<LloydResult> results(static_cast<std::size_t>(restarts));
  parallel_for(0, static_cast<std::size_t>(restarts), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      Rng rng(seed + static_cast<std::uint64_t>(r));
      results[r] = lloyd(points, kmeanspp_init(points, n_clusters, rng));
    }
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].inertia < results[best].inertia) best = r;
  }

  ClusterAssignment assignment;
  assignment.labels = std::move(results[best].labels);
  assignment.n = n_clusters;
  assignment.embedded = points;
  assignment.inertia = results[best].inertia;
  return assignment;
}

ClusterAssignment cluster(const Dataset& data, int n_clusters, const KernelParams& params,
                          std::uint64_t seed, int restarts) {
  const AffinityMatrix affinity = build_affinity(data, params);
  const SpectralEmbedding embedding = spectral_embed(affinity, n_clusters);
  ClusterAssignment assignment = kmeans(embedding.rows, n_clusters, restarts, seed);
  return assignment;
}

}  // namespace pscore
