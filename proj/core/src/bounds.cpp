#include "pscore/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pscore/errors.hpp"

namespace pscore {
namespace {

constexpr double kColumnSumTolerance = 1e-9;
constexpr std::size_t kMaxMatchedGroups = 10;  // permutation search guard

void check_column_stochastic(const Eigen::MatrixXd& mat, const char* name) {
  for (Eigen::Index j = 0; j < mat.cols(); ++j) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < mat.rows(); ++k) {
      const double v = mat(k, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DataError(std::string(name) + " entries must lie in [0, 1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kColumnSumTolerance) {
      throw DataError(std::string(name) + " column " + std::to_string(j) +
                      " sums to " + std::to_string(sum) + ", expected 1");
    }
  }
}

std::vector<std::vector<std::int64_t>> group_sizes_and_check(const std::vector<int>& a,
                                                             const std::vector<int>& b,
                                                             int na, int nb) {
  std::vector<std::vector<std::int64_t>> overlap(
      static_cast<std::size_t>(na), std::vector<std::int64_t>(static_cast<std::size_t>(nb), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++overlap[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
  }
  return overlap;
}

}  // namespace

void BoundsInstance::validate() const {
  if (p.rows() < 1 || p.cols() < 1) throw DataError("proportion matrices must be non-empty");
  if (p_star.rows() != p.rows() || p_star.cols() != p.cols()) {
    throw DataError("true and observed proportion matrices must share a shape");
  }
  if (static_cast<Eigen::Index>(c.size()) != p.cols()) {
    throw DataError("cluster size vector length must equal the column count");
  }
  for (std::int64_t size : c) {
    if (size <= 0) throw DataError("cluster sizes must be positive");
  }
  check_column_stochastic(p, "true proportion matrix");
  check_column_stochastic(p_star, "observed proportion matrix");
}

IndexSets index_sets(const BoundsInstance& inst, int k) {
  if (k < 0 || k >= inst.p.rows()) throw DataError("class index out of range");
  IndexSets sets;
  for (Eigen::Index j = 0; j < inst.p.cols(); ++j) {
    const double truth = inst.p(k, j);
    const double observed = inst.p_star(k, j);
    if (truth > 0.0) {
      sets.support.push_back(static_cast<int>(j));
      if (observed <= truth) sets.shrunk.push_back(static_cast<int>(j));
      else sets.grown.push_back(static_cast<int>(j));
    } else {
      sets.empty.push_back(static_cast<int>(j));
    }
  }
  return sets;
}

std::vector<bool> check_assumptions(const BoundsInstance& inst) {
  inst.validate();
  std::vector<bool> ok;
  for (Eigen::Index k = 0; k < inst.p.rows(); ++k) {
    const IndexSets sets = index_sets(inst, static_cast<int>(k));
    double on_support = 0.0, leaked = 0.0;
    for (int j : sets.support) {
      on_support += inst.p_star(k, j) * static_cast<double>(inst.c[static_cast<std::size_t>(j)]);
    }
    for (int j : sets.empty) {
      leaked += inst.p_star(k, j) * static_cast<double>(inst.c[static_cast<std::size_t>(j)]);
    }
    ok.push_back(on_support > leaked);
  }
  return ok;
}

double error_size(const BoundsInstance& inst, int k) {
  const IndexSets sets = index_sets(inst, k);
  double eps = 0.0;
  for (int j : sets.support) {
    eps += std::abs(inst.p(k, j) - inst.p_star(k, j)) *
           static_cast<double>(inst.c[static_cast<std::size_t>(j)]);
  }
  for (int j : sets.empty) {
    eps += inst.p_star(k, j) * static_cast<double>(inst.c[static_cast<std::size_t>(j)]);
  }
  return eps;
}

BoundResult error_rate_bound(const BoundsInstance& inst, int k) {
  const IndexSets sets = index_sets(inst, k);
  const double eps = error_size(inst, k);

  double correct = 0.0;
  for (int j : sets.support) {
    correct += std::min(inst.p(k, j), inst.p_star(k, j)) *
               static_cast<double>(inst.c[static_cast<std::size_t>(j)]);
  }

  double numerator = 0.0, denominator = 0.0;
  for (int j : sets.shrunk) {
    const double size = static_cast<double>(inst.c[static_cast<std::size_t>(j)]);
    numerator += inst.p(k, j) * size;
    denominator += (inst.p(k, j) + inst.p_star(k, j)) * size;
  }
  for (int j : sets.grown) {
    const double size = static_cast<double>(inst.c[static_cast<std::size_t>(j)]);
    numerator += 2.0 * (inst.p_star(k, j) - inst.p(k, j)) * size;
    denominator += 2.0 * inst.p_star(k, j) * size;
  }

  BoundResult result;
  if (sets.grown.empty()) result.case_kind = "shrink_only";
  else if (sets.shrunk.empty()) result.case_kind = "grow_only";
  else result.case_kind = "mixed";

  if (eps + correct <= 0.0 || denominator <= 0.0) {
    result.defined = false;
    return result;
  }
  result.defined = true;
  result.eta_hat = eps / (eps + correct);
  result.bound = numerator / denominator;
  return result;
}

std::vector<int> match_clusters_to_patterns(const std::vector<int>& patterns,
                                            const std::vector<int>& clusters) {
  if (patterns.size() != clusters.size()) {
    throw DataError("pattern and cluster label arrays must have equal length");
  }
  if (patterns.empty()) throw DataError("cannot match empty label arrays");
  int n_patterns = 0, n_clusters = 0;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    if (patterns[i] < 0 || clusters[i] < 0) throw DataError("group labels must be non-negative");
    n_patterns = std::max(n_patterns, patterns[i] + 1);
    n_clusters = std::max(n_clusters, clusters[i] + 1);
  }
  if (n_patterns != n_clusters) {
    throw DataError("have " + std::to_string(n_clusters) + " clusters but " +
                    std::to_string(n_patterns) + " patterns; counts must match");
  }
  if (static_cast<std::size_t>(n_patterns) > kMaxMatchedGroups) {
    throw DataError("cluster-to-pattern matching supports at most " +
                    std::to_string(kMaxMatchedGroups) + " groups");
  }

  const auto overlap = group_sizes_and_check(patterns, clusters, n_patterns, n_clusters);

  // Exact search over assignments; first permutation in lexicographic order
  // wins ties, which keeps the matching deterministic.
  std::vector<int> perm(static_cast<std::size_t>(n_clusters));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  std::int64_t best_score = -1;
  do {
    std::int64_t score = 0;
    for (int j = 0; j < n_patterns; ++j) {
      score += overlap[static_cast<std::size_t>(j)][static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
    }
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

BoundsInstance empirical_instance(const std::vector<int>& patterns,
                                  const std::vector<int>& true_treatments,
                                  const std::vector<int>& observed_treatments,
                                  const std::vector<int>& clusters) {
  const std::size_t m = patterns.size();
  if (true_treatments.size() != m || observed_treatments.size() != m || clusters.size() != m) {
    throw DataError("all label arrays must have equal length");
  }
  if (m == 0) throw DataError("cannot build an instance from zero rows");

  int d = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (true_treatments[i] < 0 || observed_treatments[i] < 0) {
      throw DataError("treatment labels must be non-negative");
    }
    d = std::max({d, true_treatments[i] + 1, observed_treatments[i] + 1});
  }
  const std::vector<int> matched = match_clusters_to_patterns(patterns, clusters);
  const int n = static_cast<int>(matched.size());

  std::vector<std::int64_t> pattern_size(static_cast<std::size_t>(n), 0);
  std::vector<std::int64_t> cluster_size(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < m; ++i) {
    ++pattern_size[static_cast<std::size_t>(patterns[i])];
    ++cluster_size[static_cast<std::size_t>(clusters[i])];
  }
  for (int j = 0; j < n; ++j) {
    if (pattern_size[static_cast<std::size_t>(j)] == 0) {
      throw DataError("pattern " + std::to_string(j) + " has no members");
    }
    if (cluster_size[static_cast<std::size_t>(j)] == 0) {
      throw DataError("cluster " + std::to_string(j) + " has no members");
    }
  }

  BoundsInstance inst;
  inst.p = Eigen::MatrixXd::Zero(d, n);
  inst.p_star = Eigen::MatrixXd::Zero(d, n);
  inst.c.assign(pattern_size.begin(), pattern_size.end());
  for (std::size_t i = 0; i < m; ++i) {
    inst.p(true_treatments[i], patterns[i]) += 1.0;
  }
  for (int j = 0; j < n; ++j) {
    inst.p.col(j) /= static_cast<double>(pattern_size[static_cast<std::size_t>(j)]);
  }
  // Column j of the observed matrix reads off the cluster matched to pattern j.
  std::vector<int> cluster_to_column(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    cluster_to_column[static_cast<std::size_t>(matched[static_cast<std::size_t>(j)])] = j;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const int col = cluster_to_column[static_cast<std::size_t>(clusters[i])];
    inst.p_star(observed_treatments[i], col) += 1.0;
  }
  for (int j = 0; j < n; ++j) {
    inst.p_star.col(j) /=
        static_cast<double>(cluster_size[static_cast<std::size_t>(matched[static_cast<std::size_t>(j)])]);
  }
  inst.validate();
  return inst;
}

}  // namespace pscore
