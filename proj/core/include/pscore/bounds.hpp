#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pscore {

// True and corrupted class-by-cluster proportion matrices plus cluster sizes.
// Both matrices are column-stochastic: every cluster's samples are fully
// assigned to classes.
struct BoundsInstance {
  Eigen::MatrixXd p;          // d x n, true proportions
  Eigen::MatrixXd p_star;     // d x n, observed (possibly corrupted) proportions
  std::vector<std::int64_t> c;  // n positive cluster sizes

  void validate() const;
};

// Per-class partition of cluster indices by how the observed proportions
// moved relative to the truth.
struct IndexSets {
  std::vector<int> support;  // clusters with true mass for the class
  std::vector<int> empty;    // clusters with zero true mass
  std::vector<int> shrunk;   // support clusters where observed <= true (ties here)
  std::vector<int> grown;    // support clusters where observed > true
};

IndexSets index_sets(const BoundsInstance& inst, int k);

// Per class: does the observed mass remaining on the class's true support
// strictly exceed the observed mass that leaked onto zero-support clusters?
std::vector<bool> check_assumptions(const BoundsInstance& inst);

// Absolute sample mass that moved for class k: sum over support clusters of
// |true - observed| * size, plus all observed mass on zero-support clusters.
double error_size(const BoundsInstance& inst, int k);

struct BoundResult {
  bool defined = false;
  double eta_hat = 0.0;     // estimated error rate among retained samples
  double bound = 0.0;       // upper bound on eta_hat
  std::string case_kind;    // "shrink_only", "grow_only", or "mixed"
};

// eta_hat = eps / (eps + sum over support of min(true, observed) * size);
// bound = [sum_shrunk true*size + sum_grown 2*(observed-true)*size] /
//         [sum_shrunk (true+observed)*size + sum_grown 2*observed*size].
// Both are reported undefined when their denominators vanish.
BoundResult error_rate_bound(const BoundsInstance& inst, int k);

// Build an instance from per-row ground truth and pipeline outputs: true
// proportions from (true treatment x pattern), observed proportions from
// (observed treatment x cluster) after matching clusters to patterns by
// maximum overlap, sizes from pattern membership counts. Requires equal
// pattern and cluster counts, every group non-empty, and at most 10 patterns
// (the matching enumerates permutations).
BoundsInstance empirical_instance(const std::vector<int>& patterns,
                                  const std::vector<int>& true_treatments,
                                  const std::vector<int>& observed_treatments,
                                  const std::vector<int>& clusters);

// The cluster-to-pattern matching used by empirical_instance, exposed for
// direct testing: result[j] = cluster index assigned to pattern j.
std::vector<int> match_clusters_to_patterns(const std::vector<int>& patterns,
                                            const std::vector<int>& clusters);

}  // namespace pscore
