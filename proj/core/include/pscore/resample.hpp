#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "pscore/dataset.hpp"
#include "pscore/spectral.hpp"

namespace pscore {

struct ResampleParams {
  double gamma = 0.7;    // interpolation trade-off, >= 0
  double eta = 2.0;      // corruption importance, in [0, 2]
  double epsilon = 0.0;  // assumed corruption proportion, in [0, 0.5]
  void validate() const;  // also requires eta * epsilon < 1
};

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// W[i][j] = number of samples with treatment class i in cluster j.
CountMatrix contingency(const ClusterAssignment& assign, const Dataset& data);

// w*[i][j] = W[i][j] / column sum. Errors on an empty cluster column.
Eigen::MatrixXd normalize_columns(const CountMatrix& w);

// w_hat = w* + (gamma / (1 - eta*epsilon)) * w*^2, elementwise.
Eigen::MatrixXd interpolate(const Eigen::MatrixXd& w_star, const ResampleParams& params);

// p*[i][j] = w_hat[i][j] / row sum. Errors on an all-zero row.
Eigen::MatrixXd row_distribution(const Eigen::MatrixXd& w_hat);

// One class's target apportioned over clusters by largest remainder on p,
// capped at per-cluster capacities; excess is re-apportioned over the
// still-uncapped clusters proportionally to their residual p until stable.
std::vector<std::int64_t> apportion_with_caps(std::int64_t target, const Eigen::VectorXd& p,
                                              const std::vector<std::int64_t>& capacity);

struct ResamplePlan {
  CountMatrix W;
  Eigen::MatrixXd w_star;
  Eigen::MatrixXd w_hat;
  Eigen::MatrixXd p_star;
  CountMatrix quotas;                  // d x n integer draw counts
  std::vector<std::int64_t> targets;   // per-class subset sizes
  bool with_replacement = false;
};

// Full W -> w* -> w_hat -> p* chain plus integer quotas. Empty targets means
// "per-class target = class size".
ResamplePlan make_plan(const ClusterAssignment& assign, const Dataset& data,
                       const ResampleParams& params, std::vector<std::int64_t> targets,
                       bool with_replacement);

struct DrawOptions {
  std::vector<std::int64_t> targets;  // empty = class sizes
  bool with_replacement = false;
};

// Draws each class's quota uniformly within (treatment, cluster) cells;
// treatment labels are preserved and provenance (source row) is recorded.
Dataset draw_subset(const Dataset& data, const ClusterAssignment& assign,
                    const Eigen::MatrixXd& p_star, const DrawOptions& options,
                    std::uint64_t seed);

// JSON report: W, w*, w_hat, p*, quotas, with class level names attached.
nlohmann::json plan_to_json(const ResamplePlan& plan, const Dataset& data);

}  // namespace pscore
