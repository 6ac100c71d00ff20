#include "pscore/fixtures.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "pscore/errors.hpp"
#include "pscore/textio.hpp"

namespace pscore {
namespace {

Eigen::MatrixXd real_matrix(const nlohmann::json& rows, const std::string& name) {
  if (!rows.is_array() || rows.empty()) throw DataError("fixture '" + name + "' must be a matrix");
  const std::size_t cols = rows[0].size();
  Eigen::MatrixXd mat(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw DataError("fixture '" + name + "' is ragged");
    for (std::size_t j = 0; j < cols; ++j) {
      mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
  }
  return mat;
}

}  // namespace

ReferenceTables load_reference_tables(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("cannot parse fixture file " + path + ": " + e.what());
  }
  ReferenceTables tables;
  try {
    const Eigen::MatrixXd counts = real_matrix(j.at("treatment_cluster_counts"), "counts");
    tables.counts = counts.cast<std::int64_t>();
    if ((tables.counts.cast<double>() - counts).cwiseAbs().maxCoeff() != 0.0) {
      throw DataError("fixture counts must be integers");
    }
    tables.sampling = real_matrix(j.at("sampling_distribution"), "sampling_distribution");
    tables.sampling_tolerance = j.at("sampling_distribution_tolerance").get<double>();
    tables.class_counts = j.at("class_counts").get<std::vector<std::int64_t>>();
    tables.cluster_sizes = j.at("cluster_sizes").get<std::vector<std::int64_t>>();
    tables.total_rows = j.at("total_rows").get<std::int64_t>();
    const auto& logloss = j.at("logloss_reference");
    tables.logloss.processed_train = logloss.at("processed_train").get<double>();
    tables.logloss.processed_validation = logloss.at("processed_validation").get<double>();
    tables.logloss.raw_train = logloss.at("raw_train").get<double>();
    tables.logloss.raw_validation = logloss.at("raw_validation").get<double>();
    tables.unweighted_bias_reference = j.at("unweighted_bias_reference").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed fixture file " + path + ": " + e.what());
  }

  if (tables.sampling.rows() != tables.counts.rows() ||
      tables.sampling.cols() != tables.counts.cols()) {
    throw DataError("fixture matrices must share a shape");
  }
  // The counts must be internally consistent with the marginals they claim.
  std::int64_t total = 0;
  for (Eigen::Index k = 0; k < tables.counts.rows(); ++k) {
    std::int64_t row_sum = 0;
    for (Eigen::Index j2 = 0; j2 < tables.counts.cols(); ++j2) row_sum += tables.counts(k, j2);
    if (row_sum != tables.class_counts.at(static_cast<std::size_t>(k))) {
      throw DataError("fixture class counts disagree with the contingency rows");
    }
    total += row_sum;
  }
  for (Eigen::Index j2 = 0; j2 < tables.counts.cols(); ++j2) {
    std::int64_t col_sum = 0;
    for (Eigen::Index k = 0; k < tables.counts.rows(); ++k) col_sum += tables.counts(k, j2);
    if (col_sum != tables.cluster_sizes.at(static_cast<std::size_t>(j2))) {
      throw DataError("fixture cluster sizes disagree with the contingency columns");
    }
  }
  if (total != tables.total_rows) {
    throw DataError("fixture total row count disagrees with the contingency table");
  }
  return tables;
}

DistributionCheck reference_distribution_check(const ReferenceTables& tables) {
  ResampleParams params;
  params.gamma = 0.0;  // plain proportions, no quadratic boost
  const Eigen::MatrixXd w_star = normalize_columns(tables.counts);
  const Eigen::MatrixXd w_hat = interpolate(w_star, params);
  DistributionCheck check;
  check.computed = row_distribution(w_hat);
  check.deltas = check.computed - tables.sampling;
  check.max_abs_delta = check.deltas.cwiseAbs().maxCoeff();
  check.pass = check.max_abs_delta <= tables.sampling_tolerance;
  return check;
}

}  // namespace pscore
