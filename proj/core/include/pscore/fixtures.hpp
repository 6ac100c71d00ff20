#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pscore/resample.hpp"

namespace pscore {

struct LoglossReference {
  double processed_train = 0.0;
  double processed_validation = 0.0;
  double raw_train = 0.0;
  double raw_validation = 0.0;
};

// Frozen reference values (counts, distributions, magnitudes) that tests
// compare pipeline arithmetic against. Values live only in the JSON file so
// the transcription is auditable in one place.
struct ReferenceTables {
  CountMatrix counts;              // treatment x cluster contingency counts
  Eigen::MatrixXd sampling;        // expected row-stochastic sampling matrix
  double sampling_tolerance = 0.0;
  std::vector<std::int64_t> class_counts;
  std::vector<std::int64_t> cluster_sizes;
  std::int64_t total_rows = 0;
  LoglossReference logloss;
  double unweighted_bias_reference = 0.0;
};

ReferenceTables load_reference_tables(const std::string& path);

struct DistributionCheck {
  Eigen::MatrixXd computed;   // counts -> column normalize -> row distribution
  Eigen::MatrixXd deltas;     // computed - reference
  double max_abs_delta = 0.0;
  bool pass = false;
};

// Push the reference counts through the resampling arithmetic with the
// interpolation term switched off (gamma = 0) and compare against the frozen
// sampling distribution entry by entry.
DistributionCheck reference_distribution_check(const ReferenceTables& tables);

}  // namespace pscore
