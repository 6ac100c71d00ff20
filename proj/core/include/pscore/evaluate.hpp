#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pscore/dataset.hpp"
#include "pscore/gbm.hpp"

namespace pscore {

// Inverse-propensity weights targeting the average treatment effect.
struct WeightVector {
  std::vector<double> values;          // one weight per row
  std::vector<std::size_t> clamped;    // rows whose propensity hit the floor
  double floor = 1e-6;                 // probability floor applied
};

// weights[i] = 1 / max(p[i][t_i], floor) where t_i is row i's treatment class.
// The propensity columns are matched to the dataset's treatment levels by
// level string, so the probability matrix may come from any class ordering.
WeightVector ate_weights(const Dataset& data, const PropensityMatrix& p, double floor = 1e-6);

// One covariate's balance between a pair of treatment classes.
struct BiasEntry {
  std::string covariate;       // column name, or "name=level" for an indicator
  std::string summary_of;      // non-empty on a max-over-levels summary row
  std::string class_a;
  std::string class_b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double variance_a = 0.0;
  double variance_b = 0.0;
  double bias = 0.0;           // |mean_a - mean_b| / sqrt((var_a + var_b) / 2)
  bool degenerate = false;     // pooled variance was zero with unequal means
};

struct BiasReport {
  std::vector<BiasEntry> entries;        // all class pairs x all covariate rows
  std::vector<std::size_t> clamped_rows; // rows with floored propensities, if weighted
  bool weighted = false;
  double max_bias = 0.0;                 // over non-degenerate entries
  bool any_degenerate = false;

  nlohmann::json to_json() const;
  std::string to_text() const;           // aligned table for terminal output
  void save_json(const std::string& path) const;
  void save_text(const std::string& path) const;
};

// Standardized bias of every covariate for every unordered pair of treatment
// classes. Discrete covariates contribute one row per level (as a binary
// indicator) plus a summary row holding the maximum over levels. When
// `weights` is null all rows count equally (raw bias); otherwise means and
// variances are frequency-weighted.
BiasReport bias_report(const Dataset& data, const WeightVector* weights);

}  // namespace pscore
