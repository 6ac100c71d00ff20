#pragma once

#include <string>
#include <vector>

#include "pscore/dataset.hpp"
#include "pscore/rng.hpp"
#include "pscore/textio.hpp"

namespace test_support {

// Small random mixed-type dataset for property tests: n_cont continuous
// columns, n_disc discrete columns (random level counts 2..4), and a
// treatment with n_classes levels. Guarantees every class appears at least
// once when rows >= n_classes.
inline pscore::Dataset random_dataset(std::uint64_t seed, std::size_t rows, int n_cont,
                                       int n_disc, int n_classes) {
  pscore::Rng rng(seed);
  pscore::Schema schema;
  for (int c = 0; c < n_cont; ++c) {
    schema.columns.push_back({"x" + std::to_string(c), pscore::ColumnRole::continuous});
  }
  std::vector<int> level_counts;
  for (int d = 0; d < n_disc; ++d) {
    schema.columns.push_back({"k" + std::to_string(d), pscore::ColumnRole::discrete});
    level_counts.push_back(2 + static_cast<int>(rng.index(3)));
  }
  schema.columns.push_back({"treatment", pscore::ColumnRole::treatment});

  std::vector<std::vector<std::string>> cells;
  cells.emplace_back();
  for (const auto& col : schema.columns) cells.back().push_back(col.name);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    for (int c = 0; c < n_cont; ++c) {
      row.push_back(pscore::format_double(rng.normal(0.0, 1.0 + c)));
    }
    for (int d = 0; d < n_disc; ++d) {
      row.push_back("v" + std::to_string(rng.index(static_cast<std::size_t>(level_counts[static_cast<std::size_t>(d)]))));
    }
    const int cls = r < static_cast<std::size_t>(n_classes)
                        ? static_cast<int>(r)
                        : static_cast<int>(rng.index(static_cast<std::size_t>(n_classes)));
    row.push_back("t" + std::to_string(cls));
    cells.push_back(std::move(row));
  }
  return pscore::ingest_cells(cells, schema).data;
}

// Three generating patterns over mixed features, the standard benchmark shape
// used across the suite. `separation` scales how far the pattern means sit
// apart (in within-pattern spreads): 1.2 keeps patterns overlapping enough to
// exercise the full pipeline under confounding; 3.0 gives cleanly separated
// patterns for recovery tests.
inline pscore::SyntheticSpec separated_spec(std::int64_t rows_per_pattern,
                                            double separation = 1.2) {
  pscore::SyntheticSpec spec;
  spec.continuous_names = {"age", "tumor_size", "node_count", "survive_month"};
  spec.discrete_names = {"race", "stage"};
  spec.discrete_level_names = {{"white", "black", "other"}, {"I", "II", "III", "IV"}};
  spec.treatment_level_names = {"surgery", "radiation", "chemo"};
  spec.cluster_sizes = {rows_per_pattern, rows_per_pattern, rows_per_pattern};
  spec.assignment = {{0.55, 0.225, 0.225}, {0.225, 0.55, 0.225}, {0.225, 0.225, 0.55}};
  const std::vector<double> base = {50.0, 25.0, 6.0, 40.0};
  const std::vector<double> spread = {8.0, 6.0, 2.5, 12.0};
  const std::vector<std::vector<std::vector<double>>> weights = {
      {{0.8, 0.15, 0.05}, {0.6, 0.25, 0.1, 0.05}},
      {{0.1, 0.8, 0.1}, {0.15, 0.55, 0.2, 0.1}},
      {{0.05, 0.15, 0.8}, {0.05, 0.1, 0.25, 0.6}},
  };
  for (int p = 0; p < 3; ++p) {
    pscore::PatternSpec pattern;
    for (std::size_t k = 0; k < base.size(); ++k) {
      pattern.means.push_back(base[k] + (p - 1) * separation * spread[k]);
      pattern.spreads.push_back(spread[k]);
    }
    pattern.category_weights = weights[static_cast<std::size_t>(p)];
    spec.patterns.push_back(std::move(pattern));
  }
  return spec;
}

}  // namespace test_support
