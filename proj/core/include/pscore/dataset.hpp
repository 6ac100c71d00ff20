#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pscore {

enum class ColumnRole { continuous, discrete, treatment, ignore };

ColumnRole column_role_from_string(const std::string& role);
std::string to_string(ColumnRole role);

struct SchemaColumn {
  std::string name;
  ColumnRole role = ColumnRole::ignore;
  bool operator==(const SchemaColumn&) const = default;
};

// Ordered column descriptors for a CSV source.
struct Schema {
  std::vector<SchemaColumn> columns;

  static Schema from_json(const nlohmann::json& j);
  static Schema load(const std::string& path);
  nlohmann::json to_json() const;
  void save(const std::string& path) const;

  // Throws ConfigError unless: names unique and non-empty, exactly one
  // treatment column, at least one continuous or discrete column.
  void validate() const;

  std::vector<std::size_t> continuous_columns() const;
  std::vector<std::size_t> discrete_columns() const;
  std::size_t treatment_column() const;

  bool operator==(const Schema&) const = default;
};

// Column-oriented sample table. Invariants maintained by every constructor in
// this module: all columns have equal length; discrete and treatment codes are
// dense, and each column's codes are numbered by first appearance in row
// order (so exporting to CSV and re-ingesting reproduces the codes exactly);
// every treatment class 0..num_classes-1 occurs at least once.
struct Dataset {
  Schema schema;  // effective schema: ignore columns are dropped at ingest

  std::vector<std::string> continuous_names;
  std::vector<std::vector<double>> continuous;  // [feature][row]

  std::vector<std::string> discrete_names;
  std::vector<std::vector<int>> discrete;                 // [feature][row] codes
  std::vector<std::vector<std::string>> discrete_levels;  // [feature][code] labels

  std::vector<int> treatment;  // [row] class codes in [0, num_classes)
  std::vector<std::string> treatment_levels;
  int num_classes = 0;

  // Optional sidecars; empty or row-aligned.
  std::vector<std::uint8_t> corrupted;      // 1 where the label was flipped
  std::vector<int> pattern;                 // generating pattern (synthetic data)
  std::vector<std::int64_t> source_rows;    // provenance into the root dataset

  std::size_t size() const { return treatment.size(); }
  std::vector<std::size_t> class_counts() const;

  // Throws DataError on broken invariants (ragged columns, out-of-range or
  // non-canonical codes, a treatment class with no rows).
  void validate() const;
};

// True when the persistent content (schema, names, values, levels, treatment)
// matches; sidecars are not compared because CSV artifacts do not carry them.
bool content_equal(const Dataset& a, const Dataset& b);

struct IngestResult {
  Dataset data;
  std::size_t rows_dropped = 0;  // rows with at least one empty non-ignored cell
};

// Reads a CSV whose header must equal the schema's column names, in order.
// Rows with empty non-ignored cells are dropped (and counted); a non-numeric
// value in a continuous column is a DataError naming the row and column.
IngestResult ingest(const std::string& csv_path, const Schema& schema);

// Same contract, from in-memory cells (first row = header).
IngestResult ingest_cells(const std::vector<std::vector<std::string>>& rows,
                          const Schema& schema);

// Writes header + rows; floats rendered so they round-trip exactly.
void export_csv(const Dataset& data, const std::string& path);

// Like export_csv with a leading source_row column recording each row's
// provenance (the row's own index when none was tracked).
void export_csv_with_provenance(const Dataset& data, const std::string& path);

struct CorruptionSpec {
  double rate = 0.0;  // label-flip probability, in [0, 0.5]
  std::uint64_t seed = 0;
};

struct CorruptionResult {
  Dataset data;
  std::vector<std::size_t> flipped_rows;
};

// Flips each row's treatment label with probability `rate`, uniformly to one
// of the other classes. Requires num_classes >= 2 and rate in [0, 0.5].
CorruptionResult corrupt(const Dataset& input, const CorruptionSpec& spec);

// One generating pattern: normal continuous marginals and categorical
// discrete marginals.
struct PatternSpec {
  std::vector<double> means;
  std::vector<double> spreads;
  std::vector<std::vector<double>> category_weights;  // [discrete feature][level]
};

struct SyntheticSpec {
  std::vector<std::string> continuous_names;
  std::vector<std::string> discrete_names;
  std::vector<std::vector<std::string>> discrete_level_names;  // optional; default v0, v1, ...
  std::string treatment_name = "treatment";
  std::vector<std::string> treatment_level_names;  // optional; default 0, 1, ...
  std::vector<PatternSpec> patterns;
  std::vector<std::int64_t> cluster_sizes;          // rows per pattern
  std::vector<std::vector<double>> assignment;      // [class][pattern], columns sum to 1
  // When true, per-pattern label counts are fixed by largest-remainder
  // apportionment of cluster_size * assignment column (exact counts instead of
  // multinomial draws) and dealt to the pattern's rows in shuffled order.
  bool exact_label_quotas = false;

  static SyntheticSpec from_json(const nlohmann::json& j);
  static SyntheticSpec load(const std::string& path);
  nlohmann::json to_json() const;
  void validate() const;  // throws ConfigError

  std::size_t num_patterns() const { return patterns.size(); }
  std::size_t num_classes() const { return assignment.size(); }
};

// Generates rows pattern by pattern; fills Dataset::pattern with ground truth.
Dataset synthesize(const SyntheticSpec& spec, std::uint64_t seed);

// Row subset in the given order (duplicates allowed). Codes are renumbered to
// first-appearance order; sidecars are carried along, and provenance composes
// through an input that is itself a subset.
Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows);

// Uniform subsample without replacement (row order preserved).
Dataset subsample(const Dataset& data, std::size_t target, std::uint64_t seed);

// Copy with every row's treatment label replaced by the given level string,
// re-coded in first-appearance order. Covariates, sidecars, and row order are
// untouched.
Dataset with_treatment_labels(const Dataset& data, const std::vector<std::string>& labels);

}  // namespace pscore
