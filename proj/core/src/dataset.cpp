#include "pscore/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "pscore/apportion.hpp"
#include "pscore/errors.hpp"
#include "pscore/rng.hpp"
#include "pscore/textio.hpp"

namespace pscore {
namespace {

// Renumbers discrete and treatment codes to first-appearance order so the
// module-wide canonical-coding invariant holds after any row reordering.
void recanonicalize(Dataset& data) {
  auto recode = [](std::vector<int>& codes, std::vector<std::string>& levels) {
    std::vector<int> remap(levels.size(), -1);
    std::vector<std::string> new_levels;
    new_levels.reserve(levels.size());
    for (int& code : codes) {
      if (remap[code] < 0) {
        remap[code] = static_cast<int>(new_levels.size());
        new_levels.push_back(levels[code]);
      }
      code = remap[code];
    }
    levels = std::move(new_levels);
  };
  for (std::size_t f = 0; f < data.discrete.size(); ++f) {
    recode(data.discrete[f], data.discrete_levels[f]);
  }
  recode(data.treatment, data.treatment_levels);
  data.num_classes = static_cast<int>(data.treatment_levels.size());
}

std::size_t categorical_draw(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = rng.uniform() * total;
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cum += weights[i];
    last_positive = i;
    if (u < cum) return i;
  }
  return last_positive;
}

}  // namespace

ColumnRole column_role_from_string(const std::string& role) {
  if (role == "continuous") return ColumnRole::continuous;
  if (role == "discrete") return ColumnRole::discrete;
  if (role == "treatment") return ColumnRole::treatment;
  if (role == "ignore") return ColumnRole::ignore;
  throw ConfigError("unknown column role: '" + role + "'");
}

std::string to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::continuous: return "continuous";
    case ColumnRole::discrete: return "discrete";
    case ColumnRole::treatment: return "treatment";
    case ColumnRole::ignore: return "ignore";
  }
  return "ignore";
}

Schema Schema::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("columns") || !j["columns"].is_array()) {
    throw ConfigError("schema JSON must be an object with a 'columns' array");
  }
  Schema schema;
  for (const auto& col : j["columns"]) {
    if (!col.contains("name") || !col.contains("role")) {
      throw ConfigError("schema column entries need 'name' and 'role'");
    }
    schema.columns.push_back({col["name"].get<std::string>(),
                              column_role_from_string(col["role"].get<std::string>())});
  }
  schema.validate();
  return schema;
}

Schema Schema::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse schema JSON " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json Schema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& col : columns) {
    cols.push_back({{"name", col.name}, {"role", to_string(col.role)}});
  }
  return nlohmann::json{{"columns", cols}};
}

void Schema::save(const std::string& path) const {
  write_text_file(path, to_json().dump(2) + "\n");
}

void Schema::validate() const {
  if (columns.empty()) throw ConfigError("schema has no columns");
  std::unordered_map<std::string, int> seen;
  std::size_t treatments = 0, covariates = 0;
  for (const auto& col : columns) {
    if (col.name.empty()) throw ConfigError("schema column with empty name");
    if (++seen[col.name] > 1) throw ConfigError("duplicate schema column name: " + col.name);
    if (col.role == ColumnRole::treatment) ++treatments;
    if (col.role == ColumnRole::continuous || col.role == ColumnRole::discrete) ++covariates;
  }
  if (treatments != 1) {
    throw ConfigError("schema must declare exactly one treatment column, found " +
                      std::to_string(treatments));
  }
  if (covariates == 0) {
    throw ConfigError("schema declares no continuous or discrete covariate columns");
  }
}

std::vector<std::size_t> Schema::continuous_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].role == ColumnRole::continuous) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Schema::discrete_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].role == ColumnRole::discrete) out.push_back(i);
  }
  return out;
}

std::size_t Schema::treatment_column() const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].role == ColumnRole::treatment) return i;
  }
  throw ConfigError("schema has no treatment column");
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int t : treatment) counts[static_cast<std::size_t>(t)]++;
  return counts;
}

void Dataset::validate() const {
  const std::size_t m = size();
  if (m == 0) throw DataError("dataset has no rows");
  if (continuous.size() != continuous_names.size() || discrete.size() != discrete_names.size() ||
      discrete.size() != discrete_levels.size()) {
    throw DataError("dataset column bookkeeping is inconsistent");
  }
  for (std::size_t f = 0; f < continuous.size(); ++f) {
    if (continuous[f].size() != m) {
      throw DataError("continuous column '" + continuous_names[f] + "' has ragged length");
    }
  }
  auto check_codes = [m](const std::vector<int>& codes, std::size_t level_count,
                         const std::string& what) {
    if (codes.size() != m) throw DataError(what + " column has ragged length");
    int next_expected = 0;
    for (int code : codes) {
      if (code < 0 || static_cast<std::size_t>(code) >= level_count) {
        throw DataError(what + " column has out-of-range code " + std::to_string(code));
      }
      if (code > next_expected) {
        throw DataError(what + " column codes are not in first-appearance order");
      }
      if (code == next_expected) ++next_expected;
    }
    if (static_cast<std::size_t>(next_expected) != level_count) {
      throw DataError(what + " column has unused levels");
    }
  };
  for (std::size_t f = 0; f < discrete.size(); ++f) {
    check_codes(discrete[f], discrete_levels[f].size(), "discrete '" + discrete_names[f] + "'");
  }
  if (static_cast<std::size_t>(num_classes) != treatment_levels.size()) {
    throw DataError("num_classes does not match treatment level count");
  }
  check_codes(treatment, treatment_levels.size(), "treatment");
  for (std::size_t sidecar_size : {corrupted.size(), pattern.size(), source_rows.size()}) {
    if (sidecar_size != 0 && sidecar_size != m) {
      throw DataError("sidecar column has ragged length");
    }
  }
}

bool content_equal(const Dataset& a, const Dataset& b) {
  return a.schema == b.schema && a.continuous_names == b.continuous_names &&
         a.continuous == b.continuous && a.discrete_names == b.discrete_names &&
         a.discrete == b.discrete && a.discrete_levels == b.discrete_levels &&
         a.treatment == b.treatment && a.treatment_levels == b.treatment_levels &&
         a.num_classes == b.num_classes;
}

IngestResult ingest(const std::string& csv_path, const Schema& schema) {
  const auto rows = read_csv(csv_path);
  if (rows.empty()) throw DataError("CSV file has no header: " + csv_path);
  return ingest_cells(rows, schema);
}

IngestResult ingest_cells(const std::vector<std::vector<std::string>>& rows,
                          const Schema& schema) {
  schema.validate();
  if (rows.empty()) throw DataError("no header row");

  const auto& header = rows[0];
  if (header.size() != schema.columns.size()) {
    throw DataError("CSV header has " + std::to_string(header.size()) + " columns, schema has " +
                    std::to_string(schema.columns.size()));
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != schema.columns[i].name) {
      throw DataError("CSV header mismatch at column " + std::to_string(i + 1) + ": got '" +
                      header[i] + "', schema says '" + schema.columns[i].name + "'");
    }
  }

  IngestResult result;
  Dataset& data = result.data;
  std::vector<std::unordered_map<std::string, int>> discrete_codes;
  std::unordered_map<std::string, int> treatment_codes;

  for (const auto& col : schema.columns) {
    if (col.role == ColumnRole::ignore) continue;
    data.schema.columns.push_back(col);
    if (col.role == ColumnRole::continuous) {
      data.continuous_names.push_back(col.name);
      data.continuous.emplace_back();
    } else if (col.role == ColumnRole::discrete) {
      data.discrete_names.push_back(col.name);
      data.discrete.emplace_back();
      data.discrete_levels.emplace_back();
      discrete_codes.emplace_back();
    }
  }

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != schema.columns.size()) {
      throw DataError("data row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                      " fields, expected " + std::to_string(schema.columns.size()));
    }
    bool missing = false;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (schema.columns[c].role != ColumnRole::ignore && row[c].empty()) {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++result.rows_dropped;
      continue;
    }

    std::size_t ci = 0, di = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      switch (schema.columns[c].role) {
        case ColumnRole::continuous: {
          double value = 0.0;
          if (!parse_double(row[c], value)) {
            throw DataError("non-numeric value '" + row[c] + "' in continuous column '" +
                            schema.columns[c].name + "', data row " + std::to_string(r));
          }
          data.continuous[ci++].push_back(value);
          break;
        }
        case ColumnRole::discrete: {
          auto [it, inserted] = discrete_codes[di].try_emplace(
              row[c], static_cast<int>(data.discrete_levels[di].size()));
          if (inserted) data.discrete_levels[di].push_back(row[c]);
          data.discrete[di++].push_back(it->second);
          break;
        }
        case ColumnRole::treatment: {
          auto [it, inserted] = treatment_codes.try_emplace(
              row[c], static_cast<int>(data.treatment_levels.size()));
          if (inserted) data.treatment_levels.push_back(row[c]);
          data.treatment.push_back(it->second);
          break;
        }
        case ColumnRole::ignore:
          break;
      }
    }
  }

  if (data.treatment.empty()) {
    throw DataError("no usable rows after ingest (" + std::to_string(result.rows_dropped) +
                    " dropped)");
  }
  data.num_classes = static_cast<int>(data.treatment_levels.size());
  data.validate();
  return result;
}

namespace {

void export_csv_impl(const Dataset& data, const std::string& path, bool with_provenance) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(data.size() + 1);
  std::vector<std::string> header;
  if (with_provenance) header.emplace_back("source_row");
  for (const auto& col : data.schema.columns) header.push_back(col.name);
  rows.push_back(std::move(header));

  const std::size_t m = data.size();
  for (std::size_t r = 0; r < m; ++r) {
    std::vector<std::string> row;
    row.reserve(data.schema.columns.size() + 1);
    if (with_provenance) {
      row.push_back(std::to_string(data.source_rows.empty() ? r : data.source_rows[r]));
    }
    std::size_t ci = 0, di = 0;
    for (const auto& col : data.schema.columns) {
      switch (col.role) {
        case ColumnRole::continuous:
          row.push_back(format_double(data.continuous[ci++][r]));
          break;
        case ColumnRole::discrete: {
          const int code = data.discrete[di][r];
          row.push_back(data.discrete_levels[di][static_cast<std::size_t>(code)]);
          ++di;
          break;
        }
        case ColumnRole::treatment:
          row.push_back(data.treatment_levels[static_cast<std::size_t>(data.treatment[r])]);
          break;
        case ColumnRole::ignore:
          row.emplace_back();
          break;
      }
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, rows);
}

}  // namespace

void export_csv(const Dataset& data, const std::string& path) {
  export_csv_impl(data, path, false);
}

void export_csv_with_provenance(const Dataset& data, const std::string& path) {
  export_csv_impl(data, path, true);
}

CorruptionResult corrupt(const Dataset& input, const CorruptionSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 0.5)) {
    throw DataError("corruption rate must lie in [0, 0.5], got " + format_double(spec.rate));
  }
  if (input.num_classes < 2) {
    throw DataError("label corruption needs at least 2 treatment classes");
  }

  CorruptionResult result;
  result.data = input;
  result.data.corrupted.assign(input.size(), 0);

  Rng rng(spec.seed);
  const std::size_t d = static_cast<std::size_t>(input.num_classes);
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (rng.uniform() >= spec.rate) continue;
    const std::size_t k = rng.index(d - 1);
    const int current = input.treatment[i];
    const int flipped = static_cast<int>(k) < current ? static_cast<int>(k)
                                                      : static_cast<int>(k) + 1;
    result.data.treatment[i] = flipped;
    result.data.corrupted[i] = 1;
    result.flipped_rows.push_back(i);
  }
  recanonicalize(result.data);
  return result;
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  try {
    spec.continuous_names = j.value("continuous", std::vector<std::string>{});
    spec.discrete_names = j.value("discrete", std::vector<std::string>{});
    spec.discrete_level_names =
        j.value("discrete_levels", std::vector<std::vector<std::string>>{});
    spec.treatment_name = j.value("treatment", std::string{"treatment"});
    spec.treatment_level_names = j.value("treatment_levels", std::vector<std::string>{});
    spec.cluster_sizes = j.value("cluster_sizes", std::vector<std::int64_t>{});
    spec.assignment = j.value("assignment", std::vector<std::vector<double>>{});
    spec.exact_label_quotas = j.value("exact_label_quotas", false);
    for (const auto& p : j.at("patterns")) {
      PatternSpec pattern;
      pattern.means = p.value("means", std::vector<double>{});
      pattern.spreads = p.value("spreads", std::vector<double>{});
      pattern.category_weights = p.value("category_weights", std::vector<std::vector<double>>{});
      spec.patterns.push_back(std::move(pattern));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SyntheticSpec SyntheticSpec::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse synthetic spec " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json SyntheticSpec::to_json() const {
  nlohmann::json patterns_json = nlohmann::json::array();
  for (const auto& p : patterns) {
    patterns_json.push_back({{"means", p.means},
                             {"spreads", p.spreads},
                             {"category_weights", p.category_weights}});
  }
  nlohmann::json j{{"continuous", continuous_names},
                   {"discrete", discrete_names},
                   {"treatment", treatment_name},
                   {"patterns", patterns_json},
                   {"cluster_sizes", cluster_sizes},
                   {"assignment", assignment},
                   {"exact_label_quotas", exact_label_quotas}};
  if (!discrete_level_names.empty()) j["discrete_levels"] = discrete_level_names;
  if (!treatment_level_names.empty()) j["treatment_levels"] = treatment_level_names;
  return j;
}

void SyntheticSpec::validate() const {
  if (patterns.empty()) throw ConfigError("synthetic spec has no patterns");
  if (cluster_sizes.size() != patterns.size()) {
    throw ConfigError("cluster_sizes and patterns disagree in length");
  }
  for (std::int64_t c : cluster_sizes) {
    if (c <= 0) throw ConfigError("cluster sizes must be positive");
  }
  if (continuous_names.empty() && discrete_names.empty()) {
    throw ConfigError("synthetic spec needs at least one covariate column");
  }
  for (const auto& p : patterns) {
    if (p.means.size() != continuous_names.size() || p.spreads.size() != continuous_names.size()) {
      throw ConfigError("pattern means/spreads must match the continuous column count");
    }
    if (p.category_weights.size() != discrete_names.size()) {
      throw ConfigError("pattern category_weights must match the discrete column count");
    }
    for (std::size_t q = 0; q < p.category_weights.size(); ++q) {
      if (p.category_weights[q].empty()) {
        throw ConfigError("empty category weight vector in pattern");
      }
      if (p.category_weights[q].size() != patterns[0].category_weights[q].size()) {
        throw ConfigError("category level counts differ across patterns");
      }
      double total = 0.0;
      for (double w : p.category_weights[q]) {
        if (!(w >= 0.0)) throw ConfigError("negative category weight");
        total += w;
      }
      if (!(total > 0.0)) throw ConfigError("category weights sum to zero");
    }
    if (!p.spreads.empty()) {
      for (double s : p.spreads) {
        if (!(s >= 0.0)) throw ConfigError("negative spread in pattern");
      }
    }
  }
  if (assignment.empty()) throw ConfigError("synthetic spec has no assignment matrix");
  for (const auto& row : assignment) {
    if (row.size() != patterns.size()) {
      throw ConfigError("assignment matrix must be classes x patterns");
    }
  }
  for (std::size_t j = 0; j < patterns.size(); ++j) {
    double col = 0.0;
    for (const auto& row : assignment) {
      if (!(row[j] >= 0.0)) throw ConfigError("negative assignment probability");
      col += row[j];
    }
    if (std::abs(col - 1.0) > 1e-9) {
      throw ConfigError("assignment column " + std::to_string(j) + " sums to " +
                        format_double(col) + ", expected 1");
    }
  }
  if (!discrete_level_names.empty() && discrete_level_names.size() != discrete_names.size()) {
    throw ConfigError("discrete_levels must match the discrete column count");
  }
  if (!treatment_level_names.empty() && treatment_level_names.size() != assignment.size()) {
    throw ConfigError("treatment_levels must match the class count");
  }
}

Dataset synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  Dataset data;
  for (const auto& name : spec.continuous_names) {
    data.schema.columns.push_back({name, ColumnRole::continuous});
    data.continuous_names.push_back(name);
    data.continuous.emplace_back();
  }
  for (std::size_t q = 0; q < spec.discrete_names.size(); ++q) {
    data.schema.columns.push_back({spec.discrete_names[q], ColumnRole::discrete});
    data.discrete_names.push_back(spec.discrete_names[q]);
    data.discrete.emplace_back();
    const std::size_t levels = spec.patterns[0].category_weights[q].size();
    std::vector<std::string> names;
    if (!spec.discrete_level_names.empty() && !spec.discrete_level_names[q].empty()) {
      if (spec.discrete_level_names[q].size() != levels) {
        throw ConfigError("level names for '" + spec.discrete_names[q] +
                          "' do not match the weight vector length");
      }
      names = spec.discrete_level_names[q];
    } else {
      for (std::size_t v = 0; v < levels; ++v) names.push_back("v" + std::to_string(v));
    }
    data.discrete_levels.push_back(std::move(names));
  }
  data.schema.columns.push_back({spec.treatment_name, ColumnRole::treatment});
  const std::size_t d = spec.num_classes();
  if (!spec.treatment_level_names.empty()) {
    data.treatment_levels = spec.treatment_level_names;
  } else {
    for (std::size_t i = 0; i < d; ++i) data.treatment_levels.push_back(std::to_string(i));
  }
  data.num_classes = static_cast<int>(d);

  for (std::size_t j = 0; j < spec.num_patterns(); ++j) {
    const auto& p = spec.patterns[j];
    const std::int64_t rows = spec.cluster_sizes[j];

    std::vector<int> quota_labels;
    if (spec.exact_label_quotas) {
      std::vector<double> column(d);
      for (std::size_t i = 0; i < d; ++i) column[i] = spec.assignment[i][j];
      const auto counts = largest_remainder_apportion(rows, column);
      for (std::size_t i = 0; i < d; ++i) {
        quota_labels.insert(quota_labels.end(), static_cast<std::size_t>(counts[i]),
                            static_cast<int>(i));
      }
      rng.shuffle(quota_labels);
    }

    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < spec.continuous_names.size(); ++i) {
        data.continuous[i].push_back(rng.normal(p.means[i], p.spreads[i]));
      }
      for (std::size_t q = 0; q < spec.discrete_names.size(); ++q) {
        data.discrete[q].push_back(static_cast<int>(categorical_draw(rng, p.category_weights[q])));
      }
      if (spec.exact_label_quotas) {
        data.treatment.push_back(quota_labels[static_cast<std::size_t>(r)]);
      } else {
        std::vector<double> column(d);
        for (std::size_t i = 0; i < d; ++i) column[i] = spec.assignment[i][j];
        data.treatment.push_back(static_cast<int>(categorical_draw(rng, column)));
      }
      data.pattern.push_back(static_cast<int>(j));
    }
  }

  recanonicalize(data);
  data.validate();
  return data;
}

Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  const std::size_t m = data.size();
  for (std::size_t r : rows) {
    if (r >= m) throw DataError("row index " + std::to_string(r) + " out of range");
  }
  if (rows.empty()) throw DataError("cannot select an empty row set");

  Dataset out;
  out.schema = data.schema;
  out.continuous_names = data.continuous_names;
  out.discrete_names = data.discrete_names;
  out.discrete_levels = data.discrete_levels;
  out.treatment_levels = data.treatment_levels;
  out.num_classes = data.num_classes;

  out.continuous.resize(data.continuous.size());
  for (std::size_t f = 0; f < data.continuous.size(); ++f) {
    out.continuous[f].reserve(rows.size());
    for (std::size_t r : rows) out.continuous[f].push_back(data.continuous[f][r]);
  }
  out.discrete.resize(data.discrete.size());
  for (std::size_t f = 0; f < data.discrete.size(); ++f) {
    out.discrete[f].reserve(rows.size());
    for (std::size_t r : rows) out.discrete[f].push_back(data.discrete[f][r]);
  }
  out.treatment.reserve(rows.size());
  for (std::size_t r : rows) out.treatment.push_back(data.treatment[r]);

  if (!data.corrupted.empty()) {
    out.corrupted.reserve(rows.size());
    for (std::size_t r : rows) out.corrupted.push_back(data.corrupted[r]);
  }
  if (!data.pattern.empty()) {
    out.pattern.reserve(rows.size());
    for (std::size_t r : rows) out.pattern.push_back(data.pattern[r]);
  }
  out.source_rows.reserve(rows.size());
  for (std::size_t r : rows) {
    out.source_rows.push_back(data.source_rows.empty() ? static_cast<std::int64_t>(r)
                                                       : data.source_rows[r]);
  }

  recanonicalize(out);
  return out;
}

Dataset subsample(const Dataset& data, std::size_t target, std::uint64_t seed) {
  if (target == 0) throw DataError("subsample target must be positive");
  if (target > data.size()) {
    throw DataError("subsample target " + std::to_string(target) + " exceeds dataset size " +
                    std::to_string(data.size()));
  }
  Rng rng(seed);
  auto rows = rng.sample_without_replacement(data.size(), target);
  std::sort(rows.begin(), rows.end());
  return select_rows(data, rows);
}

Dataset with_treatment_labels(const Dataset& data, const std::vector<std::string>& labels) {
  if (labels.size() != data.size()) {
    throw DataError("treatment label count " + std::to_string(labels.size()) +
                    " does not match row count " + std::to_string(data.size()));
  }
  Dataset out = data;
  out.treatment_levels.clear();
  out.treatment.resize(labels.size());
  std::unordered_map<std::string, int> code_of;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto [it, inserted] =
        code_of.emplace(labels[i], static_cast<int>(out.treatment_levels.size()));
    if (inserted) out.treatment_levels.push_back(labels[i]);
    out.treatment[i] = it->second;
  }
  out.num_classes = static_cast<int>(out.treatment_levels.size());
  return out;
}

}  // namespace pscore
