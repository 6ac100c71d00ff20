#include "pscore/evaluate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "pscore/errors.hpp"
#include "pscore/textio.hpp"

namespace pscore {
namespace {

std::string short_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct ClassStats {
  double mean = 0.0;
  double variance = 0.0;  // frequency-weighted population variance
};

ClassStats weighted_stats(const std::vector<double>& values, const std::vector<std::size_t>& rows,
                          const std::vector<double>* weights) {
  double w_sum = 0.0, wx_sum = 0.0;
  for (std::size_t r : rows) {
    const double w = weights ? (*weights)[r] : 1.0;
    w_sum += w;
    wx_sum += w * values[r];
  }
  ClassStats stats;
  stats.mean = wx_sum / w_sum;
  double acc = 0.0;
  for (std::size_t r : rows) {
    const double w = weights ? (*weights)[r] : 1.0;
    const double dev = values[r] - stats.mean;
    acc += w * dev * dev;
  }
  stats.variance = acc / w_sum;
  return stats;
}

BiasEntry make_entry(const std::string& covariate, const std::string& class_a,
                     const std::string& class_b, const ClassStats& a, const ClassStats& b) {
  BiasEntry entry;
  entry.covariate = covariate;
  entry.class_a = class_a;
  entry.class_b = class_b;
  entry.mean_a = a.mean;
  entry.mean_b = b.mean;
  entry.variance_a = a.variance;
  entry.variance_b = b.variance;
  const double pooled = 0.5 * (a.variance + b.variance);
  if (pooled > 0.0) {
    entry.bias = std::abs(a.mean - b.mean) / std::sqrt(pooled);
  } else if (a.mean == b.mean) {
    entry.bias = 0.0;
  } else {
    entry.bias = std::numeric_limits<double>::infinity();
    entry.degenerate = true;
  }
  return entry;
}

}  // namespace

WeightVector ate_weights(const Dataset& data, const PropensityMatrix& p, double floor) {
  if (p.values.rows() != static_cast<Eigen::Index>(data.size())) {
    throw DataError("propensity matrix has " + std::to_string(p.values.rows()) +
                    " rows, dataset has " + std::to_string(data.size()));
  }
  if (!(floor > 0.0)) throw ConfigError("probability floor must be positive");
  std::unordered_map<std::string, Eigen::Index> columns;
  for (std::size_t k = 0; k < p.class_levels.size(); ++k) {
    columns.emplace(p.class_levels[k], static_cast<Eigen::Index>(k));
  }
  std::vector<Eigen::Index> class_to_column;
  for (const auto& level : data.treatment_levels) {
    const auto it = columns.find(level);
    if (it == columns.end()) {
      throw DataError("propensity matrix has no column for treatment class '" + level + "'");
    }
    class_to_column.push_back(it->second);
  }

  WeightVector weights;
  weights.floor = floor;
  weights.values.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::Index col = class_to_column[static_cast<std::size_t>(data.treatment[i])];
    const double prob = p.values(static_cast<Eigen::Index>(i), col);
    if (prob < floor) weights.clamped.push_back(i);
    weights.values[i] = 1.0 / std::max(prob, floor);
  }
  return weights;
}

BiasReport bias_report(const Dataset& data, const WeightVector* weights) {
  data.validate();
  if (weights && weights->values.size() != data.size()) {
    throw DataError("weight vector length does not match dataset");
  }
  const std::vector<double>* w = weights ? &weights->values : nullptr;

  std::vector<std::vector<std::size_t>> class_rows(static_cast<std::size_t>(data.num_classes));
  for (std::size_t i = 0; i < data.size(); ++i) {
    class_rows[static_cast<std::size_t>(data.treatment[i])].push_back(i);
  }

  BiasReport report;
  report.weighted = weights != nullptr;
  if (weights) report.clamped_rows = weights->clamped;

  for (int a = 0; a < data.num_classes; ++a) {
    for (int b = a + 1; b < data.num_classes; ++b) {
      const std::string& level_a = data.treatment_levels[static_cast<std::size_t>(a)];
      const std::string& level_b = data.treatment_levels[static_cast<std::size_t>(b)];
      const auto& rows_a = class_rows[static_cast<std::size_t>(a)];
      const auto& rows_b = class_rows[static_cast<std::size_t>(b)];

      std::size_t ci = 0, di = 0;
      for (const auto& col : data.schema.columns) {
        if (col.role == ColumnRole::continuous) {
          const auto& values = data.continuous[ci++];
          report.entries.push_back(make_entry(col.name, level_a, level_b,
                                              weighted_stats(values, rows_a, w),
                                              weighted_stats(values, rows_b, w)));
        } else if (col.role == ColumnRole::discrete) {
          const auto& codes = data.discrete[di];
          const auto& levels = data.discrete_levels[di];
          ++di;
          double level_max = 0.0;
          bool level_degenerate = false;
          std::vector<double> indicator(data.size());
          for (std::size_t c = 0; c < levels.size(); ++c) {
            for (std::size_t i = 0; i < data.size(); ++i) {
              indicator[i] = codes[i] == static_cast<int>(c) ? 1.0 : 0.0;
            }
            BiasEntry entry = make_entry(col.name + "=" + levels[c], level_a, level_b,
                                         weighted_stats(indicator, rows_a, w),
                                         weighted_stats(indicator, rows_b, w));
            if (entry.degenerate) level_degenerate = true;
            else level_max = std::max(level_max, entry.bias);
            report.entries.push_back(std::move(entry));
          }
          BiasEntry summary;
          summary.covariate = col.name;
          summary.summary_of = col.name;
          summary.class_a = level_a;
          summary.class_b = level_b;
          summary.bias = level_degenerate ? std::numeric_limits<double>::infinity() : level_max;
          summary.degenerate = level_degenerate;
          report.entries.push_back(std::move(summary));
        }
      }
    }
  }

  for (const auto& entry : report.entries) {
    if (entry.degenerate) report.any_degenerate = true;
    else report.max_bias = std::max(report.max_bias, entry.bias);
  }
  return report;
}

nlohmann::json BiasReport::to_json() const {
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& entry : entries) {
    nlohmann::json e{{"covariate", entry.covariate},
                     {"pair", {entry.class_a, entry.class_b}},
                     {"degenerate", entry.degenerate}};
    if (entry.degenerate) e["bias"] = nullptr;
    else e["bias"] = entry.bias;
    if (!entry.summary_of.empty()) {
      e["summary_of"] = entry.summary_of;
    } else {
      e["mean_a"] = entry.mean_a;
      e["mean_b"] = entry.mean_b;
      e["variance_a"] = entry.variance_a;
      e["variance_b"] = entry.variance_b;
    }
    entries_json.push_back(std::move(e));
  }
  nlohmann::json j{{"weighted", weighted},
                   {"max_bias", any_degenerate ? nlohmann::json() : nlohmann::json(max_bias)},
                   {"any_degenerate", any_degenerate},
                   {"entries", std::move(entries_json)}};
  j["clamped_rows"] = clamped_rows;
  return j;
}

std::string BiasReport::to_text() const {
  std::vector<std::array<std::string, 5>> table;
  table.push_back({"pair", "covariate", "mean_a", "mean_b", "bias"});
  for (const auto& entry : entries) {
    const std::string pair = entry.class_a + " vs " + entry.class_b;
    const std::string name =
        entry.summary_of.empty() ? entry.covariate : entry.covariate + " (max over levels)";
    std::string bias_text = entry.degenerate ? "inf" : short_double(entry.bias);
    if (entry.summary_of.empty()) {
      table.push_back({pair, name, short_double(entry.mean_a), short_double(entry.mean_b),
                       std::move(bias_text)});
    } else {
      table.push_back({pair, name, "", "", std::move(bias_text)});
    }
  }

  std::array<std::size_t, 5> width{};
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += row[c];
      if (c + 1 < row.size()) out.append(width[c] - row[c].size() + 2, ' ');
    }
    out += '\n';
  }
  if (!clamped_rows.empty()) {
    out += "\nrows with floored propensity (" + std::to_string(clamped_rows.size()) + "):";
    for (std::size_t r : clamped_rows) out += " " + std::to_string(r);
    out += '\n';
  }
  return out;
}

void BiasReport::save_json(const std::string& path) const {
  write_text_file(path, to_json().dump(2) + "\n");
}

void BiasReport::save_text(const std::string& path) const { write_text_file(path, to_text()); }

}  // namespace pscore
