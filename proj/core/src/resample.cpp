#include "pscore/resample.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "pscore/apportion.hpp"
#include "pscore/errors.hpp"
#include "pscore/rng.hpp"
#include "pscore/textio.hpp"

namespace pscore {

void ResampleParams::validate() const {
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0, got " + format_double(gamma));
  if (!(eta >= 0.0 && eta <= 2.0)) {
    throw ConfigError("eta must lie in [0, 2], got " + format_double(eta));
  }
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) {
    throw ConfigError("epsilon must lie in [0, 0.5], got " + format_double(epsilon));
  }
  if (!(eta * epsilon < 1.0)) {
    throw ConfigError("eta * epsilon must be < 1 (interpolation denominator), got " +
                      format_double(eta * epsilon));
  }
}

CountMatrix contingency(const ClusterAssignment& assign, const Dataset& data) {
  const std::size_t m = data.size();
  if (assign.labels.size() != m) {
    throw DataError("cluster assignment covers " + std::to_string(assign.labels.size()) +
                    " rows, dataset has " + std::to_string(m));
  }
  const int d = data.num_classes;
  const int n = assign.n;
  CountMatrix w = CountMatrix::Zero(d, n);
  for (std::size_t r = 0; r < m; ++r) {
    w(data.treatment[r], assign.labels[r]) += 1;
  }
  return w;
}

Eigen::MatrixXd normalize_columns(const CountMatrix& w) {
  const Eigen::Index d = w.rows();
  const Eigen::Index n = w.cols();
  Eigen::MatrixXd w_star(d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    std::int64_t column_sum = 0;
    for (Eigen::Index i = 0; i < d; ++i) column_sum += w(i, j);
    if (column_sum <= 0) {
      throw DataError("cluster " + std::to_string(j) + " is empty; cannot normalize");
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      w_star(i, j) = static_cast<double>(w(i, j)) / static_cast<double>(column_sum);
    }
  }
  return w_star;
}

Eigen::MatrixXd interpolate(const Eigen::MatrixXd& w_star, const ResampleParams& params) {
  params.validate();
  const double coefficient = params.gamma / (1.0 - params.eta * params.epsilon);
  return w_star.array() + coefficient * w_star.array().square();
}

Eigen::MatrixXd row_distribution(const Eigen::MatrixXd& w_hat) {
  const Eigen::Index d = w_hat.rows();
  const Eigen::Index n = w_hat.cols();
  Eigen::MatrixXd p_star(d, n);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double row_sum = w_hat.row(i).sum();
    if (!(row_sum > 0.0)) {
      throw DataError("treatment class " + std::to_string(i) + " has all-zero weights");
    }
    p_star.row(i) = w_hat.row(i) / row_sum;
  }
  return p_star;
}

std::vector<std::int64_t> apportion_with_caps(std::int64_t target, const Eigen::VectorXd& p,
                                              const std::vector<std::int64_t>& capacity) {
  const std::size_t n = static_cast<std::size_t>(p.size());
  if (capacity.size() != n) throw DataError("apportion: capacity size mismatch");
  std::int64_t total_capacity = 0;
  for (std::int64_t c : capacity) total_capacity += c;
  if (target > total_capacity) {
    throw DataError("target " + std::to_string(target) + " exceeds available samples " +
                    std::to_string(total_capacity) + "; enable with-replacement sampling");
  }

  std::vector<std::int64_t> quota(n, 0);
  std::vector<char> active(n, 1);
  std::int64_t remaining = target;

  while (remaining > 0) {
    std::vector<std::size_t> active_idx;
    std::vector<double> weights;
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j]) continue;
      active_idx.push_back(j);
      weights.push_back(p(static_cast<Eigen::Index>(j)));
      weight_sum += weights.back();
    }

    if (!(weight_sum > 0.0)) {
      // Residual probability is zero everywhere that still has capacity; fill
      // in index order so the total is still met deterministically.
      for (std::size_t j : active_idx) {
        const std::int64_t take = std::min(remaining, capacity[j] - quota[j]);
        quota[j] += take;
        remaining -= take;
        if (remaining == 0) break;
      }
      break;
    }

    const auto shares = largest_remainder_apportion(remaining, weights);
    bool overflowed = false;
    for (std::size_t pos = 0; pos < active_idx.size(); ++pos) {
      const std::size_t j = active_idx[pos];
      if (shares[pos] > capacity[j]) {
        // Cap this cluster and re-apportion the rest over the others.
        quota[j] = capacity[j];
        remaining -= capacity[j];
        active[j] = 0;
        overflowed = true;
      }
    }
    if (!overflowed) {
      for (std::size_t pos = 0; pos < active_idx.size(); ++pos) {
        quota[active_idx[pos]] = shares[pos];
      }
      remaining = 0;
    }
  }
  return quota;
}

namespace {

std::vector<std::int64_t> resolve_targets(const Dataset& data,
                                          const std::vector<std::int64_t>& requested) {
  const auto counts = data.class_counts();
  if (requested.empty()) {
    return std::vector<std::int64_t>(counts.begin(), counts.end());
  }
  if (requested.size() != counts.size()) {
    throw ConfigError("per-class targets given for " + std::to_string(requested.size()) +
                      " classes, dataset has " + std::to_string(counts.size()));
  }
  for (std::int64_t t : requested) {
    if (t < 1) throw ConfigError("per-class targets must be >= 1");
  }
  return requested;
}

void check_p_star(const Eigen::MatrixXd& p_star, Eigen::Index d, Eigen::Index n) {
  if (p_star.rows() != d || p_star.cols() != n) {
    throw DataError("sampling matrix shape mismatch");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(p_star(i, j) >= 0.0)) throw DataError("negative sampling probability");
      row_sum += p_star(i, j);
    }
    if (std::abs(row_sum - 1.0) > 1e-6) {
      throw DataError("sampling row " + std::to_string(i) + " sums to " +
                      format_double(row_sum) + ", expected 1");
    }
  }
}

CountMatrix compute_quotas(const CountMatrix& w, const Eigen::MatrixXd& p_star,
                           const std::vector<std::int64_t>& targets, bool with_replacement) {
  const Eigen::Index d = w.rows();
  const Eigen::Index n = w.cols();
  CountMatrix quotas = CountMatrix::Zero(d, n);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (with_replacement) {
      std::vector<double> weights(static_cast<std::size_t>(n));
      for (Eigen::Index j = 0; j < n; ++j) weights[static_cast<std::size_t>(j)] = p_star(i, j);
      const auto shares = largest_remainder_apportion(targets[static_cast<std::size_t>(i)],
                                                      weights);
      for (Eigen::Index j = 0; j < n; ++j) quotas(i, j) = shares[static_cast<std::size_t>(j)];
    } else {
      std::vector<std::int64_t> capacity(static_cast<std::size_t>(n));
      for (Eigen::Index j = 0; j < n; ++j) capacity[static_cast<std::size_t>(j)] = w(i, j);
      const auto shares = apportion_with_caps(targets[static_cast<std::size_t>(i)],
                                              p_star.row(i).transpose(), capacity);
      for (Eigen::Index j = 0; j < n; ++j) quotas(i, j) = shares[static_cast<std::size_t>(j)];
    }
  }
  return quotas;
}

}  // namespace

ResamplePlan make_plan(const ClusterAssignment& assign, const Dataset& data,
                       const ResampleParams& params, std::vector<std::int64_t> targets,
                       bool with_replacement) {
  ResamplePlan plan;
  plan.W = contingency(assign, data);
  plan.w_star = normalize_columns(plan.W);
  plan.w_hat = interpolate(plan.w_star, params);
  plan.p_star = row_distribution(plan.w_hat);
  plan.targets = resolve_targets(data, targets);
  plan.with_replacement = with_replacement;
  plan.quotas = compute_quotas(plan.W, plan.p_star, plan.targets, with_replacement);
  return plan;
}

Dataset draw_subset(const Dataset& data, const ClusterAssignment& assign,
                    const Eigen::MatrixXd& p_star, const DrawOptions& options,
                    std::uint64_t seed) {
  const CountMatrix w = contingency(assign, data);
  const Eigen::Index d = w.rows();
  const Eigen::Index n = w.cols();
  check_p_star(p_star, d, n);
  const auto targets = resolve_targets(data, options.targets);
  const CountMatrix quotas = compute_quotas(w, p_star, targets, options.with_replacement);

  // Row buckets per (treatment, cluster) cell, ascending by construction.
  std::vector<std::vector<std::size_t>> cells(static_cast<std::size_t>(d * n));
  for (std::size_t r = 0; r < data.size(); ++r) {
    const Eigen::Index i = data.treatment[r];
    const Eigen::Index j = assign.labels[r];
    cells[static_cast<std::size_t>(i * n + j)].push_back(r);
  }

  Rng rng(seed);
  std::vector<std::size_t> selected;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::int64_t q = quotas(i, j);
      if (q == 0) continue;
      const auto& cell = cells[static_cast<std::size_t>(i * n + j)];
      if (cell.empty()) {
        throw DataError("sampling probability assigned to empty cell (class " +
                        std::to_string(i) + ", cluster " + std::to_string(j) + ")");
      }
      if (options.with_replacement) {
        for (std::int64_t t = 0; t < q; ++t) {
          selected.push_back(cell[rng.index(cell.size())]);
        }
      } else {
        const auto picks =
            rng.sample_without_replacement(cell.size(), static_cast<std::size_t>(q));
        for (std::size_t idx : picks) selected.push_back(cell[idx]);
      }
    }
  }
  std::sort(selected.begin(), selected.end());
  return select_rows(data, selected);
}

nlohmann::json plan_to_json(const ResamplePlan& plan, const Dataset& data) {
  auto int_matrix = [](const CountMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto real_matrix = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  return nlohmann::json{{"class_levels", data.treatment_levels},
                        {"counts", int_matrix(plan.W)},
                        {"cluster_proportions", real_matrix(plan.w_star)},
                        {"interpolated", real_matrix(plan.w_hat)},
                        {"sampling_probabilities", real_matrix(plan.p_star)},
                        {"quotas", int_matrix(plan.quotas)},
                        {"targets", plan.targets},
                        {"with_replacement", plan.with_replacement}};
}

}  // namespace pscore
