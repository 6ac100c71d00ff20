#include "pscore/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "pscore/errors.hpp"
#include "pscore/parallel.hpp"
#include "pscore/textio.hpp"

namespace pscore {
namespace {

constexpr double kProbabilityClamp = 1e-15;

struct FeatureView {
  bool categorical = false;
  const std::vector<double>* cont = nullptr;
  const std::vector<int>* codes = nullptr;
  int n_levels = 0;
};

// Covariate columns in schema order; the feature index space of the model.
std::vector<FeatureView> feature_views(const Dataset& data) {
  std::vector<FeatureView> views;
  std::size_t ci = 0, di = 0;
  for (const auto& col : data.schema.columns) {
    if (col.role == ColumnRole::continuous) {
      views.push_back({false, &data.continuous[ci], nullptr, 0});
      ++ci;
    } else if (col.role == ColumnRole::discrete) {
      views.push_back({true, nullptr, &data.discrete[di],
                       static_cast<int>(data.discrete_levels[di].size())});
      ++di;
    }
  }
  return views;
}

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

struct SplitChoice {
  bool valid = false;
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  std::vector<int> left_cats;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<FeatureView>& features, const std::vector<double>& g,
              const std::vector<double>& h, const BoostConfig& cfg)
      : features_(features), g_(g), h_(h), cfg_(cfg) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    build_node(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int build_node(std::vector<std::size_t> rows, int depth) {
    double g_sum = 0.0, h_sum = 0.0;
    for (std::size_t r : rows) {
      g_sum += g_[r];
      h_sum += h_[r];
    }

    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    SplitChoice best;
    if (depth < cfg_.max_depth) best = find_best_split(rows);
    if (!best.valid || !(best.gain > 0.0)) {
      tree_.nodes[static_cast<std::size_t>(node_id)].weight =
          -soft_threshold(g_sum, cfg_.alpha) / (h_sum + cfg_.lambda) * cfg_.learning_rate;
      return node_id;
    }

    const FeatureView& fv = features_[static_cast<std::size_t>(best.feature)];
    std::vector<std::size_t> left_rows, right_rows;
    if (fv.categorical) {
      for (std::size_t r : rows) {
        const int code = (*fv.codes)[r];
        if (std::binary_search(best.left_cats.begin(), best.left_cats.end(), code)) {
          left_rows.push_back(r);
        } else {
          right_rows.push_back(r);
        }
      }
    } else {
      for (std::size_t r : rows) {
        if ((*fv.cont)[r] < best.threshold) left_rows.push_back(r);
        else right_rows.push_back(r);
      }
    }

    {
      TreeNode& node = tree_.nodes[static_cast<std::size_t>(node_id)];
      node.feature = best.feature;
      node.default_left = left_rows.size() >= right_rows.size();
      if (fv.categorical) {
        node.left_categories = best.left_cats;
        std::vector<char> in_left(static_cast<std::size_t>(fv.n_levels), 0);
        for (int c : best.left_cats) in_left[static_cast<std::size_t>(c)] = 1;
        std::vector<char> present(static_cast<std::size_t>(fv.n_levels), 0);
        for (std::size_t r : rows) present[static_cast<std::size_t>((*fv.codes)[r])] = 1;
        for (int c = 0; c < fv.n_levels; ++c) {
          if (present[static_cast<std::size_t>(c)] && !in_left[static_cast<std::size_t>(c)]) {
            node.right_categories.push_back(c);
          }
        }
      } else {
        node.threshold = best.threshold;
      }
    }

    rows.clear();
    rows.shrink_to_fit();
    const int left_id = build_node(std::move(left_rows), depth + 1);
    const int right_id = build_node(std::move(right_rows), depth + 1);
    tree_.nodes[static_cast<std::size_t>(node_id)].left = left_id;
    tree_.nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }

  SplitChoice find_best_split(const std::vector<std::size_t>& rows) {
    std::vector<SplitChoice> per_feature(features_.size());
    parallel_for(0, features_.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t f = lo; f < hi; ++f) {
        per_feature[f] = features_[f].categorical
                             ? best_categorical_split(static_cast<int>(f), rows)
                             : best_continuous_split(static_cast<int>(f), rows);
      }
    });
    // Sequential reduce in feature order; strict > keeps the lower feature
    // index on exact gain ties.
    SplitChoice best;
    for (auto& candidate : per_feature) {
      if (candidate.valid && (!best.valid || candidate.gain > best.gain)) {
        best = std::move(candidate);
      }
    }
    return best;
  }

  SplitChoice best_continuous_split(int feature, const std::vector<std::size_t>& rows) {
    const auto& values = *features_[static_cast<std::size_t>(feature)].cont;
    std::vector<std::size_t> order(rows);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (values[a] != values[b]) return values[a] < values[b];
      return a < b;
    });

    double g_total = 0.0, h_total = 0.0;
    for (std::size_t r : rows) {
      g_total += g_[r];
      h_total += h_[r];
    }

    SplitChoice best;
    best.feature = feature;
    double gl = 0.0, hl = 0.0;
    for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
      gl += g_[order[pos]];
      hl += h_[order[pos]];
      const double v = values[order[pos]];
      const double v_next = values[order[pos + 1]];
      if (v == v_next) continue;  // splits only between distinct values
      const double hr = h_total - hl;
      if (hl < cfg_.min_child_weight || hr < cfg_.min_child_weight) continue;
      const double gain = split_gain(gl, hl, g_total - gl, hr, cfg_.lambda);
      if (!best.valid || gain > best.gain) {  // ties keep the lower threshold
        best.valid = true;
        best.gain = gain;
        best.threshold = 0.5 * (v + v_next);
      }
    }
    return best;
  }

  SplitChoice best_categorical_split(int feature, const std::vector<std::size_t>& rows) {
    const FeatureView& fv = features_[static_cast<std::size_t>(feature)];
    std::vector<double> g_cat(static_cast<std::size_t>(fv.n_levels), 0.0);
    std::vector<double> h_cat(static_cast<std::size_t>(fv.n_levels), 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(fv.n_levels), 0);
    for (std::size_t r : rows) {
      const auto code = static_cast<std::size_t>((*fv.codes)[r]);
      g_cat[code] += g_[r];
      h_cat[code] += h_[r];
      ++count[code];
    }

    std::vector<int> present;
    for (int c = 0; c < fv.n_levels; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) present.push_back(c);
    }
    if (present.size() < 2) return {};

    // One-vs-rest scan over categories ordered by gradient/hessian ratio.
    auto ratio = [&](int c) {
      const double h = h_cat[static_cast<std::size_t>(c)];
      const double g = g_cat[static_cast<std::size_t>(c)];
      if (h > 0.0) return g / h;
      if (g > 0.0) return std::numeric_limits<double>::infinity();
      if (g < 0.0) return -std::numeric_limits<double>::infinity();
      return 0.0;
    };
    std::sort(present.begin(), present.end(), [&](int a, int b) {
      const double ra = ratio(a), rb = ratio(b);
      if (ra != rb) return ra < rb;
      return a < b;
    });

    double g_total = 0.0, h_total = 0.0;
    for (int c : present) {
      g_total += g_cat[static_cast<std::size_t>(c)];
      h_total += h_cat[static_cast<std::size_t>(c)];
    }

    SplitChoice best;
    best.feature = feature;
    double gl = 0.0, hl = 0.0;
    std::size_t best_prefix = 0;
    for (std::size_t t = 0; t + 1 < present.size(); ++t) {
      const auto code = static_cast<std::size_t>(present[t]);
      gl += g_cat[code];
      hl += h_cat[code];
      const double hr = h_total - hl;
      if (hl < cfg_.min_child_weight || hr < cfg_.min_child_weight) continue;
      const double gain = split_gain(gl, hl, g_total - gl, hr, cfg_.lambda);
      if (!best.valid || gain > best.gain) {  // ties keep the shorter prefix
        best.valid = true;
        best.gain = gain;
        best_prefix = t + 1;
      }
    }
    if (best.valid) {
      best.left_cats.assign(present.begin(),
                            present.begin() + static_cast<std::ptrdiff_t>(best_prefix));
      std::sort(best.left_cats.begin(), best.left_cats.end());
    }
    return best;
  }

  const std::vector<FeatureView>& features_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const BoostConfig& cfg_;
  RegressionTree tree_;
};

// Traversal for rows of the training dataset (codes already in model space).
double predict_row_native(const RegressionTree& tree, const std::vector<FeatureView>& features,
                          std::size_t row) {
  int node_id = 0;
  while (true) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    if (node.feature < 0) return node.weight;
    const FeatureView& fv = features[static_cast<std::size_t>(node.feature)];
    bool go_left;
    if (fv.categorical) {
      const int code = (*fv.codes)[row];
      if (std::binary_search(node.left_categories.begin(), node.left_categories.end(), code)) {
        go_left = true;
      } else if (std::binary_search(node.right_categories.begin(), node.right_categories.end(),
                                    code)) {
        go_left = false;
      } else {
        go_left = node.default_left;
      }
    } else {
      go_left = (*fv.cont)[row] < node.threshold;
    }
    node_id = go_left ? node.left : node.right;
  }
}

Eigen::MatrixXd one_hot(const Dataset& data) {
  const auto m = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(data.num_classes);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    y(i, data.treatment[static_cast<std::size_t>(i)]) = 1.0;
  }
  return y;
}

}  // namespace

void BoostConfig::validate() const {
  if (rounds < 1) throw ConfigError("boosting rounds must be >= 1");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ConfigError("learning_rate must lie in (0, 1], got " + format_double(learning_rate));
  }
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(min_child_weight >= 0.0)) throw ConfigError("min_child_weight must be >= 0");
}

PropensityMatrix softprob(const Eigen::MatrixXd& raw) {
  if (!raw.allFinite()) throw NumericError("softprob input contains non-finite scores");
  PropensityMatrix result;
  result.values.resize(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double row_max = raw.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index k = 0; k < raw.cols(); ++k) {
      const double e = std::exp(raw(i, k) - row_max);
      result.values(i, k) = e;
      sum += e;
    }
    result.values.row(i) /= sum;
  }
  return result;
}

double mlogloss(const Eigen::MatrixXd& y_one_hot, const PropensityMatrix& p) {
  if (y_one_hot.rows() != p.values.rows() || y_one_hot.cols() != p.values.cols()) {
    throw DataError("mlogloss: label and probability shapes differ");
  }
  const Eigen::Index m = y_one_hot.rows();
  if (m == 0) throw DataError("mlogloss: empty input");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index hot = -1;
    for (Eigen::Index k = 0; k < y_one_hot.cols(); ++k) {
      const double y = y_one_hot(i, k);
      if (y == 1.0 && hot < 0) hot = k;
      else if (y != 0.0) hot = -2;
    }
    if (hot < 0) throw DataError("mlogloss: row " + std::to_string(i) + " is not one-hot");
    const double clamped =
        std::clamp(p.values(i, hot), kProbabilityClamp, 1.0 - kProbabilityClamp);
    acc -= std::log(clamped);
  }
  return acc / static_cast<double>(m);
}

GradientPair gradients(std::span<const double> y_row, std::span<const double> p_row) {
  if (y_row.size() != p_row.size()) throw DataError("gradients: row lengths differ");
  GradientPair out;
  out.g.resize(p_row.size());
  out.h.resize(p_row.size());
  for (std::size_t k = 0; k < p_row.size(); ++k) {
    out.g[k] = p_row[k] - y_row[k];
    out.h[k] = p_row[k] * (1.0 - p_row[k]);
  }
  return out;
}

BoostedModel train(const Dataset& data, const BoostConfig& cfg, std::uint64_t seed) {
  (void)seed;  // no stochastic components; kept for interface stability
  cfg.validate();
  data.validate();
  const std::size_t m = data.size();
  const int d = data.num_classes;
  if (m < 2) throw DataError("training needs at least 2 rows");
  if (d < 2) throw DataError("training needs at least 2 treatment classes");

  BoostedModel model;
  model.config = cfg;
  model.base_score = 0.0;
  model.class_levels = data.treatment_levels;
  std::size_t di = 0;
  for (const auto& col : data.schema.columns) {
    if (col.role == ColumnRole::continuous) {
      model.feature_names.push_back(col.name);
      model.feature_is_categorical.push_back(false);
      model.feature_levels.emplace_back();
    } else if (col.role == ColumnRole::discrete) {
      model.feature_names.push_back(col.name);
      model.feature_is_categorical.push_back(true);
      model.feature_levels.push_back(data.discrete_levels[di]);
      ++di;
    }
  }

  const auto features = feature_views(data);
  const Eigen::MatrixXd y = one_hot(data);
  Eigen::MatrixXd margins = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m), d,
                                                      model.base_score);
  model.train_loss.push_back(mlogloss(y, softprob(margins)));

  std::vector<std::size_t> all_rows(m);
  for (std::size_t r = 0; r < m; ++r) all_rows[r] = r;

  for (int round = 0; round < cfg.rounds; ++round) {
    const PropensityMatrix p = softprob(margins);
    std::vector<RegressionTree> round_trees;
    round_trees.reserve(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      std::vector<double> g(m), h(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double pik = p.values(static_cast<Eigen::Index>(i), k);
        g[i] = pik - y(static_cast<Eigen::Index>(i), k);
        h[i] = pik * (1.0 - pik);
      }
      TreeBuilder builder(features, g, h, cfg);
      round_trees.push_back(builder.build(all_rows));
    }
    for (int k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < m; ++i) {
        margins(static_cast<Eigen::Index>(i), k) +=
            predict_row_native(round_trees[static_cast<std::size_t>(k)], features, i);
      }
    }
    model.trees.push_back(std::move(round_trees));
    model.train_loss.push_back(mlogloss(y, softprob(margins)));
  }
  return model;
}

PropensityMatrix predict(const BoostedModel& model, const Dataset& data) {
  const auto features = feature_views(data);
  if (features.size() != model.feature_names.size()) {
    throw DataError("prediction data has " + std::to_string(features.size()) +
                    " covariates, model was trained on " +
                    std::to_string(model.feature_names.size()));
  }
  std::size_t fi = 0, di = 0;
  std::vector<std::vector<int>> code_remap(features.size());
  for (const auto& col : data.schema.columns) {
    if (col.role != ColumnRole::continuous && col.role != ColumnRole::discrete) continue;
    if (col.name != model.feature_names[fi] ||
        (col.role == ColumnRole::discrete) != model.feature_is_categorical[fi]) {
      throw DataError("covariate '" + col.name + "' does not match the training schema (" +
                      model.feature_names[fi] + ")");
    }
    if (col.role == ColumnRole::discrete) {
      // Map this dataset's codes to training codes via level strings; levels
      // the model never saw become -1 and take default branches.
      std::unordered_map<std::string, int> train_codes;
      for (std::size_t c = 0; c < model.feature_levels[fi].size(); ++c) {
        train_codes.emplace(model.feature_levels[fi][c], static_cast<int>(c));
      }
      for (const auto& level : data.discrete_levels[di]) {
        const auto it = train_codes.find(level);
        code_remap[fi].push_back(it == train_codes.end() ? -1 : it->second);
      }
      ++di;
    }
    ++fi;
  }

  const auto m = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(model.class_levels.size());
  Eigen::MatrixXd raw = Eigen::MatrixXd::Constant(m, d, model.base_score);

  parallel_for(0, data.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (const auto& round_trees : model.trees) {
        for (Eigen::Index k = 0; k < d; ++k) {
          const RegressionTree& tree = round_trees[static_cast<std::size_t>(k)];
          int node_id = 0;
          while (true) {
            const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
            if (node.feature < 0) {
              raw(static_cast<Eigen::Index>(i), k) += node.weight;
              break;
            }
            const FeatureView& fv = features[static_cast<std::size_t>(node.feature)];
            bool go_left;
            if (fv.categorical) {
              const int local = (*fv.codes)[i];
              const int code = code_remap[static_cast<std::size_t>(node.feature)]
                                         [static_cast<std::size_t>(local)];
              if (code >= 0 && std::binary_search(node.left_categories.begin(),
                                                  node.left_categories.end(), code)) {
                go_left = true;
              } else if (code >= 0 &&
                         std::binary_search(node.right_categories.begin(),
                                            node.right_categories.end(), code)) {
                go_left = false;
              } else {
                go_left = node.default_left;
              }
            } else {
              go_left = (*fv.cont)[i] < node.threshold;
            }
            node_id = go_left ? node.left : node.right;
          }
        }
      }
    }
  });
  PropensityMatrix result = softprob(raw);
  result.class_levels = model.class_levels;
  return result;
}

nlohmann::json BoostedModel::to_json() const {
  nlohmann::json trees_json = nlohmann::json::array();
  for (std::size_t round = 0; round < trees.size(); ++round) {
    for (std::size_t k = 0; k < trees[round].size(); ++k) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& node : trees[round][k].nodes) {
        if (node.feature < 0) {
          nodes.push_back({{"weight", node.weight}});
        } else if (!node.left_categories.empty() || !node.right_categories.empty()) {
          nodes.push_back({{"feature", node.feature},
                           {"left_categories", node.left_categories},
                           {"right_categories", node.right_categories},
                           {"default_left", node.default_left},
                           {"left", node.left},
                           {"right", node.right}});
        } else {
          nodes.push_back({{"feature", node.feature},
                           {"threshold", node.threshold},
                           {"default_left", node.default_left},
                           {"left", node.left},
                           {"right", node.right}});
        }
      }
      trees_json.push_back({{"round", round}, {"class", k}, {"nodes", std::move(nodes)}});
    }
  }
  std::vector<std::string> kinds;
  for (bool categorical : feature_is_categorical) {
    kinds.push_back(categorical ? "categorical" : "continuous");
  }
  return nlohmann::json{{"config",
                         {{"max_depth", config.max_depth},
                          {"learning_rate", config.learning_rate},
                          {"rounds", config.rounds},
                          {"lambda", config.lambda},
                          {"alpha", config.alpha},
                          {"min_child_weight", config.min_child_weight}}},
                        {"base_score", base_score},
                        {"feature_names", feature_names},
                        {"feature_kinds", kinds},
                        {"feature_levels", feature_levels},
                        {"class_levels", class_levels},
                        {"train_loss", train_loss},
                        {"trees", trees_json}};
}

BoostedModel BoostedModel::from_json(const nlohmann::json& j) {
  BoostedModel model;
  try {
    const auto& cfg = j.at("config");
    model.config.max_depth = cfg.at("max_depth").get<int>();
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.rounds = cfg.at("rounds").get<int>();
    model.config.lambda = cfg.at("lambda").get<double>();
    model.config.alpha = cfg.at("alpha").get<double>();
    model.config.min_child_weight = cfg.at("min_child_weight").get<double>();
    model.base_score = j.at("base_score").get<double>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& kind : j.at("feature_kinds")) {
      model.feature_is_categorical.push_back(kind.get<std::string>() == "categorical");
    }
    model.feature_levels = j.at("feature_levels").get<std::vector<std::vector<std::string>>>();
    model.class_levels = j.at("class_levels").get<std::vector<std::string>>();
    model.train_loss = j.at("train_loss").get<std::vector<double>>();

    std::size_t max_round = 0;
    for (const auto& t : j.at("trees")) {
      max_round = std::max(max_round, t.at("round").get<std::size_t>());
    }
    model.trees.assign(max_round + 1,
                       std::vector<RegressionTree>(model.class_levels.size()));
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      for (const auto& n : t.at("nodes")) {
        TreeNode node;
        if (n.contains("feature")) {
          node.feature = n.at("feature").get<int>();
          node.default_left = n.at("default_left").get<bool>();
          node.left = n.at("left").get<int>();
          node.right = n.at("right").get<int>();
          if (n.contains("threshold")) node.threshold = n.at("threshold").get<double>();
          if (n.contains("left_categories")) {
            node.left_categories = n.at("left_categories").get<std::vector<int>>();
            node.right_categories = n.at("right_categories").get<std::vector<int>>();
          }
        } else {
          node.weight = n.at("weight").get<double>();
        }
        tree.nodes.push_back(std::move(node));
      }
      model.trees[t.at("round").get<std::size_t>()][t.at("class").get<std::size_t>()] =
          std::move(tree);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
  return model;
}

void BoostedModel::save(const std::string& path) const {
  write_text_file(path, to_json().dump(2) + "\n");
}

BoostedModel BoostedModel::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("cannot parse model JSON " + path + ": " + e.what());
  }
  return from_json(j);
}

void write_predictions(const PropensityMatrix& p, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"row"};
  for (const auto& level : p.class_levels) header.push_back("p_" + level);
  rows.push_back(std::move(header));
  for (Eigen::Index i = 0; i < p.values.rows(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (Eigen::Index k = 0; k < p.values.cols(); ++k) {
      row.push_back(format_double(p.values(i, k)));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, rows);
}

PropensityMatrix read_predictions(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "row") {
    throw DataError("malformed predictions CSV: " + path);
  }
  PropensityMatrix p;
  for (std::size_t c = 1; c < rows[0].size(); ++c) {
    const std::string& name = rows[0][c];
    if (name.rfind("p_", 0) != 0) {
      throw DataError("malformed predictions column '" + name + "' in " + path);
    }
    p.class_levels.push_back(name.substr(2));
  }
  const auto m = static_cast<Eigen::Index>(rows.size() - 1);
  const auto d = static_cast<Eigen::Index>(p.class_levels.size());
  p.values.resize(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i) + 1];
    if (row.size() != static_cast<std::size_t>(d) + 1) {
      throw DataError("ragged predictions row in " + path);
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      double value = 0.0;
      if (!parse_double(row[static_cast<std::size_t>(k) + 1], value)) {
        throw DataError("non-numeric probability in " + path);
      }
      p.values(i, k) = value;
    }
  }
  return p;
}

}  // namespace pscore
