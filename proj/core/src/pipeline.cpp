#include "pscore/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <unordered_map>

#include "pscore/bounds.hpp"
#include "pscore/dataset.hpp"
#include "pscore/errors.hpp"
#include "pscore/evaluate.hpp"
#include "pscore/plot.hpp"
#include "pscore/rng.hpp"
#include "pscore/sha256.hpp"
#include "pscore/spectral.hpp"
#include "pscore/textio.hpp"

namespace pscore {
namespace {

namespace fs = std::filesystem;

// Every random draw in the pipeline uses a seed derived from the run seed and
// a (stage, rate, slot) tag, so stages are reproducible in isolation and
// adding a stage never shifts another stage's stream.
enum StreamStage : std::uint64_t {
  kStreamData = 1,
  kStreamIngestSubsample,
  kStreamCorrupt,
  kStreamCluster,
  kStreamResample,
  kStreamSplit,
  kStreamRawSubset,
  kStreamRawSplit,
  kStreamEmbedSubsample,
  kStreamEmbedInit,
};

constexpr std::uint64_t stream_tag(std::uint64_t stage, std::size_t rate_index,
                                   std::uint64_t slot = 0) {
  return (stage << 32) | (static_cast<std::uint64_t>(rate_index) << 8) | slot;
}

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& mat) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Schema for files that carry a leading provenance column.
Schema provenance_schema(const Schema& base) {
  Schema augmented;
  augmented.columns.push_back({"source_row", ColumnRole::ignore});
  augmented.columns.insert(augmented.columns.end(), base.columns.begin(), base.columns.end());
  return augmented;
}

// Treatment codes of `data` re-expressed in another level ordering.
std::vector<int> codes_in_level_space(const Dataset& data,
                                      const std::vector<std::string>& level_space) {
  std::unordered_map<std::string, int> lookup;
  for (std::size_t k = 0; k < level_space.size(); ++k) {
    lookup.emplace(level_space[k], static_cast<int>(k));
  }
  std::vector<int> mapped(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string& level =
        data.treatment_levels[static_cast<std::size_t>(data.treatment[i])];
    const auto it = lookup.find(level);
    if (it == lookup.end()) {
      throw DataError("treatment level '" + level + "' is absent from the reference data");
    }
    mapped[i] = it->second;
  }
  return mapped;
}

struct ValidationLoss {
  std::optional<double> loss;
  std::size_t skipped = 0;
};

ValidationLoss validation_logloss(const BoostedModel& model, const Dataset& val) {
  ValidationLoss out;
  if (val.size() == 0) return out;
  std::unordered_map<std::string, Eigen::Index> class_of;
  for (std::size_t k = 0; k < model.class_levels.size(); ++k) {
    class_of.emplace(model.class_levels[k], static_cast<Eigen::Index>(k));
  }
  std::vector<std::size_t> usable;
  std::vector<Eigen::Index> hot;
  for (std::size_t i = 0; i < val.size(); ++i) {
    const std::string& level =
        val.treatment_levels[static_cast<std::size_t>(val.treatment[i])];
    const auto it = class_of.find(level);
    if (it == class_of.end()) {
      ++out.skipped;  // class the model never saw in its training split
    } else {
      usable.push_back(i);
      hot.push_back(it->second);
    }
  }
  if (usable.empty()) return out;

  const PropensityMatrix pred = predict(model, val);
  const auto d = static_cast<Eigen::Index>(model.class_levels.size());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(usable.size()), d);
  PropensityMatrix kept;
  kept.class_levels = model.class_levels;
  kept.values.resize(static_cast<Eigen::Index>(usable.size()), d);
  for (std::size_t r = 0; r < usable.size(); ++r) {
    y(static_cast<Eigen::Index>(r), hot[r]) = 1.0;
    kept.values.row(static_cast<Eigen::Index>(r)) =
        pred.values.row(static_cast<Eigen::Index>(usable[r]));
  }
  out.loss = mlogloss(y, kept);
  return out;
}

// Per-covariate reported value: the bias of a continuous column's row or a
// discrete column's max-over-levels summary row. Degenerate entries map to
// "missing" (JSON null downstream). Pairs are keyed order-independently
// (lexicographically smaller level first) so the three report arms align even
// though each subset codes its classes in its own first-appearance order.
struct BiasSummary {
  std::vector<std::string> covariates;
  std::map<std::string, std::vector<std::optional<double>>> by_pair;
};

BiasSummary summarize_bias(const BiasReport& report, const Schema& schema) {
  BiasSummary summary;
  std::unordered_map<std::string, std::size_t> covariate_index;
  for (const auto& col : schema.columns) {
    if (col.role == ColumnRole::continuous || col.role == ColumnRole::discrete) {
      covariate_index.emplace(col.name, summary.covariates.size());
      summary.covariates.push_back(col.name);
    }
  }
  for (const auto& entry : report.entries) {
    const std::string pair = entry.class_a < entry.class_b
                                 ? entry.class_a + "|" + entry.class_b
                                 : entry.class_b + "|" + entry.class_a;
    // Reported rows are exactly: continuous rows and discrete summary rows
    // (per-level indicator rows have "=" in the covariate name and no
    // covariate_index hit).
    const auto it = covariate_index.find(entry.covariate);
    if (it == covariate_index.end()) continue;
    auto [slot_it, inserted] = summary.by_pair.try_emplace(
        pair, std::vector<std::optional<double>>(summary.covariates.size()));
    if (!entry.degenerate) slot_it->second[it->second] = entry.bias;
  }
  return summary;
}

nlohmann::json bias_summary_json(const BiasSummary& summary,
                                 const std::vector<std::string>& pair_order) {
  nlohmann::json per_pair = nlohmann::json::array();
  const std::size_t n_cov = summary.covariates.size();
  std::vector<double> mean_acc(n_cov, 0.0);
  std::vector<bool> mean_ok(n_cov, true);
  for (const auto& pair : pair_order) {
    nlohmann::json cells = nlohmann::json::array();
    const auto it = summary.by_pair.find(pair);
    for (std::size_t c = 0; c < n_cov; ++c) {
      const std::optional<double> value =
          it == summary.by_pair.end() ? std::nullopt : it->second[c];
      if (value) {
        cells.push_back(*value);
        mean_acc[c] += *value;
      } else {
        cells.push_back(nullptr);
        mean_ok[c] = false;
      }
    }
    per_pair.push_back(std::move(cells));
  }
  nlohmann::json means = nlohmann::json::array();
  for (std::size_t c = 0; c < n_cov; ++c) {
    if (mean_ok[c] && !pair_order.empty()) {
      means.push_back(mean_acc[c] / static_cast<double>(pair_order.size()));
    } else {
      means.push_back(nullptr);
    }
  }
  return nlohmann::json{{"per_pair", std::move(per_pair)},
                        {"per_covariate_mean", std::move(means)}};
}

class PipelineRun {
 public:
  explicit PipelineRun(const RunConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  RunManifest run_all() {
    start_fresh();
    guarded("ingest", [&] { stage_ingest(); });
    for (std::size_t ri = 0; ri < cfg_.corruption_rates.size(); ++ri) {
      run_rate_stages(ri);
    }
    save_manifest();
    return manifest_;
  }

  RunManifest run_stage(const std::string& name) {
    static const std::set<std::string> known{"ingest",   "corrupt",  "cluster", "resample",
                                             "train",    "evaluate", "embed",   "bounds"};
    if (known.find(name) == known.end()) {
      throw ConfigError("unknown stage '" + name +
                        "' (expected ingest|corrupt|cluster|resample|train|evaluate|embed|bounds)");
    }
    const std::string manifest_path = abs("manifest.json");
    if (fs::exists(manifest_path)) {
      manifest_ = RunManifest::load(manifest_path);
      if (manifest_.config != cfg_.to_json()) {
        throw ConfigError(
            "the output directory was produced with a different configuration; "
            "re-run the full pipeline or restore the original config");
      }
      manifest_.failed_stage.clear();
    } else if (name == "ingest") {
      start_fresh();
    } else {
      throw DataError("no manifest in '" + cfg_.out_dir +
                      "'; run the ingest stage or the full pipeline first");
    }

    if (name == "ingest") {
      guarded("ingest", [&] { stage_ingest(); });
    } else {
      for (std::size_t ri = 0; ri < cfg_.corruption_rates.size(); ++ri) {
        const std::string label = name + " " + rate_dir(ri);
        if (name == "corrupt") guarded(label, [&] { stage_corrupt(ri); });
        else if (name == "cluster") guarded(label, [&] { stage_cluster(ri); });
        else if (name == "resample") guarded(label, [&] { stage_resample(ri); });
        else if (name == "train") guarded(label, [&] { stage_train(ri); });
        else if (name == "evaluate") guarded(label, [&] { stage_evaluate(ri); });
        else if (name == "embed") guarded(label, [&] { stage_embed(ri); });
        else if (name == "bounds") guarded(label, [&] { stage_bounds(ri); });
      }
    }
    save_manifest();
    return manifest_;
  }

 private:
  // ---- plumbing ------------------------------------------------------------

  std::string abs(const std::string& rel) const {
    return (fs::path(cfg_.out_dir) / rel).string();
  }

  std::string rate_dir(std::size_t rate_index) const {
    return rate_dir_name(cfg_.corruption_rates[rate_index]);
  }

  void ensure_parent(const std::string& rel) {
    const fs::path parent = fs::path(abs(rel)).parent_path();
    if (!parent.empty()) ensure_directory(parent.string());
  }

  // Record an artifact that was just written.
  void emit(const std::string& rel) {
    ArtifactRecord record;
    record.sha256 = sha256_file_hex(abs(rel));
    record.bytes = static_cast<std::uint64_t>(fs::file_size(abs(rel)));
    manifest_.artifacts[rel] = std::move(record);
  }

  void write_json_artifact(const std::string& rel, const nlohmann::json& j) {
    ensure_parent(rel);
    write_text_file(abs(rel), j.dump(2) + "\n");
    emit(rel);
  }

  // Verify an upstream artifact is present and unchanged before reading it.
  void require(const std::string& rel) {
    const auto it = manifest_.artifacts.find(rel);
    if (it == manifest_.artifacts.end()) {
      throw DataError("missing upstream artifact '" + rel + "'; run its stage first");
    }
    if (!fs::exists(abs(rel))) {
      throw DataError("upstream artifact '" + rel + "' is missing on disk");
    }
    if (sha256_file_hex(abs(rel)) != it->second.sha256) {
      throw DataError("upstream artifact '" + rel +
                      "' changed since it was produced (hash mismatch); re-run its stage");
    }
  }

  void start_fresh() {
    manifest_ = RunManifest{};
    manifest_.config = cfg_.to_json();
    ensure_directory(cfg_.out_dir);
    write_text_file(abs("config.json"), manifest_.config.dump(2) + "\n");
    emit("config.json");
  }

  void save_manifest() { manifest_.save(abs("manifest.json")); }

  void guarded(const std::string& label, const std::function<void()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (...) {
      manifest_.timings.emplace_back(label, elapsed_seconds(start));
      manifest_.failed_stage = label;
      save_manifest();
      // Re-throw with the failing stage in the message, preserving the type
      // so the CLI exit code stays faithful.
      try {
        throw;
      } catch (const ConfigError& e) {
        throw ConfigError("stage '" + label + "': " + e.what());
      } catch (const DataError& e) {
        throw DataError("stage '" + label + "': " + e.what());
      } catch (const NumericError& e) {
        throw NumericError("stage '" + label + "': " + e.what());
      }
    }
    manifest_.timings.emplace_back(label, elapsed_seconds(start));
    save_manifest();
  }

  void run_rate_stages(std::size_t ri) {
    const std::string tag = rate_dir(ri);
    guarded("corrupt " + tag, [&] { stage_corrupt(ri); });
    guarded("cluster " + tag, [&] { stage_cluster(ri); });
    guarded("resample " + tag, [&] { stage_resample(ri); });
    guarded("train " + tag, [&] { stage_train(ri); });
    guarded("evaluate " + tag, [&] { stage_evaluate(ri); });
    if (cfg_.embed.enabled) guarded("embed " + tag, [&] { stage_embed(ri); });
    guarded("bounds " + tag, [&] { stage_bounds(ri); });
  }

  // ---- artifact readers ----------------------------------------------------

  Schema load_schema() {
    require("data/schema.json");
    return Schema::load(abs("data/schema.json"));
  }

  Dataset load_base(const Schema& schema) {
    require("data/base.csv");
    return ingest(abs("data/base.csv"), schema).data;
  }

  Dataset load_observed(std::size_t ri, const Schema& schema) {
    const std::string rel = rate_dir(ri) + "/corrupt/observed.csv";
    require(rel);
    return ingest(abs(rel), schema).data;
  }

  Dataset load_provenance_csv(const std::string& rel, const Schema& schema) {
    require(rel);
    return ingest(abs(rel), provenance_schema(schema)).data;
  }

  std::vector<int> load_labels(std::size_t ri, std::size_t expected_rows, int n) {
    const std::string rel = rate_dir(ri) + "/cluster/labels.csv";
    require(rel);
    const auto rows = read_csv(abs(rel));
    if (rows.size() != expected_rows + 1 || rows.empty() || rows[0].size() != 2 ||
        rows[0][0] != "row" || rows[0][1] != "cluster") {
      throw DataError("malformed cluster label file " + rel);
    }
    std::vector<int> labels(expected_rows);
    for (std::size_t i = 0; i < expected_rows; ++i) {
      const auto& row = rows[i + 1];
      if (row[0] != std::to_string(i)) {
        throw DataError("cluster label file rows out of order in " + rel);
      }
      const int value = std::stoi(row[1]);
      if (value < 0 || value >= n) throw DataError("cluster label out of range in " + rel);
      labels[i] = value;
    }
    return labels;
  }

  int resolve_clusters(const Dataset& data) const {
    return cfg_.clusters == 0 ? data.num_classes : cfg_.clusters;
  }

  // ---- stages ---------------------------------------------------------------

  void stage_ingest() {
    ensure_directory(abs("data"));
    Dataset data;
    nlohmann::json meta;
    if (!cfg_.synthetic_path.empty()) {
      const SyntheticSpec spec = SyntheticSpec::load(cfg_.synthetic_path);
      data = synthesize(spec, derive_seed(cfg_.seed, stream_tag(kStreamData, 0)));
      meta["source"] = "synthetic";
      meta["rows_dropped"] = 0;
    } else {
      const Schema schema = Schema::load(cfg_.schema_path);
      IngestResult result = ingest(cfg_.input_path, schema);
      data = std::move(result.data);
      meta["source"] = "csv";
      meta["rows_dropped"] = result.rows_dropped;
    }
    if (cfg_.ingest_subsample > 0 && data.size() > cfg_.ingest_subsample) {
      data = subsample(data, cfg_.ingest_subsample,
                       derive_seed(cfg_.seed, stream_tag(kStreamIngestSubsample, 0)));
      meta["subsampled_to"] = cfg_.ingest_subsample;
    }
    data.validate();

    data.schema.save(abs("data/schema.json"));
    emit("data/schema.json");
    export_csv(data, abs("data/base.csv"));
    emit("data/base.csv");

    if (!data.pattern.empty()) {
      std::vector<std::vector<std::string>> rows;
      rows.push_back({"row", "pattern", "treatment"});
      for (std::size_t i = 0; i < data.size(); ++i) {
        rows.push_back({std::to_string(i), std::to_string(data.pattern[i]),
                        data.treatment_levels[static_cast<std::size_t>(data.treatment[i])]});
      }
      write_csv(abs("data/patterns.csv"), rows);
      emit("data/patterns.csv");
    }

    meta["rows"] = data.size();
    meta["classes"] = data.num_classes;
    meta["class_levels"] = data.treatment_levels;
    meta["class_counts"] = data.class_counts();
    write_json_artifact("data/meta.json", meta);
  }

  void stage_corrupt(std::size_t ri) {
    const Schema schema = load_schema();
    const Dataset base = load_base(schema);
    const double rate = cfg_.corruption_rates[ri];
    const std::uint64_t seed = derive_seed(cfg_.seed, stream_tag(kStreamCorrupt, ri));
    const CorruptionResult result = corrupt(base, {rate, seed});
    const std::string dir = rate_dir(ri) + "/corrupt";
    ensure_directory(abs(dir));
    export_csv(result.data, abs(dir + "/observed.csv"));
    emit(dir + "/observed.csv");
    nlohmann::json meta{{"rate", rate},
                        {"seed", seed},
                        {"flipped_count", result.flipped_rows.size()},
                        {"flipped_rows", result.flipped_rows}};
    write_json_artifact(dir + "/meta.json", meta);
  }

  void stage_cluster(std::size_t ri) {
    const Schema schema = load_schema();
    const Dataset observed = load_observed(ri, schema);
    const int n = resolve_clusters(observed);

    const AffinityMatrix affinity = build_affinity(observed, cfg_.kernel);
    const SpectralEmbedding embedding = spectral_embed(affinity, n);
    const ClusterAssignment assign =
        kmeans(embedding.rows, n, cfg_.kmeans_restarts,
               derive_seed(cfg_.seed, stream_tag(kStreamCluster, ri)));

    const std::string dir = rate_dir(ri) + "/cluster";
    ensure_directory(abs(dir));
    if (cfg_.dump_affinity) {
      write_affinity(affinity, abs(dir + "/affinity.bin"));
      emit(dir + "/affinity.bin");
    }
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"row", "cluster"});
    for (std::size_t i = 0; i < assign.labels.size(); ++i) {
      rows.push_back({std::to_string(i), std::to_string(assign.labels[i])});
    }
    write_csv(abs(dir + "/labels.csv"), rows);
    emit(dir + "/labels.csv");

    std::vector<std::size_t> sizes(static_cast<std::size_t>(n), 0);
    for (int label : assign.labels) ++sizes[static_cast<std::size_t>(label)];
    const std::size_t top = std::min(embedding.eigenvalues.size(),
                                     static_cast<std::size_t>(2 * n));
    nlohmann::json meta{
        {"clusters", n},
        {"sigma", affinity.sigma},
        {"restarts", cfg_.kmeans_restarts},
        {"inertia", assign.inertia},
        {"cluster_sizes", sizes},
        {"top_eigenvalues",
         std::vector<double>(embedding.eigenvalues.begin(),
                             embedding.eigenvalues.begin() + static_cast<std::ptrdiff_t>(top))}};
    write_json_artifact(dir + "/meta.json", meta);
  }

  void stage_resample(std::size_t ri) {
    const Schema schema = load_schema();
    const Dataset observed = load_observed(ri, schema);
    const int n = resolve_clusters(observed);
    ClusterAssignment assign;
    assign.labels = load_labels(ri, observed.size(), n);
    assign.n = n;

    const ResamplePlan plan =
        make_plan(assign, observed, cfg_.resample, cfg_.targets, cfg_.with_replacement);
    const std::string dir = rate_dir(ri) + "/resample";
    ensure_directory(abs(dir));
    write_json_artifact(dir + "/plan.json", plan_to_json(plan, observed));

    DrawOptions options;
    options.targets = cfg_.targets;
    options.with_replacement = cfg_.with_replacement;
    const Dataset subset = draw_subset(observed, assign, plan.p_star, options,
                                       derive_seed(cfg_.seed, stream_tag(kStreamResample, ri)));
    export_csv_with_provenance(subset, abs(dir + "/subset.csv"));
    emit(dir + "/subset.csv");
  }

  struct TrainedArtifacts {
    BoostedModel model;
    nlohmann::json meta;
  };

  TrainedArtifacts train_one(const Dataset& subset, int rounds, std::uint64_t split_seed) {
    const std::size_t m = subset.size();
    const auto val_count =
        static_cast<std::size_t>(std::floor(static_cast<double>(m) * cfg_.validation_fraction));
    Rng rng(split_seed);
    const std::vector<std::size_t> val_rows = rng.sample_without_replacement(m, val_count);
    std::vector<char> in_val(m, 0);
    for (std::size_t r : val_rows) in_val[r] = 1;
    std::vector<std::size_t> train_rows;
    train_rows.reserve(m - val_count);
    for (std::size_t r = 0; r < m; ++r) {
      if (!in_val[r]) train_rows.push_back(r);
    }

    BoostConfig boost = cfg_.boost;
    boost.rounds = rounds;
    const Dataset train_split = select_rows(subset, train_rows);
    TrainedArtifacts out;
    out.model = train(train_split, boost, 0);

    ValidationLoss val;
    if (val_count > 0) {
      val = validation_logloss(out.model, select_rows(subset, val_rows));
    }
    out.meta = nlohmann::json{{"rows", m},
                              {"train_rows", train_rows.size()},
                              {"validation_rows", val_rows.size()},
                              {"rounds", rounds},
                              {"train_logloss", out.model.train_loss},
                              {"validation_logloss",
                               val.loss ? nlohmann::json(*val.loss) : nlohmann::json()},
                              {"validation_skipped_rows", val.skipped}};
    return out;
  }

  void stage_train(std::size_t ri) {
    const Schema schema = load_schema();
    const std::string subset_rel = rate_dir(ri) + "/resample/subset.csv";
    const Dataset subset = load_provenance_csv(subset_rel, schema);
    const int rounds = cfg_.rounds_for_rate(cfg_.corruption_rates[ri]);

    const std::string dir = rate_dir(ri) + "/train";
    ensure_directory(abs(dir + "/processed"));
    ensure_directory(abs(dir + "/raw"));

    TrainedArtifacts processed =
        train_one(subset, rounds, derive_seed(cfg_.seed, stream_tag(kStreamSplit, ri)));
    processed.model.save(abs(dir + "/processed/model.json"));
    emit(dir + "/processed/model.json");
    write_predictions(predict(processed.model, subset), abs(dir + "/processed/predictions.csv"));
    emit(dir + "/processed/predictions.csv");
    write_json_artifact(dir + "/processed/meta.json", processed.meta);

    // Baseline: a plain random subset of the observed data, same training
    // recipe, for the comparison the evaluation stage reports.
    const Dataset observed = load_observed(ri, schema);
    std::size_t raw_size = cfg_.raw_subset_size == 0
                               ? subset.size()
                               : static_cast<std::size_t>(cfg_.raw_subset_size);
    const bool clamped = raw_size > observed.size();
    if (clamped) raw_size = observed.size();
    const Dataset raw_subset =
        subsample(observed, raw_size, derive_seed(cfg_.seed, stream_tag(kStreamRawSubset, ri)));
    export_csv_with_provenance(raw_subset, abs(dir + "/raw/subset.csv"));
    emit(dir + "/raw/subset.csv");

    TrainedArtifacts raw =
        train_one(raw_subset, rounds, derive_seed(cfg_.seed, stream_tag(kStreamRawSplit, ri)));
    raw.meta["requested_rows"] = cfg_.raw_subset_size;
    raw.meta["clamped_to_dataset"] = clamped;
    raw.model.save(abs(dir + "/raw/model.json"));
    emit(dir + "/raw/model.json");
    write_predictions(predict(raw.model, raw_subset), abs(dir + "/raw/predictions.csv"));
    emit(dir + "/raw/predictions.csv");
    write_json_artifact(dir + "/raw/meta.json", raw.meta);
  }

  // Provenance column of a subset CSV: each row's index into data/base.csv.
  std::vector<std::size_t> read_provenance_column(const std::string& rel) {
    const auto rows = read_csv(abs(rel));
    if (rows.empty() || rows[0].empty() || rows[0][0] != "source_row") {
      throw DataError("no provenance column in " + rel);
    }
    std::vector<std::size_t> out;
    out.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      out.push_back(static_cast<std::size_t>(std::stoull(rows[i][0])));
    }
    return out;
  }

  // The pre-corruption treatment level of each subset row, looked up through
  // its provenance. Balance is always scored against these authentic groups:
  // corrupting labels and then judging balance on the corrupted groups would
  // reward the corruption for mixing the groups.
  std::vector<std::string> authentic_labels(const Dataset& base,
                                            const std::vector<std::size_t>& sources) {
    std::vector<std::string> labels;
    labels.reserve(sources.size());
    for (std::size_t s : sources) {
      if (s >= base.size()) {
        throw DataError("provenance row " + std::to_string(s) + " is out of range");
      }
      labels.push_back(base.treatment_levels[static_cast<std::size_t>(base.treatment[s])]);
    }
    return labels;
  }

  void stage_evaluate(std::size_t ri) {
    const Schema schema = load_schema();
    const std::string rate = rate_dir(ri);
    const Dataset base = load_base(schema);
    const Dataset subset = with_treatment_labels(
        load_provenance_csv(rate + "/resample/subset.csv", schema),
        authentic_labels(base, read_provenance_column(rate + "/resample/subset.csv")));
    const Dataset raw_subset = with_treatment_labels(
        load_provenance_csv(rate + "/train/raw/subset.csv", schema),
        authentic_labels(base, read_provenance_column(rate + "/train/raw/subset.csv")));

    require(rate + "/train/processed/predictions.csv");
    require(rate + "/train/raw/predictions.csv");
    const PropensityMatrix processed_pred =
        read_predictions(abs(rate + "/train/processed/predictions.csv"));
    const PropensityMatrix raw_pred = read_predictions(abs(rate + "/train/raw/predictions.csv"));

    const std::string dir = rate + "/evaluate";
    ensure_directory(abs(dir));

    const WeightVector processed_weights = ate_weights(subset, processed_pred);
    const BiasReport processed_report = bias_report(subset, &processed_weights);
    processed_report.save_json(abs(dir + "/processed_weighted.json"));
    emit(dir + "/processed_weighted.json");
    processed_report.save_text(abs(dir + "/processed_weighted.txt"));
    emit(dir + "/processed_weighted.txt");

    const WeightVector raw_weights = ate_weights(raw_subset, raw_pred);
    const BiasReport raw_report = bias_report(raw_subset, &raw_weights);
    raw_report.save_json(abs(dir + "/raw_weighted.json"));
    emit(dir + "/raw_weighted.json");
    raw_report.save_text(abs(dir + "/raw_weighted.txt"));
    emit(dir + "/raw_weighted.txt");

    const BiasReport unweighted_report = bias_report(raw_subset, nullptr);
    unweighted_report.save_json(abs(dir + "/raw_unweighted.json"));
    emit(dir + "/raw_unweighted.json");
    unweighted_report.save_text(abs(dir + "/raw_unweighted.txt"));
    emit(dir + "/raw_unweighted.txt");

    const BiasSummary processed_summary = summarize_bias(processed_report, schema);
    const BiasSummary raw_summary = summarize_bias(raw_report, schema);
    const BiasSummary unweighted_summary = summarize_bias(unweighted_report, schema);
    std::set<std::string> pair_set;
    for (const auto* s : {&processed_summary, &raw_summary, &unweighted_summary}) {
      for (const auto& [pair, row] : s->by_pair) pair_set.insert(pair);
    }
    const std::vector<std::string> pair_order(pair_set.begin(), pair_set.end());
    nlohmann::json summary{
        {"grouping", "authentic treatment labels via row provenance"},
        {"covariates", processed_summary.covariates},
        {"pairs", pair_order},
        {"processed_weighted", bias_summary_json(processed_summary, pair_order)},
        {"raw_weighted", bias_summary_json(raw_summary, pair_order)},
        {"raw_unweighted", bias_summary_json(unweighted_summary, pair_order)}};
    write_json_artifact(dir + "/summary.json", summary);
  }

  struct PlotSpec {
    std::string name;       // artifact stem, e.g. "cluster"
    std::string title;
    const Dataset* source;  // dataset the points come from
    std::vector<int> groups;
    std::vector<std::string> group_names;
    double perplexity;
    std::uint64_t slot;     // seed slot
  };

  nlohmann::json run_plot(std::size_t ri, const PlotSpec& spec) {
    const std::string dir = rate_dir(ri) + "/embed";
    const auto n_groups = static_cast<int>(spec.group_names.size());
    const std::vector<std::size_t> chosen = subsample_per_group(
        spec.groups, n_groups,
        spec.name == "cluster" ? cfg_.embed.per_cluster : cfg_.embed.per_treatment,
        derive_seed(cfg_.seed, stream_tag(kStreamEmbedSubsample, ri, spec.slot)));
    nlohmann::json meta{{"plot", spec.name}, {"points", chosen.size()}};
    if (chosen.size() < 5) {
      meta["skipped"] = "fewer than 5 points to embed";
      return meta;
    }

    const Dataset selected = select_rows(*spec.source, chosen);
    const DistanceMatrix distance = mixed_distance(selected);

    EmbedParams params;
    params.perplexity = spec.perplexity;
    params.learning_rate = cfg_.embed.learning_rate;
    params.iterations = cfg_.embed.iterations;
    params.q_kind = cfg_.embed.q_kind;
    params.seed = derive_seed(cfg_.seed, stream_tag(kStreamEmbedInit, ri, spec.slot));
    if (!(params.perplexity < static_cast<double>(chosen.size()))) {
      params.perplexity = std::max(2.0, static_cast<double>(chosen.size() - 1) / 2.0);
      meta["perplexity_reduced"] = true;
    }
    meta["perplexity_used"] = params.perplexity;

    const Embedding embedding = run_embedding(distance, params);

    ScatterData scatter;
    scatter.coords = embedding.coords;
    scatter.group_names = spec.group_names;
    scatter.row_ids = chosen;
    scatter.groups.reserve(chosen.size());
    for (std::size_t row : chosen) scatter.groups.push_back(spec.groups[row]);

    write_coords_csv(scatter, abs(dir + "/" + spec.name + "_coords.csv"));
    emit(dir + "/" + spec.name + "_coords.csv");
    write_scatter_svg(scatter, spec.title, abs(dir + "/" + spec.name + "_plot.svg"));
    emit(dir + "/" + spec.name + "_plot.svg");

    meta["tau"] = distance.tau;
    meta["initial_kl"] = embedding.initial_kl;
    meta["final_kl"] = embedding.final_kl;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& sample : embedding.kl_trace) {
      trace.push_back({{"iteration", sample.iteration}, {"kl", sample.kl}});
    }
    meta["kl_trace"] = std::move(trace);
    meta["non_converged_rows"] = embedding.non_converged.size();
    meta["warnings"] = embedding.warnings;
    return meta;
  }

  void stage_embed(std::size_t ri) {
    const Schema schema = load_schema();
    const Dataset observed = load_observed(ri, schema);
    const int n = resolve_clusters(observed);
    const std::vector<int> labels = load_labels(ri, observed.size(), n);
    const Dataset subset =
        load_provenance_csv(rate_dir(ri) + "/resample/subset.csv", schema);
    ensure_directory(abs(rate_dir(ri) + "/embed"));
    const std::string rate_label = format_double(cfg_.corruption_rates[ri]);

    std::vector<std::string> cluster_names;
    for (int g = 0; g < n; ++g) cluster_names.push_back("cluster " + std::to_string(g));

    nlohmann::json plots = nlohmann::json::array();
    {
      PlotSpec spec{"cluster",
                    "Spectral clusters (corruption rate " + rate_label + ")",
                    &observed,
                    labels,
                    cluster_names,
                    cfg_.embed.cluster_perplexity,
                    0};
      plots.push_back(run_plot(ri, spec));
    }
    {
      PlotSpec spec{"treatment_before",
                    "Treatments before resampling (corruption rate " + rate_label + ")",
                    &observed,
                    observed.treatment,
                    observed.treatment_levels,
                    cfg_.embed.treatment_perplexity,
                    1};
      plots.push_back(run_plot(ri, spec));
    }
    {
      PlotSpec spec{"treatment_after",
                    "Treatments after resampling (corruption rate " + rate_label + ")",
                    &subset,
                    subset.treatment,
                    subset.treatment_levels,
                    cfg_.embed.treatment_perplexity,
                    2};
      plots.push_back(run_plot(ri, spec));
    }
    write_json_artifact(rate_dir(ri) + "/embed/meta.json", nlohmann::json{{"plots", plots}});
  }

  void stage_bounds(std::size_t ri) {
    const std::string dir = rate_dir(ri) + "/bounds";
    ensure_directory(abs(dir));
    if (manifest_.artifacts.find("data/patterns.csv") == manifest_.artifacts.end()) {
      write_json_artifact(
          dir + "/report.json",
          nlohmann::json{{"ground_truth_available", false},
                         {"reason", "no generating-pattern ground truth for this data source"}});
      return;
    }

    const Schema schema = load_schema();
    const Dataset base = load_base(schema);
    const Dataset observed = load_observed(ri, schema);
    const int n = resolve_clusters(observed);
    const std::vector<int> clusters = load_labels(ri, observed.size(), n);

    require("data/patterns.csv");
    const auto rows = read_csv(abs("data/patterns.csv"));
    if (rows.size() != base.size() + 1) {
      throw DataError("pattern file row count does not match the base data");
    }
    std::vector<int> patterns(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      patterns[i] = std::stoi(rows[i + 1][1]);
    }

    const std::vector<int> observed_codes = codes_in_level_space(observed, base.treatment_levels);
    const std::vector<int> true_codes = base.treatment;

    const BoundsInstance inst =
        empirical_instance(patterns, true_codes, observed_codes, clusters);
    const std::vector<bool> assumptions = check_assumptions(inst);
    const std::vector<int> matching = match_clusters_to_patterns(patterns, clusters);

    nlohmann::json classes = nlohmann::json::array();
    nlohmann::json violations = nlohmann::json::array();
    for (int k = 0; k < inst.p.rows(); ++k) {
      const double eps = error_size(inst, k);
      const BoundResult result = error_rate_bound(inst, k);
      const std::string& level = base.treatment_levels[static_cast<std::size_t>(k)];
      nlohmann::json row{{"level", level},
                         {"assumption_holds", static_cast<bool>(assumptions[static_cast<std::size_t>(k)])},
                         {"error_size", eps},
                         {"defined", result.defined},
                         {"case", result.case_kind}};
      if (result.defined) {
        row["eta_hat"] = result.eta_hat;
        row["bound"] = result.bound;
        if (assumptions[static_cast<std::size_t>(k)] &&
            result.eta_hat > result.bound + 1e-12) {
          violations.push_back(level);
        }
      }
      classes.push_back(std::move(row));
    }

    write_json_artifact(
        dir + "/report.json",
        nlohmann::json{{"ground_truth_available", true},
                       {"classes", std::move(classes)},
                       {"true_proportions", matrix_to_json(inst.p)},
                       {"observed_proportions", matrix_to_json(inst.p_star)},
                       {"group_sizes", inst.c},
                       {"cluster_for_pattern", matching},
                       {"bound_violations", std::move(violations)}});
  }

  RunConfig cfg_;
  RunManifest manifest_;
};

}  // namespace

int RunConfig::rounds_for_rate(double rate) const {
  if (rounds_override) return *rounds_override;
  return rate == 0.0 ? 10 : 5;
}

RunConfig RunConfig::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }

  RunConfig cfg;
  try {
    check_keys(j,
               {"input", "schema", "synthetic", "seed", "out", "clusters", "corruption_rates",
                "kernel", "resample", "boost", "validation_fraction", "embed", "targets",
                "with_replacement", "raw_subset_size", "kmeans_restarts", "ingest_subsample",
                "dump_affinity"},
               "config");
    cfg.input_path = j.value("input", "");
    cfg.schema_path = j.value("schema", "");
    cfg.synthetic_path = j.value("synthetic", "");
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.out_dir = j.value("out", "");
    cfg.clusters = j.value("clusters", 0);
    if (j.contains("corruption_rates")) {
      cfg.corruption_rates = j.at("corruption_rates").get<std::vector<double>>();
    }
    if (j.contains("kernel")) {
      const auto& k = j.at("kernel");
      check_keys(k, {"sigma", "max_dense_samples"}, "config.kernel");
      if (k.contains("sigma") && !k.at("sigma").is_null()) {
        cfg.kernel.sigma = k.at("sigma").get<double>();
      }
      cfg.kernel.max_dense_samples =
          k.value("max_dense_samples", cfg.kernel.max_dense_samples);
    }
    if (j.contains("resample")) {
      const auto& r = j.at("resample");
      check_keys(r, {"gamma", "eta", "epsilon"}, "config.resample");
      cfg.resample.gamma = r.value("gamma", cfg.resample.gamma);
      cfg.resample.eta = r.value("eta", cfg.resample.eta);
      cfg.resample.epsilon = r.value("epsilon", cfg.resample.epsilon);
    }
    if (j.contains("boost")) {
      const auto& b = j.at("boost");
      check_keys(b,
                 {"max_depth", "learning_rate", "rounds", "lambda", "alpha",
                  "min_child_weight"},
                 "config.boost");
      cfg.boost.max_depth = b.value("max_depth", cfg.boost.max_depth);
      cfg.boost.learning_rate = b.value("learning_rate", cfg.boost.learning_rate);
      cfg.boost.lambda = b.value("lambda", cfg.boost.lambda);
      cfg.boost.alpha = b.value("alpha", cfg.boost.alpha);
      cfg.boost.min_child_weight = b.value("min_child_weight", cfg.boost.min_child_weight);
      if (b.contains("rounds")) cfg.rounds_override = b.at("rounds").get<int>();
    }
    cfg.validation_fraction = j.value("validation_fraction", cfg.validation_fraction);
    if (j.contains("embed")) {
      const auto& e = j.at("embed");
      check_keys(e,
                 {"enabled", "cluster_perplexity", "treatment_perplexity", "learning_rate",
                  "iterations", "q_kind", "per_cluster", "per_treatment"},
                 "config.embed");
      cfg.embed.enabled = e.value("enabled", cfg.embed.enabled);
      cfg.embed.cluster_perplexity =
          e.value("cluster_perplexity", cfg.embed.cluster_perplexity);
      cfg.embed.treatment_perplexity =
          e.value("treatment_perplexity", cfg.embed.treatment_perplexity);
      cfg.embed.learning_rate = e.value("learning_rate", cfg.embed.learning_rate);
      cfg.embed.iterations = e.value("iterations", cfg.embed.iterations);
      if (e.contains("q_kind")) cfg.embed.q_kind = q_kind_from_string(e.at("q_kind").get<std::string>());
      cfg.embed.per_cluster = e.value("per_cluster", cfg.embed.per_cluster);
      cfg.embed.per_treatment = e.value("per_treatment", cfg.embed.per_treatment);
    }
    if (j.contains("targets")) {
      cfg.targets = j.at("targets").get<std::vector<std::int64_t>>();
    }
    cfg.with_replacement = j.value("with_replacement", cfg.with_replacement);
    cfg.raw_subset_size = j.value("raw_subset_size", cfg.raw_subset_size);
    cfg.kmeans_restarts = j.value("kmeans_restarts", cfg.kmeans_restarts);
    cfg.ingest_subsample = j.value("ingest_subsample", cfg.ingest_subsample);
    cfg.dump_affinity = j.value("dump_affinity", cfg.dump_affinity);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json boost_json{{"max_depth", boost.max_depth},
                            {"learning_rate", boost.learning_rate},
                            {"lambda", boost.lambda},
                            {"alpha", boost.alpha},
                            {"min_child_weight", boost.min_child_weight}};
  if (rounds_override) boost_json["rounds"] = *rounds_override;
  nlohmann::json j{
      {"input", input_path},
      {"schema", schema_path},
      {"synthetic", synthetic_path},
      {"seed", seed},
      {"clusters", clusters},
      {"corruption_rates", corruption_rates},
      {"kernel",
       {{"sigma", kernel.sigma ? nlohmann::json(*kernel.sigma) : nlohmann::json()},
        {"max_dense_samples", kernel.max_dense_samples}}},
      {"resample",
       {{"gamma", resample.gamma}, {"eta", resample.eta}, {"epsilon", resample.epsilon}}},
      {"boost", std::move(boost_json)},
      {"validation_fraction", validation_fraction},
      {"embed",
       {{"enabled", embed.enabled},
        {"cluster_perplexity", embed.cluster_perplexity},
        {"treatment_perplexity", embed.treatment_perplexity},
        {"learning_rate", embed.learning_rate},
        {"iterations", embed.iterations},
        {"q_kind", to_string(embed.q_kind)},
        {"per_cluster", embed.per_cluster},
        {"per_treatment", embed.per_treatment}}},
      {"targets", targets},
      {"with_replacement", with_replacement},
      {"raw_subset_size", raw_subset_size},
      {"kmeans_restarts", kmeans_restarts},
      {"ingest_subsample", ingest_subsample},
      {"dump_affinity", dump_affinity}};
  return j;
}

void RunConfig::validate() const {
  const bool has_csv = !input_path.empty() || !schema_path.empty();
  const bool has_synth = !synthetic_path.empty();
  if (has_csv == has_synth) {
    throw ConfigError("config needs exactly one data source: input+schema, or synthetic");
  }
  if (has_csv && (input_path.empty() || schema_path.empty())) {
    throw ConfigError("CSV input needs both 'input' and 'schema' paths");
  }
  if (out_dir.empty()) throw ConfigError("output directory is not set");
  if (corruption_rates.empty()) throw ConfigError("corruption_rates must not be empty");
  std::set<std::string> names;
  for (double rate : corruption_rates) {
    if (!(rate >= 0.0 && rate <= 0.5)) {
      throw ConfigError("corruption rates must lie in [0, 0.5]");
    }
    if (!names.insert(rate_dir_name(rate)).second) {
      throw ConfigError("duplicate corruption rate " + format_double(rate));
    }
  }
  if (clusters < 0) throw ConfigError("clusters must be >= 0");
  if (kernel.sigma && !(*kernel.sigma > 0.0)) throw ConfigError("kernel sigma must be > 0");
  resample.validate();
  boost.validate();
  if (rounds_override && *rounds_override < 1) throw ConfigError("rounds must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction <= 0.5)) {
    throw ConfigError("validation_fraction must lie in [0, 0.5]");
  }
  if (!(embed.cluster_perplexity > 1.0) || !(embed.treatment_perplexity > 1.0)) {
    throw ConfigError("embedding perplexities must be > 1");
  }
  if (!(embed.learning_rate > 0.0)) throw ConfigError("embedding learning_rate must be > 0");
  if (embed.iterations < 1) throw ConfigError("embedding iterations must be >= 1");
  if (embed.per_cluster < 1 || embed.per_treatment < 1) {
    throw ConfigError("plot subsample sizes must be >= 1");
  }
  for (std::int64_t t : targets) {
    if (t < 1) throw ConfigError("subset targets must be >= 1");
  }
  if (raw_subset_size < 0) throw ConfigError("raw_subset_size must be >= 0");
  if (kmeans_restarts < 1) throw ConfigError("kmeans_restarts must be >= 1");
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json artifacts_json = nlohmann::json::object();
  for (const auto& [rel, record] : artifacts) {
    artifacts_json[rel] = {{"sha256", record.sha256}, {"bytes", record.bytes}};
  }
  nlohmann::json timings_json = nlohmann::json::array();
  for (const auto& [stage, seconds] : timings) {
    timings_json.push_back({{"stage", stage}, {"seconds", seconds}});
  }
  return nlohmann::json{{"config", config},
                        {"artifacts", std::move(artifacts_json)},
                        {"timings", std::move(timings_json)},
                        {"failed_stage", failed_stage}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest manifest;
  try {
    manifest.config = j.at("config");
    for (const auto& item : j.at("artifacts").items()) {
      ArtifactRecord record;
      record.sha256 = item.value().at("sha256").get<std::string>();
      record.bytes = item.value().at("bytes").get<std::uint64_t>();
      manifest.artifacts.emplace(item.key(), std::move(record));
    }
    for (const auto& t : j.at("timings")) {
      manifest.timings.emplace_back(t.at("stage").get<std::string>(),
                                    t.at("seconds").get<double>());
    }
    manifest.failed_stage = j.value("failed_stage", "");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return manifest;
}

void RunManifest::save(const std::string& path) const {
  write_text_file(path, to_json().dump(2) + "\n");
}

RunManifest RunManifest::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("cannot parse manifest " + path + ": " + e.what());
  }
  return from_json(j);
}

std::string rate_dir_name(double rate) { return "rate_" + format_double(rate); }

RunManifest cmd_pipeline(const RunConfig& cfg) {
  PipelineRun run(cfg);
  return run.run_all();
}

RunManifest cmd_stage(const std::string& stage, const RunConfig& cfg) {
  PipelineRun run(cfg);
  return run.run_stage(stage);
}

}  // namespace pscore
