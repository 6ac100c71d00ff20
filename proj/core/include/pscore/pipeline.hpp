#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pscore/affinity.hpp"
#include "pscore/embed.hpp"
#include "pscore/gbm.hpp"
#include "pscore/resample.hpp"

namespace pscore {

// Settings for the 2-D visualization stage; perplexities differ between the
// cluster-colored plot and the treatment-colored plots.
struct EmbedSettings {
  bool enabled = true;
  double cluster_perplexity = 90.0;
  double treatment_perplexity = 180.0;
  double learning_rate = 7.0;
  int iterations = 1000;
  QKind q_kind = QKind::student_t;
  std::size_t per_cluster = 50;    // plot subsample per cluster
  std::size_t per_treatment = 100; // plot subsample per treatment class
};

// One JSON document holding every knob of a batch run.
struct RunConfig {
  // Exactly one data source: a CSV+schema pair, or a generator description.
  std::string input_path;
  std::string schema_path;
  std::string synthetic_path;

  std::uint64_t seed = 1;
  std::string out_dir;
  int clusters = 0;  // 0 means "use the number of treatment classes"
  std::vector<double> corruption_rates{0.0, 0.10, 0.20, 0.40};

  KernelParams kernel;
  ResampleParams resample;
  BoostConfig boost;                  // .rounds ignored in favor of the rule below
  std::optional<int> rounds_override; // set -> fixed round count for every rate
  double validation_fraction = 0.2;
  EmbedSettings embed;

  std::vector<std::int64_t> targets;  // processed subset per-class sizes; empty = class sizes
  bool with_replacement = false;
  std::int64_t raw_subset_size = 3000;  // 0 = match the processed subset size
  int kmeans_restarts = 10;
  std::size_t ingest_subsample = 0;  // 0 = keep all rows; otherwise cap the
                                     // working dataset right after ingest/synthesis
  bool dump_affinity = false;  // also write each rate's affinity matrix as a
                               // binary artifact (large: 8*m^2 bytes)

  // Round count for a given corruption rate: the override when present,
  // otherwise 10 for uncorrupted data and 5 under corruption.
  int rounds_for_rate(double rate) const;

  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;  // effective snapshot (excludes out_dir)
  void validate() const;
};

struct ArtifactRecord {
  std::string sha256;
  std::uint64_t bytes = 0;
};

// Ledger of one run: the config snapshot, every emitted file with its hash,
// and wall-clock stage timings (the only part excluded from determinism
// comparisons).
struct RunManifest {
  nlohmann::json config;
  std::map<std::string, ArtifactRecord> artifacts;  // path relative to out_dir
  std::vector<std::pair<std::string, double>> timings;
  std::string failed_stage;  // empty on success

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

// Directory name for one corruption rate, e.g. 0.2 -> "rate_0.2".
std::string rate_dir_name(double rate);

// Full batch run: data preparation, then per corruption rate corrupt ->
// cluster -> resample -> train (processed and raw baseline) -> evaluate ->
// embed plots -> error-bound report. Writes everything under cfg.out_dir and
// saves the manifest after every stage; a stage failure saves the partial
// manifest with failed_stage set before rethrowing.
RunManifest cmd_pipeline(const RunConfig& cfg);

// Re-run exactly one stage (ingest|corrupt|cluster|resample|train|evaluate|
// embed|bounds) against the artifacts already in cfg.out_dir, verifying the
// upstream files still match the manifest hashes.
RunManifest cmd_stage(const std::string& stage, const RunConfig& cfg);

}  // namespace pscore
