#pragma once

#include "eparvi/baselines.hpp"
#include "eparvi/mesh.hpp"
#include "eparvi/sampler.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace eparvi {

struct MeshConfig {
  Box bounds;
  std::vector<std::size_t> counts;
  /// Grid used instead of `counts` when the run asks for full scale.
  std::optional<std::vector<std::size_t>> full_scale_counts;
  MagnitudeMode mode = MagnitudeMode::Density;
  double q_max = 1.0;
  /// Rescale magnitudes so the mesh carries the same total charge as the
  /// particles.
  bool neutralize = true;
  /// Magnitude cache file, relative to the output directory if not absolute.
  std::optional<std::string> cache;
};

struct MHRequest {
  long n_samples = 100000;
  Vector proposal_std = Vector::Ones(1);
  Vector init;
  double burn_in = 0.2;
};

struct LMCRequest {
  double a = 0.01;
  double b = 1.0;
  double c = 0.55;
  long n_iterations = 10000;
  Index particles = 400;
  Box init_box;
};

struct MetricRequest {
  bool avg_nll = true;
  /// Position CSV whose final snapshot serves as MMD reference samples.
  std::optional<std::string> mmd_reference;
};

/// Everything one experiment needs; serialises back to a self-contained JSON
/// document that reproduces the run.
struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::string target_id;
  nlohmann::json target_params = nlohmann::json::object();
  MeshConfig mesh;
  SamplerConfig sampler;
  std::optional<MHRequest> mh;
  std::optional<LMCRequest> lmc;
  MetricRequest metrics;
  bool full_scale = false;
  /// Directory relative data paths are resolved against.
  std::filesystem::path base_dir;

  /// Mesh counts after applying the full-scale switch.
  std::vector<std::size_t> effective_counts() const;
};

/// Parses and validates a config document. Unknown keys, wrong types and
/// out-of-range values throw ConfigError naming the field path.
ExperimentConfig parse_experiment(const nlohmann::json &doc,
                                  const std::filesystem::path &base_dir);

/// Reads a JSON file; a missing file throws DataError, malformed JSON throws
/// ConfigError.
ExperimentConfig load_experiment(const std::filesystem::path &path);

/// Fully resolved config (defaults filled in, overrides applied).
nlohmann::json to_json(const ExperimentConfig &config);

struct ExperimentOutcome {
  bool ok = true;
  std::string error;
  std::vector<std::string> warnings;
};

/// Runs the experiment and writes positions.csv, diagnostics.jsonl,
/// metrics.jsonl, resolved_config.json, optional baseline CSVs and
/// manifest.json into `out_dir`. Runtime failures are caught, recorded in the
/// manifest with status "failed" and reported in the outcome.
ExperimentOutcome run_experiment(const ExperimentConfig &config,
                                 const std::filesystem::path &out_dir);

} // namespace eparvi
