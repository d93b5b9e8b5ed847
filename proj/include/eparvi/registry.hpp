#pragma once

#include "eparvi/logistic_regression.hpp"
#include "eparvi/lotka_volterra.hpp"
#include "eparvi/targets.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace eparvi {

struct ParamSpec {
  std::string name;
  /// "number", "string" or "box".
  std::string type;
  nlohmann::json default_value;
  std::string description;
};

struct TargetInfo {
  std::string id;
  Index dimension = 0;
  DensityKind kind = DensityKind::Density;
  bool has_gradient = false;
  std::string description;
  std::vector<ParamSpec> params;
};

/// Every built-in target, in a fixed order.
const std::vector<TargetInfo> &target_catalog();

/// Throws UnsupportedTargetError for an unknown id.
const TargetInfo &target_info(const std::string &id);

nlohmann::json catalog_json();
std::string catalog_text();

/// Resolves a data file: absolute paths as given, relative ones against
/// `base_dir`, then the working directory, then the bundled data directory.
/// Throws DataError if none exists.
std::filesystem::path resolve_data_path(const std::string &name,
                                        const std::filesystem::path &base_dir);

/// Builds a target from its id and parameter object. Unknown parameters and
/// wrongly typed values throw ConfigError naming "target.params.<name>".
std::unique_ptr<TargetDensity> make_target(const std::string &id,
                                           const nlohmann::json &params,
                                           const std::filesystem::path &base_dir);

/// The standardised, split Iris data behind the logistic-regression target.
DatasetSplit load_blr_split(const nlohmann::json &params,
                            const std::filesystem::path &base_dir);

} // namespace eparvi
