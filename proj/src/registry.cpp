#include "eparvi/registry.hpp"

#include "eparvi/error.hpp"

#include <sstream>

#ifndef EPARVI_DATA_DIR
#define EPARVI_DATA_DIR "data"
#endif

namespace eparvi {

namespace {

using nlohmann::json;

const std::vector<TargetInfo> &build_catalog() {
  static const std::vector<TargetInfo> catalog = {
      {"gaussian_unimodal", 2, DensityKind::Density, true,
       "N((0.5, 0.5), 0.05 I)", {}},
      {"gaussian_bimodal", 2, DensityKind::Density, true,
       "0.7 N((0,0), S1) + 0.3 N((4,4), S2) with unit variances and "
       "correlations -0.5 / +0.5",
       {}},
      {"moon", 2, DensityKind::Density, true, "crescent, unnormalised", {}},
      {"double_banana", 2, DensityKind::Density, true,
       "two bananas on the circle x1^2 + x2^2 = 3, unnormalised", {}},
      {"wave", 2, DensityKind::Density, true,
       "ridge along x2 = sin(pi x1 / 2), unnormalised", {}},
      {"neals_funnel", 2, DensityKind::Density, true,
       "N(x2 | 0, sigma^2) N(x1 | 0, exp(x2 / 2))",
       {{"sigma", "number", 3.0, "scale of the neck variable x2"}}},
      {"bayesian_logistic_regression", 4, DensityKind::LogDensity, true,
       "logistic regression posterior on standardised Iris, setosa vs rest",
       {{"data", "string", "iris.csv", "CSV: features then a 0/1 label"},
        {"alpha", "number", 1.0, "prior variance of each weight"},
        {"train_fraction", "number", 0.7, "share of rows used for training"},
        {"split_seed", "number", 20240101, "shuffle seed of the split"}}},
      {"lotka_volterra", 4, DensityKind::LogDensity, false,
       "predator-prey ODE posterior over (a, b, c, d) given pelt counts",
       {{"data", "string", "hudson_bay_lynx_hare.csv",
         "CSV with columns year,hare,lynx"},
        {"sigma", "number", 0.25, "log-normal observation noise"},
        {"step", "number", 0.01, "RK4 step in years"}}},
      {"uniform_box", 0, DensityKind::Density, false,
       "constant density on a box; dimension follows the box",
       {{"box", "box", json::array({json::array({0.0, 1.0}),
                                    json::array({0.0, 1.0})}),
         "list of [low, high] intervals"}}},
  };
  return catalog;
}

// Parameters merged over defaults, with unknown keys and type errors rejected.
json resolve_params(const TargetInfo &info, const json &given) {
  json out = json::object();
  for (const auto &p : info.params) {
    out[p.name] = p.default_value;
  }
  if (given.is_null()) {
    return out;
  }
  if (!given.is_object()) {
    throw ConfigError("target.params", "must be an object");
  }
  for (const auto &[key, value] : given.items()) {
    const ParamSpec *spec = nullptr;
    for (const auto &p : info.params) {
      if (p.name == key) {
        spec = &p;
      }
    }
    const std::string field = "target.params." + key;
    if (spec == nullptr) {
      throw ConfigError(field, "unknown parameter for '" + info.id + "'");
    }
    if ((spec->type == "number" && !value.is_number()) ||
        (spec->type == "string" && !value.is_string()) ||
        (spec->type == "box" && !value.is_array())) {
      throw ConfigError(field, "expected a " + spec->type);
    }
    out[key] = value;
  }
  return out;
}

double positive(const json &params, const std::string &name) {
  const double v = params.at(name).get<double>();
  if (!(v > 0.0)) {
    throw ConfigError("target.params." + name, "must be positive");
  }
  return v;
}

Box parse_box_param(const json &value) {
  Box box;
  for (const auto &iv : value) {
    if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() ||
        !iv[1].is_number()) {
      throw ConfigError("target.params.box", "each entry must be [low, high]");
    }
    box.push_back({iv[0].get<double>(), iv[1].get<double>()});
    if (!(box.back().high > box.back().low)) {
      throw ConfigError("target.params.box", "interval is empty");
    }
  }
  if (box.empty()) {
    throw ConfigError("target.params.box", "needs at least one interval");
  }
  return box;
}

} // namespace

const std::vector<TargetInfo> &target_catalog() { return build_catalog(); }

const TargetInfo &target_info(const std::string &id) {
  for (const auto &info : target_catalog()) {
    if (info.id == id) {
      return info;
    }
  }
  throw UnsupportedTargetError("unknown target '" + id + "'");
}

nlohmann::json catalog_json() {
  json out = json::array();
  for (const auto &info : target_catalog()) {
    json params = json::array();
    for (const auto &p : info.params) {
      params.push_back({{"name", p.name},
                        {"type", p.type},
                        {"default", p.default_value},
                        {"description", p.description}});
    }
    out.push_back({{"id", info.id},
                   {"dimension", info.dimension},
                   {"kind", info.kind == DensityKind::Density ? "density"
                                                              : "log_density"},
                   {"gradient", info.has_gradient},
                   {"description", info.description},
                   {"params", params}});
  }
  return out;
}

std::string catalog_text() {
  std::ostringstream os;
  for (const auto &info : target_catalog()) {
    os << info.id << "  dim="
       << (info.dimension > 0 ? std::to_string(info.dimension) : "box")
       << "  kind="
       << (info.kind == DensityKind::Density ? "density" : "log_density")
       << "  gradient=" << (info.has_gradient ? "yes" : "no") << "\n    "
       << info.description << "\n";
    for (const auto &p : info.params) {
      os << "    " << p.name << " (" << p.type
         << ", default " << p.default_value.dump() << "): " << p.description
         << "\n";
    }
  }
  return os.str();
}

std::filesystem::path resolve_data_path(const std::string &name,
                                        const std::filesystem::path &base_dir) {
  const std::filesystem::path p(name);
  if (p.is_absolute()) {
    if (std::filesystem::exists(p)) {
      return p;
    }
    throw DataError("data file not found: " + name);
  }
  for (const auto &dir : {base_dir, std::filesystem::current_path(),
                          std::filesystem::path(EPARVI_DATA_DIR)}) {
    const auto candidate = dir / p;
    if (!dir.empty() && std::filesystem::exists(candidate)) {
      return candidate;
    }
  }
  throw DataError("data file not found: " + name);
}

DatasetSplit load_blr_split(const nlohmann::json &params,
                            const std::filesystem::path &base_dir) {
  const json p = resolve_params(target_info("bayesian_logistic_regression"), params);
  LogisticDataset data =
      load_logistic_csv(resolve_data_path(p.at("data").get<std::string>(), base_dir));
  standardize(data);
  const double split_seed = p.at("split_seed").get<double>();
  if (!(split_seed >= 0.0)) {
    throw ConfigError("target.params.split_seed", "must be non-negative");
  }
  return split_dataset(data, p.at("train_fraction").get<double>(),
                       static_cast<std::uint64_t>(split_seed));
}

std::unique_ptr<TargetDensity> make_target(const std::string &id,
                                           const nlohmann::json &params,
                                           const std::filesystem::path &base_dir) {
  const TargetInfo &info = target_info(id);
  const json p = resolve_params(info, params);
  if (id == "gaussian_unimodal") {
    return make_gaussian_unimodal();
  }
  if (id == "gaussian_bimodal") {
    return make_gaussian_bimodal();
  }
  if (id == "moon") {
    return std::make_unique<ShapeTarget>(ShapeTarget::Shape::Moon);
  }
  if (id == "double_banana") {
    return std::make_unique<ShapeTarget>(ShapeTarget::Shape::DoubleBanana);
  }
  if (id == "wave") {
    return std::make_unique<ShapeTarget>(ShapeTarget::Shape::Wave);
  }
  if (id == "neals_funnel") {
    return std::make_unique<NealsFunnelTarget>(positive(p, "sigma"));
  }
  if (id == "bayesian_logistic_regression") {
    DatasetSplit split = load_blr_split(params, base_dir);
    return std::make_unique<BlrTarget>(std::move(split.train),
                                       positive(p, "alpha"));
  }
  if (id == "lotka_volterra") {
    LVModel model =
        load_lv_model(resolve_data_path(p.at("data").get<std::string>(), base_dir));
    model.sigma = positive(p, "sigma");
    model.step = positive(p, "step");
    return std::make_unique<LotkaVolterraTarget>(std::move(model));
  }
  if (id == "uniform_box") {
    return std::make_unique<UniformBoxTarget>(parse_box_param(p.at("box")));
  }
  throw UnsupportedTargetError("unknown target '" + id + "'");
}

} // namespace eparvi
