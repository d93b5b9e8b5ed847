#include "eparvi/experiment.hpp"

#include "eparvi/artifacts.hpp"
#include "eparvi/error.hpp"
#include "eparvi/logistic_regression.hpp"
#include "eparvi/metrics.hpp"
#include "eparvi/registry.hpp"
#include "eparvi/targets.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

namespace eparvi {

namespace {

using nlohmann::json;

// Typed access to one JSON object that rejects unknown keys on finish().
class Section {
public:
  Section(const json &doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) {
      throw ConfigError(path_, "must be an object");
    }
  }

  std::string field(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string &key) {
    used_.insert(key);
    return doc_.contains(key) && !doc_.at(key).is_null();
  }

  const json &raw(const std::string &key) {
    used_.insert(key);
    return doc_.at(key);
  }

  double number(const std::string &key, double fallback) {
    if (!has(key)) {
      return fallback;
    }
    const json &v = doc_.at(key);
    if (!v.is_number()) {
      throw ConfigError(field(key), "expected a number");
    }
    return v.get<double>();
  }

  long integer(const std::string &key, long fallback) {
    if (!has(key)) {
      return fallback;
    }
    const json &v = doc_.at(key);
    if (!v.is_number_integer()) {
      throw ConfigError(field(key), "expected an integer");
    }
    return v.get<long>();
  }

  bool boolean(const std::string &key, bool fallback) {
    if (!has(key)) {
      return fallback;
    }
    const json &v = doc_.at(key);
    if (!v.is_boolean()) {
      throw ConfigError(field(key), "expected true or false");
    }
    return v.get<bool>();
  }

  std::string string(const std::string &key, const std::string &fallback) {
    if (!has(key)) {
      return fallback;
    }
    const json &v = doc_.at(key);
    if (!v.is_string()) {
      throw ConfigError(field(key), "expected a string");
    }
    return v.get<std::string>();
  }

  /// A number or an array of numbers.
  Vector vector(const std::string &key, const Vector &fallback) {
    if (!has(key)) {
      return fallback;
    }
    const json &v = doc_.at(key);
    if (v.is_number()) {
      return Vector::Constant(1, v.get<double>());
    }
    if (!v.is_array() || v.empty()) {
      throw ConfigError(field(key), "expected a number or a non-empty array");
    }
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(field(key), "entry " + std::to_string(i) +
                                          " is not a number");
      }
      out[static_cast<Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  Box box(const std::string &key) {
    const json &v = raw(key);
    if (!v.is_array() || v.empty()) {
      throw ConfigError(field(key), "expected a list of [low, high] pairs");
    }
    Box out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json &iv = v[i];
      if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() ||
          !iv[1].is_number()) {
        throw ConfigError(field(key), "entry " + std::to_string(i) +
                                          " is not [low, high]");
      }
      out.push_back({iv[0].get<double>(), iv[1].get<double>()});
      if (!(out.back().high > out.back().low) ||
          !std::isfinite(out.back().low) || !std::isfinite(out.back().high)) {
        throw ConfigError(field(key), "entry " + std::to_string(i) +
                                          " needs finite low < high");
      }
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string &key) {
    const json &v = raw(key);
    if (!v.is_array() || v.empty()) {
      throw ConfigError(field(key), "expected a list of integers");
    }
    std::vector<std::size_t> out;
    for (const auto &c : v) {
      if (!c.is_number_integer() || c.get<long>() < 2) {
        throw ConfigError(field(key), "every count must be an integer >= 2");
      }
      out.push_back(c.get<std::size_t>());
    }
    return out;
  }

  void finish() const {
    for (const auto &[key, value] : doc_.items()) {
      if (!used_.contains(key)) {
        throw ConfigError(field(key), "unknown key");
      }
    }
  }

private:
  const json &doc_;
  std::string path_;
  std::set<std::string> used_;
};

json vector_json(const Vector &v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

json box_json(const Box &box) {
  json out = json::array();
  for (const auto &iv : box) {
    out.push_back({iv.low, iv.high});
  }
  return out;
}

UpdateRule parse_rule(Section s) {
  UpdateRule rule;
  rule.kind = update_kind_from_string(s.string("kind", "euler"));
  rule.tau = s.vector("tau", rule.tau);
  rule.dt2 = s.vector("dt2", rule.dt2);
  rule.tau_prime = s.vector("tau_prime", rule.tau_prime);
  s.finish();
  return rule;
}

AnnealingSchedule parse_annealing(Section s) {
  const std::string kind = s.string("kind", "constant");
  AnnealingSchedule out;
  if (kind == "geometric") {
    out = AnnealingSchedule::geometric(s.number("gamma", 1.0),
                                       s.number("floor", 0.1));
  } else if (kind == "explicit") {
    const Vector v = s.vector("values", Vector());
    out = AnnealingSchedule::explicit_values(
        std::vector<double>(v.data(), v.data() + v.size()));
  } else if (kind != "constant") {
    throw ConfigError(s.field("kind"), "expected constant, geometric or explicit");
  }
  s.finish();
  return out;
}

json annealing_json(const json &given) {
  return given.is_null() ? json{{"kind", "constant"}} : given;
}

InitSpec parse_init(Section s, const Box &mesh_bounds) {
  InitSpec init;
  const std::string kind = s.string("kind", "uniform");
  if (kind == "uniform") {
    init.kind = InitSpec::Kind::Uniform;
    init.box = s.has("box") ? s.box("box") : mesh_bounds;
    init.allow_overflow = s.boolean("allow_overflow", false);
  } else if (kind == "gaussian") {
    init.kind = InitSpec::Kind::Gaussian;
    const auto d = static_cast<Index>(mesh_bounds.size());
    init.mean = s.vector("mean", Vector::Zero(d));
    init.stddev = s.vector("stddev", Vector::Ones(d));
    if (init.mean.size() == 1 && d > 1) {
      init.mean = Vector::Constant(d, init.mean[0]);
    }
    if (init.stddev.size() == 1 && d > 1) {
      init.stddev = Vector::Constant(d, init.stddev[0]);
    }
  } else {
    throw ConfigError(s.field("kind"), "expected uniform or gaussian");
  }
  s.finish();
  return init;
}

// Draws LMC starting points uniformly on a box, one stream per particle.
PointSet uniform_points(const Box &box, Index n, std::uint64_t seed) {
  PointSet out(n, static_cast<Index>(box.size()));
  for (Index j = 0; j < n; ++j) {
    auto rng = make_stream(seed, StreamTag::Langevin, static_cast<std::uint64_t>(j),
                           std::uint64_t{1} << 32);
    for (std::size_t k = 0; k < box.size(); ++k) {
      std::uniform_real_distribution<double> u(box[k].low, box[k].high);
      out(j, static_cast<Index>(k)) = u(rng);
    }
  }
  return out;
}

json stats_json(const PointSet &pts) {
  if (pts.rows() == 0) {
    return {{"mean", nullptr}, {"std", nullptr}};
  }
  const Vector mean = pts.colwise().mean().transpose();
  Vector sd = Vector::Zero(pts.cols());
  if (pts.rows() > 1) {
    sd = ((pts.rowwise() - mean.transpose()).array().square().colwise().sum() /
          static_cast<double>(pts.rows() - 1))
             .sqrt()
             .transpose();
  }
  return {{"mean", vector_json(mean)}, {"std", vector_json(sd)}};
}

struct MetricContext {
  const TargetDensity *target = nullptr;
  const PointSet *reference = nullptr;
  const DatasetSplit *blr = nullptr;
  unsigned workers = 1;
};

// Metrics on a finished sample set. `samples` are already region-filtered
// where that applies.
json sample_metrics(const PointSet &samples, const MetricContext &ctx,
                    bool want_nll) {
  json m = stats_json(samples);
  m["n_x"] = samples.rows();
  if (samples.rows() == 0) {
    return m;
  }
  if (want_nll) {
    try {
      const NllResult nll = avg_nll(samples, *ctx.target);
      m["avg_nll"] = nll.value;
      m["n_invalid"] = nll.n_invalid;
    } catch (const MetricError &e) {
      m["avg_nll"] = nullptr;
      m["avg_nll_error"] = e.what();
    }
  }
  if (ctx.reference != nullptr) {
    m["mmd2"] = mmd_squared(samples, *ctx.reference, ctx.workers);
    m["n_y"] = ctx.reference->rows();
  }
  if (ctx.blr != nullptr) {
    const Vector w = samples.colwise().mean().transpose();
    m["test_accuracy"] = classification_accuracy(w, ctx.blr->test);
    m["train_accuracy"] = classification_accuracy(w, ctx.blr->train);
  }
  return m;
}

json lv_map_report(const ChargeMesh &mesh, const TargetDensity &target) {
  const auto refs = target.reference_values();
  const std::size_t flat = mesh.argmax_magnitude();
  const auto idx = mesh.grid_index(flat);
  const char *names[] = {"map_a", "map_b", "map_c", "map_d"};
  json argmax = json::array();
  json reported = json::array();
  json offsets = json::array();
  bool within = true;
  for (std::size_t k = 0; k < 4; ++k) {
    const double ref = refs.at(names[k]);
    argmax.push_back(mesh.point(flat)[static_cast<Index>(k)]);
    reported.push_back(ref);
    const long off = static_cast<long>(idx[k]) -
                     static_cast<long>(mesh.nearest_axis_index(k, ref));
    offsets.push_back(off);
    within = within && std::labs(off) <= 1;
  }
  json counts = json::array();
  for (auto c : mesh.counts()) {
    counts.push_back(c);
  }
  return {{"grid_counts", counts},
          {"grid_argmax", argmax},
          {"reported_map", reported},
          {"cell_offset", offsets},
          {"within_one_cell", within},
          {"note",
           "MAP-on-mesh depends on the observation file; the bundled file is "
           "the Hudson Bay Company hare/lynx pelt record 1900-1920, which may "
           "differ from the data behind the reported MAP"}};
}

} // namespace

std::vector<std::size_t> ExperimentConfig::effective_counts() const {
  if (full_scale && mesh.full_scale_counts) {
    return *mesh.full_scale_counts;
  }
  return mesh.counts;
}

ExperimentConfig parse_experiment(const nlohmann::json &doc,
                                  const std::filesystem::path &base_dir) {
  Section root(doc, "");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.name = root.string("name", "experiment");
  const long seed = root.integer("seed", 0);
  if (seed < 0) {
    throw ConfigError("seed", "must be non-negative");
  }
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.full_scale = root.boolean("full_scale", false);

  if (!root.has("target")) {
    throw ConfigError("target", "required");
  }
  {
    Section t(root.raw("target"), "target");
    if (!t.has("id")) {
      throw ConfigError("target.id", "required");
    }
    cfg.target_id = t.string("id", "");
    if (t.has("params")) {
      cfg.target_params = t.raw("params");
    }
    t.finish();
  }

  if (!root.has("mesh")) {
    throw ConfigError("mesh", "required");
  }
  {
    Section m(root.raw("mesh"), "mesh");
    if (!m.has("bounds") || !m.has("counts")) {
      throw ConfigError("mesh", "bounds and counts are required");
    }
    cfg.mesh.bounds = m.box("bounds");
    cfg.mesh.counts = m.counts("counts");
    if (m.has("full_scale_counts")) {
      cfg.mesh.full_scale_counts = m.counts("full_scale_counts");
      if (cfg.mesh.full_scale_counts->size() != cfg.mesh.bounds.size()) {
        throw ConfigError("mesh.full_scale_counts", "one count per bound");
      }
    }
    if (cfg.mesh.counts.size() != cfg.mesh.bounds.size()) {
      throw ConfigError("mesh.counts", "one count per bound");
    }
    try {
      cfg.mesh.mode = magnitude_mode_from_string(m.string("mode", "density"));
    } catch (const Error &e) {
      throw ConfigError("mesh.mode", e.what());
    }
    cfg.mesh.q_max = m.number("q_max", 1.0);
    if (!(cfg.mesh.q_max > 0.0)) {
      throw ConfigError("mesh.q_max", "must be positive");
    }
    cfg.mesh.neutralize = m.boolean("neutralize", true);
    if (m.has("cache")) {
      cfg.mesh.cache = m.string("cache", "");
    }
    m.finish();
  }

  const auto dim = static_cast<Index>(cfg.mesh.bounds.size());
  json sampler_doc = root.has("sampler") ? root.raw("sampler") : json::object();
  {
    Section s(sampler_doc, "sampler");
    SamplerConfig &sc = cfg.sampler;
    sc.particles = s.integer("particles", 400);
    sc.iterations = s.integer("iterations", 100);
    if (s.has("rule")) {
      sc.rule = parse_rule(Section(s.raw("rule"), "sampler.rule"));
    }
    sc.normalize_forces = s.boolean("normalize_forces", true);
    if (s.has("perturbation")) {
      Section p(s.raw("perturbation"), "sampler.perturbation");
      sc.perturbation.sigma = p.number("sigma", 0.0);
      sc.perturbation.period_k = p.integer("period_k", 1);
      p.finish();
    }
    sc.mh_filter = s.boolean("mh_filter", false);
    if (s.has("annealing")) {
      sc.annealing = parse_annealing(Section(s.raw("annealing"), "sampler.annealing"));
    }
    sc.init = parse_init(s.has("init") ? Section(s.raw("init"), "sampler.init")
                                       : Section(json::object(), "sampler.init"),
                         cfg.mesh.bounds);
    sc.neg_charge = s.number("neg_charge", 1.0);
    sc.snapshot_stride = s.integer("snapshot_stride", 5);
    sc.sequential_filter = s.boolean("sequential_filter", false);
    sc.min_distance_factor = s.number("min_distance_factor", 1e-9);
    const long workers = s.integer("workers", 1);
    if (workers < 0) {
      throw ConfigError("sampler.workers", "must be >= 0");
    }
    sc.workers = static_cast<unsigned>(workers);
    s.finish();
    sc.seed = cfg.seed;
    sc.validate(dim, cfg.mesh.bounds);
  }

  if (root.has("baselines")) {
    Section b(root.raw("baselines"), "baselines");
    if (b.has("mh")) {
      Section m(b.raw("mh"), "baselines.mh");
      MHRequest r;
      r.n_samples = m.integer("n_samples", r.n_samples);
      r.proposal_std = m.vector("proposal_std", r.proposal_std);
      r.init = m.vector("init", Vector::Zero(dim));
      r.burn_in = m.number("burn_in", r.burn_in);
      m.finish();
      MHConfig check{r.n_samples, r.proposal_std, r.init, cfg.seed, r.burn_in};
      check.validate(dim);
      cfg.mh = r;
    }
    if (b.has("lmc")) {
      Section l(b.raw("lmc"), "baselines.lmc");
      LMCRequest r;
      r.a = l.number("a", r.a);
      r.b = l.number("b", r.b);
      r.c = l.number("c", r.c);
      r.n_iterations = l.integer("n_iterations", r.n_iterations);
      r.particles = l.integer("particles", r.particles);
      r.init_box = l.has("init_box") ? l.box("init_box") : cfg.mesh.bounds;
      l.finish();
      if (static_cast<Index>(r.init_box.size()) != dim) {
        throw ConfigError("baselines.lmc.init_box", "one interval per dimension");
      }
      if (r.particles < 1) {
        throw ConfigError("baselines.lmc.particles", "must be at least 1");
      }
      LMCConfig check{r.a, r.b, r.c, r.n_iterations, PointSet::Zero(1, dim), 0, 1};
      check.validate();
      cfg.lmc = r;
    }
    b.finish();
  }

  if (root.has("metrics")) {
    Section m(root.raw("metrics"), "metrics");
    cfg.metrics.avg_nll = m.boolean("avg_nll", true);
    if (m.has("mmd_reference")) {
      cfg.metrics.mmd_reference = m.string("mmd_reference", "");
    }
    m.finish();
  }
  root.finish();

  // Building the target checks its id, parameters and data files.
  std::unique_ptr<TargetDensity> target;
  try {
    target = make_target(cfg.target_id, cfg.target_params, base_dir);
  } catch (const ConfigError &) {
    throw;
  } catch (const UnsupportedTargetError &e) {
    throw ConfigError("target.id", e.what());
  }
  if (target->dimension() != dim) {
    throw ConfigError("mesh.bounds", "target '" + cfg.target_id + "' has dimension " +
                                         std::to_string(target->dimension()) +
                                         ", mesh has " + std::to_string(dim));
  }
  if (cfg.lmc && !target->has_gradient()) {
    throw ConfigError("baselines.lmc", "target '" + cfg.target_id +
                                           "' provides no gradient");
  }
  if (cfg.metrics.mmd_reference) {
    resolve_data_path(*cfg.metrics.mmd_reference, base_dir);
  }
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("config file not found: " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception &e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  return parse_experiment(doc, std::filesystem::absolute(path).parent_path());
}

nlohmann::json to_json(const ExperimentConfig &c) {
  const SamplerConfig &s = c.sampler;
  json rule = {{"kind", to_string(s.rule.kind)},
               {"tau", vector_json(s.rule.tau)},
               {"dt2", vector_json(s.rule.dt2)},
               {"tau_prime", vector_json(s.rule.tau_prime)}};
  json init;
  if (s.init.kind == InitSpec::Kind::Uniform) {
    init = {{"kind", "uniform"},
            {"box", box_json(s.init.box)},
            {"allow_overflow", s.init.allow_overflow}};
  } else {
    init = {{"kind", "gaussian"},
            {"mean", vector_json(s.init.mean)},
            {"stddev", vector_json(s.init.stddev)}};
  }
  json counts = json::array();
  for (auto n : c.mesh.counts) {
    counts.push_back(n);
  }
  json mesh = {{"bounds", box_json(c.mesh.bounds)},
               {"counts", counts},
               {"mode", to_string(c.mesh.mode)},
               {"q_max", c.mesh.q_max},
               {"neutralize", c.mesh.neutralize}};
  if (c.mesh.full_scale_counts) {
    mesh["full_scale_counts"] = *c.mesh.full_scale_counts;
  }
  if (c.mesh.cache) {
    mesh["cache"] = *c.mesh.cache;
  }
  json annealing;
  if (s.annealing.is_constant()) {
    annealing = {{"kind", "constant"}};
  } else {
    // The schedule is opaque; record its per-iteration multipliers.
    json values = json::array();
    for (long t = 0; t <= s.iterations; ++t) {
      values.push_back(s.annealing.multiplier(t));
    }
    annealing = {{"kind", "explicit"}, {"values", values}};
  }
  json out = {
      {"name", c.name},
      {"seed", c.seed},
      {"full_scale", c.full_scale},
      {"target", {{"id", c.target_id}, {"params", c.target_params}}},
      {"mesh", mesh},
      {"sampler",
       {{"particles", s.particles},
        {"iterations", s.iterations},
        {"rule", rule},
        {"normalize_forces", s.normalize_forces},
        {"perturbation",
         {{"sigma", s.perturbation.sigma}, {"period_k", s.perturbation.period_k}}},
        {"mh_filter", s.mh_filter},
        {"annealing", annealing_json(annealing)},
        {"init", init},
        {"neg_charge", s.neg_charge},
        {"snapshot_stride", s.snapshot_stride},
        {"sequential_filter", s.sequential_filter},
        {"min_distance_factor", s.min_distance_factor},
        {"workers", s.workers}}},
      {"metrics", {{"avg_nll", c.metrics.avg_nll}}},
  };
  if (c.metrics.mmd_reference) {
    out["metrics"]["mmd_reference"] = *c.metrics.mmd_reference;
  }
  json baselines = json::object();
  if (c.mh) {
    baselines["mh"] = {{"n_samples", c.mh->n_samples},
                       {"proposal_std", vector_json(c.mh->proposal_std)},
                       {"init", vector_json(c.mh->init)},
                       {"burn_in", c.mh->burn_in}};
  }
  if (c.lmc) {
    baselines["lmc"] = {{"a", c.lmc->a},
                        {"b", c.lmc->b},
                        {"c", c.lmc->c},
                        {"n_iterations", c.lmc->n_iterations},
                        {"particles", c.lmc->particles},
                        {"init_box", box_json(c.lmc->init_box)}};
  }
  if (!baselines.empty()) {
    out["baselines"] = baselines;
  }
  return out;
}

ExperimentOutcome run_experiment(const ExperimentConfig &config,
                                 const std::filesystem::path &out_dir) {
  using Clock = std::chrono::steady_clock;
  std::filesystem::create_directories(out_dir);
  ExperimentOutcome outcome;
  std::vector<std::string> files = {"resolved_config.json"};
  json extra = {{"name", config.name},
                {"seed", config.seed},
                {"target", config.target_id}};
  {
    std::ofstream rc(out_dir / "resolved_config.json");
    rc << to_json(config).dump(2) << "\n";
  }

  std::vector<json> metric_lines;
  try {
    const auto target = make_target(config.target_id, config.target_params,
                                    config.base_dir);
    const unsigned workers = config.sampler.workers;

    std::optional<DatasetSplit> blr;
    if (config.target_id == "bayesian_logistic_regression") {
      blr = load_blr_split(config.target_params, config.base_dir);
    }
    std::optional<PointSet> reference;
    if (config.metrics.mmd_reference) {
      reference = read_positions_csv(resolve_data_path(*config.metrics.mmd_reference,
                                                       config.base_dir))
                      .final_positions();
    }
    MetricContext ctx{target.get(), reference ? &*reference : nullptr,
                      blr ? &*blr : nullptr, workers};

    // Mesh, from cache when one matches.
    const auto mesh_start = Clock::now();
    MagnitudeSpec spec;
    spec.mode = config.mesh.mode;
    spec.q_max = config.mesh.q_max;
    spec.workers = workers;
    if (config.mesh.neutralize) {
      spec.total_charge =
          static_cast<double>(config.sampler.particles) * config.sampler.neg_charge;
    }
    MeshCacheKey key{config.target_id, config.mesh.bounds, config.effective_counts(),
                     spec.mode, spec.q_max, spec.total_charge};
    std::optional<ChargeMesh> cached;
    std::filesystem::path cache_path;
    if (config.mesh.cache) {
      cache_path = *config.mesh.cache;
      if (cache_path.is_relative()) {
        cache_path = out_dir / cache_path;
      }
      cached = load_mesh_cache(cache_path, key);
    }
    ChargeMesh mesh = cached ? std::move(*cached)
                             : ChargeMesh::build(config.mesh.bounds,
                                                 config.effective_counts());
    if (!cached) {
      assign_magnitudes(mesh, *target, spec);
      if (config.mesh.cache) {
        save_mesh_cache(cache_path, key, mesh);
      }
    }
    extra["mesh"] = {{"points", mesh.size()},
                     {"q_scale", mesh.q_scale()},
                     {"total_charge", mesh.total_charge()},
                     {"from_cache", cached.has_value()},
                     {"seconds",
                      std::chrono::duration<double>(Clock::now() - mesh_start).count()}};
    if (config.target_id == "lotka_volterra") {
      extra["lv_map"] = lv_map_report(mesh, *target);
    }

    // EParVI run.
    const auto run_start = Clock::now();
    RunResult result = run(config.sampler, mesh, *target);
    const double run_seconds =
        std::chrono::duration<double>(Clock::now() - run_start).count();
    outcome.warnings = result.record.warnings;

    write_positions_csv(out_dir / "positions.csv", result.record.snapshots);
    files.push_back("positions.csv");

    std::vector<json> diag_lines;
    double cumulative = 0.0;
    std::size_t snap = 0;
    for (const auto &d : result.record.diagnostics) {
      cumulative += d.wall_time_s;
      json line = {{"iteration", d.iteration},
                   {"max_force_norm", d.max_force_norm},
                   {"mean_force_norm", d.mean_force_norm},
                   {"inside", d.inside},
                   {"mean_displacement", d.mean_displacement},
                   {"acceptance_rate", d.acceptance_rate},
                   {"anneal_multiplier", d.anneal_multiplier},
                   {"wall_time_s", d.wall_time_s},
                   {"cumulative_time_s", cumulative}};
      while (snap < result.record.snapshots.size() &&
             result.record.snapshots[snap].iteration < d.iteration) {
        ++snap;
      }
      if (snap < result.record.snapshots.size() &&
          result.record.snapshots[snap].iteration == d.iteration) {
        const FilterResult f = filter_in_region(
            result.record.snapshots[snap].positions, mesh.bounds());
        MetricContext light = ctx;
        light.blr = nullptr;
        const json m = sample_metrics(f.kept, light, config.metrics.avg_nll);
        for (const char *k : {"avg_nll", "mmd2"}) {
          if (m.contains(k)) {
            line[k] = m[k];
          }
        }
      }
      diag_lines.push_back(std::move(line));
    }
    write_jsonl(out_dir / "diagnostics.jsonl", diag_lines);
    files.push_back("diagnostics.jsonl");

    const FilterResult kept = filter_in_region(result.ensemble.positions, mesh.bounds());
    if (kept.empty) {
      outcome.warnings.push_back("no particle ended inside the mesh region");
    }
    json eparvi_metrics = sample_metrics(kept.kept, ctx, config.metrics.avg_nll);
    eparvi_metrics["method"] = "eparvi";
    eparvi_metrics["iteration"] = config.sampler.iterations;
    eparvi_metrics["n_discarded"] = kept.discarded;
    eparvi_metrics["runtime_s"] = run_seconds;
    metric_lines.push_back(eparvi_metrics);

    if (config.mh) {
      const auto start = Clock::now();
      MHConfig mc{config.mh->n_samples, config.mh->proposal_std, config.mh->init,
                  config.seed, config.mh->burn_in};
      const MHResult chain = metropolis_hastings(*target, mc);
      const double secs = std::chrono::duration<double>(Clock::now() - start).count();
      write_positions_csv(out_dir / "baseline_mh.csv", {{0, chain.samples}});
      files.push_back("baseline_mh.csv");
      json m = sample_metrics(chain.samples, ctx, config.metrics.avg_nll);
      m["method"] = "mh";
      m["acceptance_rate"] = chain.acceptance_rate;
      m["runtime_s"] = secs;
      metric_lines.push_back(m);
      for (const auto &w : chain.warnings) {
        outcome.warnings.push_back("mh: " + w);
      }
    }
    if (config.lmc) {
      const auto start = Clock::now();
      LMCConfig lc{config.lmc->a,
                   config.lmc->b,
                   config.lmc->c,
                   config.lmc->n_iterations,
                   uniform_points(config.lmc->init_box, config.lmc->particles,
                                  config.seed),
                   config.seed,
                   workers};
      const LMCResult lmc = langevin_evolve(*target, lc);
      const double secs = std::chrono::duration<double>(Clock::now() - start).count();
      write_positions_csv(out_dir / "baseline_lmc.csv",
                          {{0, lc.init}, {config.lmc->n_iterations, lmc.particles}});
      files.push_back("baseline_lmc.csv");
      const FilterResult f = filter_in_region(lmc.particles, mesh.bounds());
      json m = sample_metrics(f.kept, ctx, config.metrics.avg_nll);
      m["method"] = "lmc";
      m["n_discarded"] = f.discarded;
      m["runtime_s"] = secs;
      metric_lines.push_back(m);
    }
    extra["status"] = "complete";
  } catch (const std::exception &e) {
    outcome.ok = false;
    outcome.error = e.what();
    extra["status"] = "failed";
    extra["error"] = e.what();
  }
  try {
    write_jsonl(out_dir / "metrics.jsonl", metric_lines);
    files.push_back("metrics.jsonl");
  } catch (const std::exception &e) {
    outcome.ok = false;
    outcome.error += std::string("; ") + e.what();
  }
  extra["warnings"] = outcome.warnings;
  if (!outcome.ok) {
    extra["partial"] = true;
  }
  write_manifest(out_dir, files, extra);
  return outcome;
}

} // namespace eparvi
