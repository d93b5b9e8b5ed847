#include "eparvi/cli.hpp"

#include "eparvi/artifacts.hpp"
#include "eparvi/error.hpp"
#include "eparvi/experiment.hpp"
#include "eparvi/metrics.hpp"
#include "eparvi/registry.hpp"
#include "eparvi/targets.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <optional>

namespace eparvi {

namespace {

using nlohmann::json;

struct RunArgs {
  std::string config;
  std::string out;
  std::optional<long> seed;
  std::optional<unsigned> workers;
  std::optional<long> stride;
  bool full_scale = false;
};

struct MetricsArgs {
  std::string samples;
  std::string reference;
  std::string target;
  std::string target_params = "{}";
  std::string out;
};

struct ExportArgs {
  std::string run_dir;
  std::string out;
  int grid = 100;
  int bins = 30;
};

int cmd_run(const RunArgs &args, std::ostream &out, std::ostream &err) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(args.config);
    if (args.seed) {
      if (*args.seed < 0) {
        throw ConfigError("--seed", "must be non-negative");
      }
      cfg.seed = static_cast<std::uint64_t>(*args.seed);
      cfg.sampler.seed = cfg.seed;
    }
    if (args.workers) {
      cfg.sampler.workers = *args.workers;
    }
    if (args.stride) {
      if (*args.stride < 1) {
        throw ConfigError("--snapshot-stride", "must be at least 1");
      }
      cfg.sampler.snapshot_stride = *args.stride;
    }
    cfg.full_scale = cfg.full_scale || args.full_scale;
  } catch (const ConfigError &e) {
    err << "invalid config: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  const std::filesystem::path out_dir =
      args.out.empty() ? std::filesystem::path("runs") / cfg.name
                       : std::filesystem::path(args.out);
  const ExperimentOutcome outcome = run_experiment(cfg, out_dir);
  for (const auto &w : outcome.warnings) {
    err << "warning: " << w << "\n";
  }
  if (!outcome.ok) {
    err << "run failed: " << outcome.error << "\n";
    return kExitRuntime;
  }
  out << "wrote " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_list(bool as_json, std::ostream &out) {
  if (as_json) {
    out << catalog_json().dump(2) << "\n";
  } else {
    out << catalog_text();
  }
  return kExitOk;
}

int cmd_metrics(const MetricsArgs &args, std::ostream &out, std::ostream &err) {
  PositionTable samples;
  std::optional<PositionTable> reference;
  std::unique_ptr<TargetDensity> target;
  try {
    if (!std::filesystem::exists(args.samples)) {
      throw DataError("samples file not found: " + args.samples);
    }
    samples = read_positions_csv(args.samples);
    if (!args.reference.empty()) {
      if (!std::filesystem::exists(args.reference)) {
        throw DataError("reference file not found: " + args.reference);
      }
      reference = read_positions_csv(args.reference);
      if (reference->dimension != samples.dimension) {
        throw DataError("samples and reference differ in dimension");
      }
    }
    if (!args.target.empty()) {
      json params;
      try {
        params = json::parse(args.target_params);
      } catch (const json::exception &e) {
        throw ConfigError("--target-params", e.what());
      }
      target = make_target(args.target, params, std::filesystem::current_path());
      if (target->dimension() != samples.dimension) {
        throw DataError("samples have dimension " +
                        std::to_string(samples.dimension) + ", target has " +
                        std::to_string(target->dimension()));
      }
    }
    if (!reference && !target) {
      throw ConfigError("metrics", "give --reference and/or --target");
    }
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    const auto start = std::chrono::steady_clock::now();
    const PointSet &x = samples.final_positions();
    json report = {{"samples", args.samples}, {"n_x", x.rows()}};
    if (reference) {
      const PointSet &y = reference->final_positions();
      report["reference"] = args.reference;
      report["n_y"] = y.rows();
      report["mmd2"] = mmd_squared(x, y);
    }
    if (target) {
      const NllResult nll = avg_nll(x, *target);
      report["target"] = args.target;
      report["avg_nll"] = nll.value;
      report["n_invalid"] = nll.n_invalid;
    }
    report["runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    out << report.dump() << "\n";
    if (!args.out.empty()) {
      std::filesystem::create_directories(args.out);
      std::ofstream f(std::filesystem::path(args.out) / "metrics.jsonl",
                      std::ios::app);
      f << report.dump() << "\n";
    }
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_export(const ExportArgs &args, std::ostream &out, std::ostream &err) {
  const std::filesystem::path run_dir(args.run_dir);
  ExperimentConfig cfg;
  try {
    const auto bad = verify_manifest(run_dir);
    if (!bad.empty()) {
      std::string names;
      for (const auto &b : bad) {
        names += " " + b;
      }
      err << "manifest mismatch:" << names << "\n";
      return kExitRuntime;
    }
    cfg = load_experiment(run_dir / "resolved_config.json");
    if (args.grid < 2 || args.bins < 1) {
      throw ConfigError("--grid/--bins", "grid must be >= 2 and bins >= 1");
    }
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    const std::filesystem::path out_dir =
        args.out.empty() ? run_dir / "export" : std::filesystem::path(args.out);
    std::filesystem::create_directories(out_dir);
    const PositionTable table = read_positions_csv(run_dir / "positions.csv");
    const FilterResult kept =
        filter_in_region(table.final_positions(), cfg.mesh.bounds);

    json marginals = json::array();
    if (kept.kept.rows() >= 2) {
      const auto summaries =
          marginal_summaries(kept.kept, cfg.mesh.bounds, args.bins);
      for (const auto &s : summaries) {
        marginals.push_back({{"edges", s.edges},
                             {"counts", s.counts},
                             {"kde_grid", s.kde_grid},
                             {"kde_density", s.kde_density},
                             {"bandwidth", s.bandwidth}});
      }
    }
    std::ofstream(out_dir / "marginals.json")
        << json{{"iteration", table.snapshots.back().iteration},
                {"n", kept.kept.rows()},
                {"discarded", kept.discarded},
                {"dimensions", marginals}}
               .dump(2)
        << "\n";

    // Log-density on a grid over the first two axes; further axes are held
    // at the centre of their bounds.
    const auto target = make_target(cfg.target_id, cfg.target_params, cfg.base_dir);
    const Box &b = cfg.mesh.bounds;
    Vector x(static_cast<Index>(b.size()));
    for (std::size_t k = 0; k < b.size(); ++k) {
      x[static_cast<Index>(k)] = 0.5 * (b[k].low + b[k].high);
    }
    std::ofstream grid(out_dir / "density_grid.csv");
    grid << "x0,x1,log_density\n";
    const std::size_t ay = b.size() > 1 ? 1 : 0;
    for (int i = 0; i < args.grid; ++i) {
      x[0] = b[0].low + b[0].width() * i / (args.grid - 1);
      for (int j = 0; j < (b.size() > 1 ? args.grid : 1); ++j) {
        if (b.size() > 1) {
          x[1] = b[ay].low + b[ay].width() * j / (args.grid - 1);
        }
        const double lp = target->log_density(x);
        grid << x[0] << "," << (b.size() > 1 ? x[1] : 0.0) << ",";
        if (std::isfinite(lp)) {
          grid << lp;
        } else {
          grid << "nan";
        }
        grid << "\n";
      }
    }
    out << "wrote " << out_dir.string() << "\n";
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err) {
  CLI::App app{"Electrostatics particle sampler"};
  app.require_subcommand(1);

  RunArgs run_args;
  long seed = 0;
  unsigned workers = 0;
  long stride = 0;
  auto *run = app.add_subcommand("run", "run one experiment config");
  run->add_option("--config", run_args.config, "experiment JSON")->required();
  run->add_option("--out", run_args.out, "output directory");
  auto *seed_opt = run->add_option("--seed", seed, "override the master seed");
  auto *workers_opt =
      run->add_option("--workers", workers, "worker threads (0 = all cores)");
  auto *stride_opt =
      run->add_option("--snapshot-stride", stride, "iterations between snapshots");
  run->add_flag("--full-scale", run_args.full_scale,
                "use the config's full_scale_counts mesh");

  bool as_json = false;
  auto *list = app.add_subcommand("list-targets", "list built-in targets");
  list->add_flag("--json", as_json, "machine-readable output");

  MetricsArgs metrics_args;
  auto *metrics = app.add_subcommand("metrics", "MMD^2 and/or average NLL");
  metrics->add_option("--samples", metrics_args.samples, "position CSV")->required();
  metrics->add_option("--reference", metrics_args.reference,
                      "position CSV of reference samples");
  metrics->add_option("--target", metrics_args.target, "built-in target id");
  metrics->add_option("--target-params", metrics_args.target_params,
                      "target parameters as JSON");
  metrics->add_option("--out", metrics_args.out, "append the report here");

  ExportArgs export_args;
  auto *exp = app.add_subcommand(
      "export", "verify a run and write marginals and a density grid");
  exp->add_option("--run", export_args.run_dir, "run directory")->required();
  exp->add_option("--out", export_args.out, "output directory");
  exp->add_option("--grid", export_args.grid, "grid points per axis");
  exp->add_option("--bins", export_args.bins, "histogram bins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  if (*run) {
    if (*seed_opt) {
      run_args.seed = seed;
    }
    if (*workers_opt) {
      run_args.workers = workers;
    }
    if (*stride_opt) {
      run_args.stride = stride;
    }
    return cmd_run(run_args, out, err);
  }
  if (*list) {
    return cmd_list(as_json, out);
  }
  if (*metrics) {
    return cmd_metrics(metrics_args, out, err);
  }
  return cmd_export(export_args, out, err);
}

} // namespace eparvi
