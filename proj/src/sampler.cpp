#include "eparvi/sampler.hpp"

#include "eparvi/error.hpp"
#include "eparvi/forces.hpp"
#include "eparvi/parallel.hpp"
#include "eparvi/targets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace eparvi {

namespace {

using Clock = std::chrono::steady_clock;

void require_size(const Vector &v, Index d, const std::string &field) {
  if (v.size() != d) {
    throw ConfigError(field, "expected " + std::to_string(d) + " entries, got " +
                                 std::to_string(v.size()));
  }
}

// Positions of the particles still taking part in the dynamics.
PointSet gather_rows(const PointSet &all, const std::vector<Index> &rows) {
  PointSet out(static_cast<Index>(rows.size()), all.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = all.row(rows[i]);
  }
  return out;
}

void take_snapshot(RunRecord &record, long t, const PointSet &positions) {
  record.snapshots.push_back({t, positions});
}

} // namespace

std::mt19937_64 make_stream(std::uint64_t master, StreamTag tag,
                            std::uint64_t particle, std::uint64_t step) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  const auto hi = [](std::uint64_t v) {
    return static_cast<std::uint32_t>(v >> 32);
  };
  std::seed_seq seq{lo(master),   hi(master), static_cast<std::uint32_t>(tag),
                    lo(particle), hi(particle), lo(step),
                    hi(step)};
  return std::mt19937_64(seq);
}

void SamplerConfig::validate(Index dimension, const Box &mesh_bounds) const {
  rule.validate(dimension);
  if (iterations < 1) {
    throw ConfigError("sampler.iterations", "must be at least 1");
  }
  if (particles < 1) {
    throw ConfigError("sampler.particles", "must be at least 1");
  }
  if (!(neg_charge > 0.0) || !std::isfinite(neg_charge)) {
    throw ConfigError("sampler.neg_charge", "must be positive");
  }
  if (snapshot_stride < 1) {
    throw ConfigError("sampler.snapshot_stride", "must be at least 1");
  }
  if (!(perturbation.sigma >= 0.0) || perturbation.period_k < 1) {
    throw ConfigError("sampler.perturbation",
                      "sigma must be >= 0 and period_k >= 1");
  }
  if (!(min_distance_factor >= 0.0)) {
    throw ConfigError("sampler.min_distance_factor", "must be >= 0");
  }
  switch (init.kind) {
  case InitSpec::Kind::Uniform:
    if (static_cast<Index>(init.box.size()) != dimension) {
      throw ConfigError("init.box", "expected " + std::to_string(dimension) +
                                        " intervals, got " +
                                        std::to_string(init.box.size()));
    }
    for (std::size_t k = 0; k < init.box.size(); ++k) {
      const Interval &iv = init.box[k];
      if (!(iv.high > iv.low)) {
        throw ConfigError("init.box", "interval " + std::to_string(k) +
                                          " is empty");
      }
      if (!init.allow_overflow &&
          (iv.low < mesh_bounds[k].low || iv.high > mesh_bounds[k].high)) {
        throw ConfigError("init.box",
                          "interval " + std::to_string(k) +
                              " leaves the mesh bounds; set allow_overflow");
      }
    }
    break;
  case InitSpec::Kind::Gaussian:
    require_size(init.mean, dimension, "init.mean");
    require_size(init.stddev, dimension, "init.stddev");
    if (!(init.stddev.array() > 0.0).all()) {
      throw ConfigError("init.stddev", "must be positive");
    }
    break;
  }
}

ParticleEnsemble initialize(const SamplerConfig &config, const ChargeMesh &mesh) {
  const Index d = mesh.dimension();
  config.validate(d, mesh.bounds());
  ParticleEnsemble ens;
  ens.positions.resize(config.particles, d);
  ens.prev_disp = PointSet::Zero(config.particles, d);
  ens.in_region.assign(static_cast<std::size_t>(config.particles), true);
  for (Index j = 0; j < config.particles; ++j) {
    auto rng = make_stream(config.seed, StreamTag::Init,
                           static_cast<std::uint64_t>(j), 0);
    for (Index k = 0; k < d; ++k) {
      if (config.init.kind == InitSpec::Kind::Uniform) {
        const Interval &iv = config.init.box[static_cast<std::size_t>(k)];
        std::uniform_real_distribution<double> u(iv.low, iv.high);
        ens.positions(j, k) = u(rng);
      } else {
        std::normal_distribution<double> n(config.init.mean[k],
                                           config.init.stddev[k]);
        ens.positions(j, k) = n(rng);
      }
    }
    ens.in_region[static_cast<std::size_t>(j)] =
        mesh.contains(ens.positions.row(j).transpose());
  }
  return ens;
}

RunResult run(const SamplerConfig &config, const ChargeMesh &mesh,
              const TargetDensity &target) {
  return run(config, mesh, target, initialize(config, mesh));
}

RunResult run(const SamplerConfig &config, const ChargeMesh &mesh,
              const TargetDensity &target, ParticleEnsemble ens) {
  const Index d = mesh.dimension();
  config.validate(d, mesh.bounds());
  if (target.dimension() != d || ens.dimension() != d) {
    throw InvalidDimensionError("target, mesh and ensemble dimensions differ");
  }
  if (!mesh.has_magnitudes()) {
    throw MeshError("mesh magnitudes have not been assigned");
  }
  for (double m : mesh.magnitudes()) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw PositivityError(
          "mesh carries a negative or non-finite charge magnitude; check the "
          "magnitude mode against the target's density kind");
    }
  }
  if (ens.prev_disp.rows() != ens.size() || ens.prev_disp.cols() != d) {
    ens.prev_disp = PointSet::Zero(ens.size(), d);
  }
  ens.in_region.assign(static_cast<std::size_t>(ens.size()), true);
  for (Index j = 0; j < ens.size(); ++j) {
    ens.in_region[static_cast<std::size_t>(j)] =
        mesh.contains(ens.positions.row(j).transpose());
  }

  const Index n = ens.size();
  const long T = config.iterations;
  const unsigned workers = resolve_workers(config.workers);
  const std::vector<double> charges(static_cast<std::size_t>(n), config.neg_charge);

  ForceOptions fopt;
  fopt.min_distance = config.min_distance_factor * mesh.cell_diagonal();
  fopt.normalize = config.normalize_forces;
  fopt.workers = workers;

  std::vector<bool> frozen(static_cast<std::size_t>(n), false);
  if (config.sequential_filter) {
    for (std::size_t j = 0; j < frozen.size(); ++j) {
      frozen[j] = !ens.in_region[j];
    }
  }
  std::vector<Index> active;

  RunResult result;
  RunRecord &record = result.record;
  record.diagnostics.reserve(static_cast<std::size_t>(T + 1));
  long first_overflow = -1;

  PointSet forces = PointSet::Zero(n, d);
  std::vector<double> raw_norms(static_cast<std::size_t>(n), 0.0);

  // Forces acting at the current positions; fills `forces` and `raw_norms`
  // for active particles and zeroes them for frozen ones.
  const auto assemble = [&](long t) -> IterationDiagnostics {
    active.clear();
    for (Index j = 0; j < n; ++j) {
      if (!frozen[static_cast<std::size_t>(j)]) {
        active.push_back(j);
      }
    }
    IterationDiagnostics diag;
    diag.iteration = t;
    diag.anneal_multiplier = config.annealing.multiplier(t);
    forces.setZero();
    std::fill(raw_norms.begin(), raw_norms.end(), 0.0);
    if (!active.empty()) {
      const std::vector<double> mags =
          config.annealing.is_constant()
              ? std::vector<double>(mesh.magnitudes().begin(),
                                    mesh.magnitudes().end())
              : annealed_magnitudes(mesh, config.annealing, t);
      AssembledForces af;
      try {
        if (active.size() == static_cast<std::size_t>(n)) {
          af = assemble_forces(ens.positions,
                               std::span<const double>(charges), mesh.points(),
                               mags, fopt);
        } else {
          af = assemble_forces(gather_rows(ens.positions, active),
                               std::span<const double>(charges.data(), active.size()),
                               mesh.points(), mags, fopt);
        }
      } catch (const Error &e) {
        throw RunError(t, e.what());
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        forces.row(active[i]) = af.forces.row(static_cast<Index>(i));
        raw_norms[static_cast<std::size_t>(active[i])] = af.raw_norms[i];
        sum += af.raw_norms[i];
      }
      diag.max_force_norm = af.max_norm;
      diag.mean_force_norm = sum / static_cast<double>(active.size());
    }
    Index inside = 0;
    for (Index j = 0; j < n; ++j) {
      inside += ens.in_region[static_cast<std::size_t>(j)] ? 1 : 0;
    }
    diag.inside = inside;
    if (first_overflow < 0 &&
        static_cast<double>(n - inside) >
            kOutOfRegionWarnFraction * static_cast<double>(n)) {
      first_overflow = t;
    }
    return diag;
  };

  auto start = Clock::now();
  IterationDiagnostics diag0 = assemble(0);
  diag0.wall_time_s =
      std::chrono::duration<double>(Clock::now() - start).count();
  record.diagnostics.push_back(diag0);
  take_snapshot(record, 0, ens.positions);

  std::vector<double> moved(static_cast<std::size_t>(n), 0.0);
  std::vector<char> accepted(static_cast<std::size_t>(n), 1);

  for (long t = 0; t < T; ++t) {
    start = Clock::now();
    PointSet next = ens.positions;
    PointSet next_disp = ens.prev_disp;
    try {
      parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t js) {
        const auto j = static_cast<Index>(js);
        moved[js] = 0.0;
        accepted[js] = 1;
        if (frozen[js]) {
          return;
        }
        const Vector x = ens.positions.row(j).transpose();
        const Vector f = forces.row(j).transpose();
        const Vector prev = ens.prev_disp.row(j).transpose();
        VerletState s = apply_rule(config.rule, x, prev, f);
        if (config.perturbation.active_at(t)) {
          auto rng = make_stream(config.seed, StreamTag::Perturb, js,
                                 static_cast<std::uint64_t>(t));
          s.position = perturb(s.position, config.perturbation, t, rng);
        }
        if (config.mh_filter) {
          auto rng = make_stream(config.seed, StreamTag::Filter, js,
                                 static_cast<std::uint64_t>(t));
          bool ok = true;
          s.position = mh_filter(x, s.position, target, rng, &ok);
          if (!ok) {
            // A rejected particle stays put and loses its momentum.
            s.displacement.setZero();
            accepted[js] = 0;
          }
        }
        if (!s.position.allFinite()) {
          throw IntegratorError("particle " + std::to_string(j) +
                                " moved to a non-finite position");
        }
        moved[js] = (s.position - x).norm();
        next.row(j) = s.position.transpose();
        next_disp.row(j) = s.displacement.transpose();
      });
    } catch (const Error &e) {
      throw RunError(t, e.what());
    }
    ens.positions = std::move(next);
    ens.prev_disp = std::move(next_disp);

    double moved_sum = 0.0;
    Index movers = 0;
    Index proposals = 0;
    Index accepts = 0;
    for (Index j = 0; j < n; ++j) {
      const auto js = static_cast<std::size_t>(j);
      if (frozen[js]) {
        continue;
      }
      ++movers;
      moved_sum += moved[js];
      ++proposals;
      accepts += accepted[js];
      ens.in_region[js] = mesh.contains(ens.positions.row(j).transpose());
      if (config.sequential_filter && !ens.in_region[js]) {
        frozen[js] = true;
      }
    }

    IterationDiagnostics diag = assemble(t + 1);
    diag.mean_displacement =
        movers > 0 ? moved_sum / static_cast<double>(movers) : 0.0;
    diag.acceptance_rate =
        proposals > 0 ? static_cast<double>(accepts) / static_cast<double>(proposals)
                      : 1.0;
    diag.wall_time_s =
        std::max(std::chrono::duration<double>(Clock::now() - start).count(),
                 1e-9);
    record.diagnostics.push_back(diag);
    if ((t + 1) % config.snapshot_stride == 0 || t + 1 == T) {
      take_snapshot(record, t + 1, ens.positions);
    }
  }

  if (first_overflow >= 0) {
    record.warnings.push_back(
        "more than 25% of particles outside the mesh region from iteration " +
        std::to_string(first_overflow) +
        "; the mesh bounds may not cover the target's mass");
  }
  result.ensemble = std::move(ens);
  return result;
}

FilterResult filter_in_region(const PointSet &positions, const Box &bounds) {
  if (static_cast<Index>(bounds.size()) != positions.cols()) {
    throw InvalidDimensionError("bounds and positions differ in dimension");
  }
  FilterResult out;
  for (Index j = 0; j < positions.rows(); ++j) {
    if (box_contains(bounds, positions.row(j).transpose())) {
      out.kept_ids.push_back(j);
    }
  }
  out.kept = gather_rows(positions, out.kept_ids);
  out.discarded = positions.rows() - static_cast<Index>(out.kept_ids.size());
  out.empty = out.kept_ids.empty();
  return out;
}

std::vector<MarginalSummary> marginal_summaries(const PointSet &positions,
                                                const Box &bounds, int bins,
                                                int kde_points) {
  const Index n = positions.rows();
  if (n < 2) {
    throw SummaryError("marginal summaries need at least 2 particles, got " +
                       std::to_string(n));
  }
  if (static_cast<Index>(bounds.size()) != positions.cols()) {
    throw InvalidDimensionError("bounds and positions differ in dimension");
  }
  if (bins < 1 || kde_points < 2) {
    throw SummaryError("need at least 1 bin and 2 KDE points");
  }
  std::vector<MarginalSummary> out(bounds.size());
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    const auto col = positions.col(static_cast<Index>(k));
    MarginalSummary &s = out[k];

    const double lo = std::min(bounds[k].low, col.minCoeff());
    const double hi = std::max(bounds[k].high, col.maxCoeff());
    const double width = (hi - lo) / bins;
    s.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) {
      s.edges[static_cast<std::size_t>(b)] = lo + width * b;
    }
    s.edges.back() = hi;
    s.counts.assign(static_cast<std::size_t>(bins), 0);
    for (Index j = 0; j < n; ++j) {
      auto b = static_cast<long>((col[j] - lo) / width);
      b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
      ++s.counts[static_cast<std::size_t>(b)];
    }

    const double mean = col.mean();
    const double sd =
        std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1));
    s.bandwidth = sd > 0.0 ? sd * std::pow(static_cast<double>(n), -0.2)
                           : 1e-3 * bounds[k].width();
    const double norm = 1.0 / (static_cast<double>(n) * s.bandwidth *
                               std::sqrt(2.0 * std::numbers::pi));
    s.kde_grid.resize(static_cast<std::size_t>(kde_points));
    s.kde_density.resize(static_cast<std::size_t>(kde_points));
    const double step = bounds[k].width() / (kde_points - 1);
    for (int g = 0; g < kde_points; ++g) {
      const double x =
          g + 1 == kde_points ? bounds[k].high : bounds[k].low + step * g;
      double acc = 0.0;
      for (Index j = 0; j < n; ++j) {
        const double u = (x - col[j]) / s.bandwidth;
        acc += std::exp(-0.5 * u * u);
      }
      s.kde_grid[static_cast<std::size_t>(g)] = x;
      s.kde_density[static_cast<std::size_t>(g)] = acc * norm;
    }
  }
  return out;
}

} // namespace eparvi
