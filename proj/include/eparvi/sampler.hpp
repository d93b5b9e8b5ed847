#pragma once

#include "eparvi/integrators.hpp"
#include "eparvi/mesh.hpp"
#include "eparvi/types.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace eparvi {

class TargetDensity;

/// Free negative charges and their integrator state.
struct ParticleEnsemble {
  PointSet positions;
  /// Verlet displacement carried between steps; all zero at t = 0.
  PointSet prev_disp;
  /// Per particle: inside the mesh bounds at the last update.
  std::vector<bool> in_region;

  Index size() const { return positions.rows(); }
  Index dimension() const { return positions.cols(); }
};

/// Initial proposal p0: uniform on a box or an axis-aligned Gaussian.
struct InitSpec {
  enum class Kind { Uniform, Gaussian };

  Kind kind = Kind::Uniform;
  Box box;
  Vector mean;
  Vector stddev;
  /// Permit a uniform box that reaches outside the mesh bounds.
  bool allow_overflow = false;
};

struct SamplerConfig {
  UpdateRule rule;
  long iterations = 100;
  bool normalize_forces = true;
  PerturbationPolicy perturbation;
  bool mh_filter = false;
  AnnealingSchedule annealing;
  InitSpec init;
  Index particles = 400;
  /// Charge carried by every particle.
  double neg_charge = 1.0;
  std::uint64_t seed = 0;
  long snapshot_stride = 5;
  /// Freeze particles the moment they leave the mesh instead of letting them
  /// evolve until the end. Frozen particles exert and feel no force.
  bool sequential_filter = false;
  /// Pair distances are clamped up to this multiple of the cell diagonal.
  double min_distance_factor = 1e-9;
  unsigned workers = 1;

  /// Throws ConfigError naming the offending field.
  void validate(Index dimension, const Box &mesh_bounds) const;
};

/// Scalar state of the ensemble at iteration t (positions x^t).
struct IterationDiagnostics {
  long iteration = 0;
  /// Raw (un-normalised) force norms acting at x^t.
  double max_force_norm = 0.0;
  double mean_force_norm = 0.0;
  Index inside = 0;
  /// Mean Euclidean length of the move x^{t-1} -> x^t; 0 at t = 0.
  double mean_displacement = 0.0;
  /// Fraction of MH proposals accepted on the move into x^t, if filtering.
  double acceptance_rate = 1.0;
  double anneal_multiplier = 1.0;
  double wall_time_s = 0.0;
};

struct Snapshot {
  long iteration = 0;
  PointSet positions;
};

struct RunRecord {
  /// Entries for t = 0 .. T.
  std::vector<IterationDiagnostics> diagnostics;
  /// Taken at t = 0, stride, 2 stride, ... and always at T.
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
};

struct RunResult {
  ParticleEnsemble ensemble;
  RunRecord record;
};

/// Fraction of particles outside the mesh above which a run is flagged.
inline constexpr double kOutOfRegionWarnFraction = 0.25;

/// RNG stream for one (purpose, particle, step) triple, derived from the
/// master seed. Independent of worker count.
enum class StreamTag : std::uint32_t {
  Init = 1,
  Perturb = 2,
  Filter = 3,
  Langevin = 4,
  Chain = 5,
};
std::mt19937_64 make_stream(std::uint64_t master, StreamTag tag,
                            std::uint64_t particle, std::uint64_t step);

/// Draws config.particles points from the configured proposal.
ParticleEnsemble initialize(const SamplerConfig &config, const ChargeMesh &mesh);

/// Fixed-budget EParVI iteration: assemble forces, move every particle with
/// the update rule, then optional perturbation and MH filtering.
/// Throws RunError carrying the iteration index if assembly or an update
/// fails, PositivityError if the mesh carries invalid magnitudes.
RunResult run(const SamplerConfig &config, const ChargeMesh &mesh,
              const TargetDensity &target);

/// Continues from an existing ensemble.
RunResult run(const SamplerConfig &config, const ChargeMesh &mesh,
              const TargetDensity &target, ParticleEnsemble ensemble);

struct FilterResult {
  PointSet kept;
  /// Original row of every kept particle.
  std::vector<Index> kept_ids;
  Index discarded = 0;
  /// Set when nothing survived.
  bool empty = false;
};

/// Keeps particles with every coordinate inside the closed bounds.
FilterResult filter_in_region(const PointSet &positions, const Box &bounds);

struct MarginalSummary {
  /// bins + 1 edges.
  std::vector<double> edges;
  std::vector<Index> counts;
  std::vector<double> kde_grid;
  std::vector<double> kde_density;
  double bandwidth = 0.0;
};

/// Per-dimension histogram and Gaussian KDE (Scott bandwidth) evaluated on
/// `kde_points` points spanning `bounds`. Histogram edges cover both the
/// bounds and the data, so counts always sum to the particle count.
/// Throws SummaryError with fewer than 2 particles.
std::vector<MarginalSummary> marginal_summaries(const PointSet &positions,
                                                const Box &bounds, int bins = 30,
                                                int kde_points = 200);

} // namespace eparvi
