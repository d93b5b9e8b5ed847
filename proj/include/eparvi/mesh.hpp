#pragma once

#include "eparvi/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eparvi {

class TargetDensity;

/// How a target (log-)density value at a grid point becomes a charge.
enum class MagnitudeMode {
  /// q * p(x)
  Density,
  /// q * p(x) / max_grid p
  NormalizedDensity,
  /// q * (log p(x) - min_grid log p)
  LogDensityOffset,
};

std::string to_string(MagnitudeMode mode);
MagnitudeMode magnitude_mode_from_string(const std::string &name);

struct MagnitudeSpec {
  MagnitudeMode mode = MagnitudeMode::Density;
  double q_max = 1.0;
  /// When set, magnitudes are rescaled after the mode is applied so they sum
  /// to this value (normally the total negative charge, giving a neutral
  /// system).
  std::optional<double> total_charge;
  unsigned workers = 1;
};

/// Equidistant grid of fixed positive charges.
///
/// Points are the Cartesian product of per-axis linear spacings including both
/// endpoints, flattened in row-major order (the last axis varies fastest).
class ChargeMesh {
public:
  /// Throws MeshError if a count is below 2 or an interval is degenerate.
  static ChargeMesh build(Box bounds, std::vector<std::size_t> counts);

  Index dimension() const { return static_cast<Index>(bounds_.size()); }
  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }

  const Box &bounds() const { return bounds_; }
  const std::vector<std::size_t> &counts() const { return counts_; }
  const PointSet &points() const { return points_; }
  auto point(std::size_t flat) const {
    return points_.row(static_cast<Index>(flat));
  }

  double spacing(std::size_t axis) const;
  double cell_diagonal() const;
  bool contains(const ConstPointRef &x) const { return box_contains(bounds_, x); }

  std::size_t flat_index(std::span<const std::size_t> grid_index) const;
  std::vector<std::size_t> grid_index(std::size_t flat) const;

  /// Nearest grid index along one axis (clamped to the grid).
  std::size_t nearest_axis_index(std::size_t axis, double value) const;

  bool has_magnitudes() const { return !magnitudes_.empty(); }
  std::span<const double> magnitudes() const { return magnitudes_; }
  double total_charge() const;
  std::size_t argmax_magnitude() const;

  /// Effective q after any neutrality rescaling.
  double q_scale() const { return q_scale_; }
  MagnitudeMode mode() const { return mode_; }

  /// Installs precomputed magnitudes. Throws PositivityError on any negative
  /// or non-finite entry and MeshError on a size mismatch.
  void set_magnitudes(std::vector<double> magnitudes, MagnitudeMode mode,
                      double q_scale);

private:
  Box bounds_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> strides_;
  PointSet points_;
  std::vector<double> magnitudes_;
  MagnitudeMode mode_ = MagnitudeMode::Density;
  double q_scale_ = 1.0;
};

/// Evaluates the target at every grid point and caches the charge magnitudes.
/// Points the target flags invalid get magnitude exactly 0.
/// Throws MeshError if every point is invalid, PositivityError if a computed
/// magnitude is negative.
void assign_magnitudes(ChargeMesh &mesh, const TargetDensity &target,
                       const MagnitudeSpec &spec);

/// Magnitude multiplier schedule over iterations; every value lies in (0, 1].
class AnnealingSchedule {
public:
  /// Multiplier 1 at every iteration.
  AnnealingSchedule() = default;

  /// gamma^t with a lower floor. Throws ConfigError unless 0 < gamma <= 1 and
  /// 0 < floor <= 1.
  static AnnealingSchedule geometric(double gamma, double floor = 0.1);

  /// Explicit per-iteration multipliers; the last entry repeats past the end.
  static AnnealingSchedule explicit_values(std::vector<double> multipliers);

  double multiplier(long t) const;
  bool is_constant() const { return kind_ == Kind::Constant; }

private:
  enum class Kind { Constant, Geometric, Explicit };
  Kind kind_ = Kind::Constant;
  double gamma_ = 1.0;
  double floor_ = 0.1;
  std::vector<double> values_;
};

/// Base magnitudes scaled by schedule(t); the mesh cache is left untouched.
std::vector<double> annealed_magnitudes(const ChargeMesh &mesh,
                                        const AnnealingSchedule &schedule,
                                        long t);

/// Identity of a magnitude cache file.
struct MeshCacheKey {
  std::string target_id;
  Box bounds;
  std::vector<std::size_t> counts;
  MagnitudeMode mode = MagnitudeMode::Density;
  double q_max = 1.0;
  std::optional<double> total_charge;

  std::string serialize() const;
  bool operator==(const MeshCacheKey &) const = default;
};

/// Binary cache: magic, key, then the raw magnitudes. Reload is bit-exact.
void save_mesh_cache(const std::filesystem::path &path, const MeshCacheKey &key,
                     const ChargeMesh &mesh);

/// Returns nullopt if the file is absent or was written for another key.
std::optional<ChargeMesh> load_mesh_cache(const std::filesystem::path &path,
                                          const MeshCacheKey &key);

} // namespace eparvi
