#pragma once

#include "eparvi/types.hpp"

#include <span>
#include <vector>

namespace eparvi {

class ChargeMesh;

/// Vacuum permittivity used throughout, in F/m.
inline constexpr double kVacuumPermittivity = 8.854e-12;

/// Coulomb constant generalised to d dimensions: Gamma(d/2) / (2 pi^{d/2} eps0).
/// Throws InvalidDimensionError for d < 1.
double coulomb_constant(int dimension);

/// r^d for integer d, by repeated multiplication.
double distance_power(double r, int dimension);

/// Force exerted by a source charge on a field charge:
///   C(d) q_s q_f (x_f - x_s) / r^d.
/// Positive charge product pushes the field charge away from the source.
/// Throws SingularityError when the points coincide.
Vector pairwise_force(const ConstPointRef &source_pos,
                      const ConstPointRef &field_pos, double q_source,
                      double q_field);

/// Options shared by the per-particle force routines.
struct ForceOptions {
  /// Distances below this are clamped up to it. Zero disables the clamp.
  double min_distance = 0.0;
  /// Rescale the force array so the largest per-particle norm is 1.
  bool normalize = false;
  /// Worker threads used for assembly (0 = hardware concurrency).
  unsigned workers = 1;
};

/// Sum of repulsion on particle j from every other particle. `neg_charges`
/// holds one magnitude per particle (all > 0).
Vector repulsive_force(Index j, const PointSet &positions,
                       std::span<const double> neg_charges,
                       double min_distance = 0.0);

/// Attraction on particle j (charge q_j) from the fixed mesh charges.
/// Grid points with zero magnitude or coinciding with the particle are skipped.
Vector attractive_force(Index j, const PointSet &positions,
                        const PointSet &grid_points,
                        std::span<const double> magnitudes, double q_j = 1.0,
                        double min_distance = 0.0);

struct AssembledForces {
  /// Per-particle net forces (rows), after normalisation if requested.
  PointSet forces;
  /// Per-particle Euclidean norms of the raw, un-normalised forces.
  std::vector<double> raw_norms;
  /// Largest entry of raw_norms; the divisor applied when normalising.
  double max_norm = 0.0;
};

/// Net force F_j = F_j^rep + F_j^attr on every particle. The negative-negative
/// block evaluates each distinct pair once. Throws ForceAssemblyError naming
/// the first particle with a non-finite component.
AssembledForces assemble_forces(const PointSet &positions,
                                std::span<const double> neg_charges,
                                const PointSet &grid_points,
                                std::span<const double> magnitudes,
                                const ForceOptions &options);

/// Convenience overload using the mesh's cached magnitudes.
AssembledForces assemble_forces(const PointSet &positions,
                                std::span<const double> neg_charges,
                                const ChargeMesh &mesh,
                                const ForceOptions &options);

} // namespace eparvi
