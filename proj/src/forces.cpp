#include "eparvi/forces.hpp"

#include "eparvi/error.hpp"
#include "eparvi/mesh.hpp"
#include "eparvi/parallel.hpp"

#include <cmath>
#include <numbers>

namespace eparvi {

namespace {

// Plain left-to-right sum so every caller sees identical rounding.
double distance(const double *a, const double *b, Index d) {
  double sq = 0.0;
  for (Index k = 0; k < d; ++k) {
    const double diff = b[k] - a[k];
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

double norm(const double *v, Index d) {
  double sq = 0.0;
  for (Index k = 0; k < d; ++k) {
    sq += v[k] * v[k];
  }
  return std::sqrt(sq);
}

std::size_t packed_index(std::size_t lo, std::size_t hi, std::size_t n) {
  // Row-major upper triangle without the diagonal.
  return lo * n - lo * (lo + 1) / 2 + (hi - lo - 1);
}

} // namespace

double coulomb_constant(int dimension) {
  if (dimension < 1) {
    throw InvalidDimensionError("dimension must be >= 1, got " +
                                std::to_string(dimension));
  }
  const double half = 0.5 * dimension;
  return std::tgamma(half) /
         (2.0 * std::pow(std::numbers::pi, half) * kVacuumPermittivity);
}

double distance_power(double r, int dimension) {
  double out = 1.0;
  for (int k = 0; k < dimension; ++k) {
    out *= r;
  }
  return out;
}

Vector pairwise_force(const ConstPointRef &source_pos,
                      const ConstPointRef &field_pos, double q_source,
                      double q_field) {
  if (source_pos.size() != field_pos.size()) {
    throw InvalidDimensionError("source and field positions differ in size");
  }
  const Index d = source_pos.size();
  const int dim = static_cast<int>(d);
  const double c = coulomb_constant(dim);
  const double r = distance(source_pos.data(), field_pos.data(), d);
  if (r == 0.0) {
    throw SingularityError("source and field charges coincide");
  }
  const double factor = c * (q_source * q_field) / distance_power(r, dim);
  Vector out(d);
  for (Index k = 0; k < d; ++k) {
    out[k] = factor * (field_pos[k] - source_pos[k]);
  }
  return out;
}

Vector repulsive_force(Index j, const PointSet &positions,
                       std::span<const double> neg_charges,
                       double min_distance) {
  const Index n = positions.rows();
  const Index d = positions.cols();
  const int dim = static_cast<int>(d);
  const double c = coulomb_constant(dim);
  Vector out = Vector::Zero(d);
  const double *xj = positions.row(j).data();
  for (Index i = 0; i < n; ++i) {
    if (i == j) {
      continue;
    }
    const double *xi = positions.row(i).data();
    double r = distance(xi, xj, d);
    if (r == 0.0) {
      continue;
    }
    if (r < min_distance) {
      r = min_distance;
    }
    const double factor =
        c * (neg_charges[static_cast<std::size_t>(i)] *
             neg_charges[static_cast<std::size_t>(j)]) /
        distance_power(r, dim);
    for (Index k = 0; k < d; ++k) {
      out[k] += factor * (xj[k] - xi[k]);
    }
  }
  return out;
}

Vector attractive_force(Index j, const PointSet &positions,
                        const PointSet &grid_points,
                        std::span<const double> magnitudes, double q_j,
                        double min_distance) {
  const Index d = positions.cols();
  const int dim = static_cast<int>(d);
  const double c = coulomb_constant(dim);
  Vector pull = Vector::Zero(d);
  const double *xj = positions.row(j).data();
  for (Index g = 0; g < grid_points.rows(); ++g) {
    const double q = magnitudes[static_cast<std::size_t>(g)];
    if (q == 0.0) {
      continue;
    }
    const double *xg = grid_points.row(g).data();
    double r = distance(xg, xj, d);
    if (r == 0.0) {
      continue;
    }
    if (r < min_distance) {
      r = min_distance;
    }
    const double factor = c * (q * q_j) / distance_power(r, dim);
    for (Index k = 0; k < d; ++k) {
      pull[k] += factor * (xj[k] - xg[k]);
    }
  }
  return -pull;
}

AssembledForces assemble_forces(const PointSet &positions,
                                std::span<const double> neg_charges,
                                const PointSet &grid_points,
                                std::span<const double> magnitudes,
                                const ForceOptions &options) {
  const Index n = positions.rows();
  const Index d = positions.cols();
  if (n == 0) {
    throw ForceAssemblyError(0, "empty particle ensemble");
  }
  if (static_cast<Index>(neg_charges.size()) != n) {
    throw ForceAssemblyError(0, "one charge per particle required");
  }
  if (grid_points.cols() != d && grid_points.rows() > 0) {
    throw InvalidDimensionError("mesh and particle dimensions differ");
  }
  if (static_cast<Index>(magnitudes.size()) != grid_points.rows()) {
    throw ForceAssemblyError(0, "one magnitude per grid point required");
  }
  const int dim = static_cast<int>(d);
  const double c = coulomb_constant(dim);
  const auto un = static_cast<std::size_t>(n);

  // Negative-negative block: each distinct pair weight computed once.
  std::vector<double> pair_weight(un * (un - 1) / 2, 0.0);
  parallel_for(un, options.workers, [&](std::size_t lo) {
    const double *xlo = positions.row(static_cast<Index>(lo)).data();
    for (std::size_t hi = lo + 1; hi < un; ++hi) {
      const double *xhi = positions.row(static_cast<Index>(hi)).data();
      double r = distance(xlo, xhi, d);
      double w = 0.0;
      if (r != 0.0) {
        if (r < options.min_distance) {
          r = options.min_distance;
        }
        w = c * (neg_charges[lo] * neg_charges[hi]) / distance_power(r, dim);
      }
      pair_weight[packed_index(lo, hi, un)] = w;
    }
  });

  AssembledForces out;
  out.forces = PointSet::Zero(n, d);
  out.raw_norms.assign(un, 0.0);

  parallel_for(un, options.workers, [&](std::size_t j) {
    const Index jj = static_cast<Index>(j);
    const double *xj = positions.row(jj).data();
    double *fj = out.forces.row(jj).data();

    for (std::size_t i = 0; i < un; ++i) {
      if (i == j) {
        continue;
      }
      const double w = i < j ? pair_weight[packed_index(i, j, un)]
                             : pair_weight[packed_index(j, i, un)];
      const double *xi = positions.row(static_cast<Index>(i)).data();
      for (Index k = 0; k < d; ++k) {
        fj[k] += w * (xj[k] - xi[k]);
      }
    }

    Vector pull = Vector::Zero(d);
    const double qj = neg_charges[j];
    for (Index g = 0; g < grid_points.rows(); ++g) {
      const double q = magnitudes[static_cast<std::size_t>(g)];
      if (q == 0.0) {
        continue;
      }
      const double *xg = grid_points.row(g).data();
      double r = distance(xg, xj, d);
      if (r == 0.0) {
        continue;
      }
      if (r < options.min_distance) {
        r = options.min_distance;
      }
      const double factor = c * (q * qj) / distance_power(r, dim);
      for (Index k = 0; k < d; ++k) {
        pull[k] += factor * (xj[k] - xg[k]);
      }
    }
    for (Index k = 0; k < d; ++k) {
      fj[k] = fj[k] + (-pull[k]);
    }
    out.raw_norms[j] = norm(fj, d);
  });

  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < d; ++k) {
      if (!std::isfinite(out.forces(j, k))) {
        throw ForceAssemblyError(j, "non-finite force component " +
                                        std::to_string(k));
      }
    }
    out.max_norm = std::max(out.max_norm, out.raw_norms[static_cast<std::size_t>(j)]);
  }

  if (options.normalize && out.max_norm > 0.0) {
    out.forces /= out.max_norm;
  }
  return out;
}

AssembledForces assemble_forces(const PointSet &positions,
                                std::span<const double> neg_charges,
                                const ChargeMesh &mesh,
                                const ForceOptions &options) {
  return assemble_forces(positions, neg_charges, mesh.points(),
                         mesh.magnitudes(), options);
}

} // namespace eparvi
