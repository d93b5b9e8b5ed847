#pragma once

#include "eparvi/types.hpp"

#include <optional>

namespace eparvi {

class TargetDensity;

/// k(x, y) = (x.y / 3 + 1)^3.
double polynomial_kernel(const ConstPointRef &x, const ConstPointRef &y);

/// Biased (V-statistic) squared MMD with the polynomial kernel, diagonal terms
/// included. Throws MetricError on empty inputs or a dimension mismatch.
double mmd_squared(const PointSet &X, const PointSet &Y, unsigned workers = 1);

struct NllResult {
  double value = 0.0;
  Index n_valid = 0;
  Index n_invalid = 0;
};

/// -(1/n) sum log p(x_i) over the valid samples, using the target's possibly
/// unnormalised density. Invalid or zero-density samples are skipped and
/// counted. Throws MetricError when none is valid.
NllResult avg_nll(const PointSet &samples, const TargetDensity &target);

struct MetricReport {
  std::optional<double> mmd2;
  std::optional<double> avg_nll;
  Index n_x = 0;
  Index n_y = 0;
  Index n_invalid = 0;
  double runtime_s = 0.0;
};

} // namespace eparvi
