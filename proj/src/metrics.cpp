#include "eparvi/metrics.hpp"

#include "eparvi/error.hpp"
#include "eparvi/parallel.hpp"
#include "eparvi/targets.hpp"

#include <cmath>
#include <vector>

namespace eparvi {

namespace {

// Mean of k(a_i, b_j) over all pairs, rows summed in parallel.
double mean_kernel(const PointSet &A, const PointSet &B, unsigned workers) {
  std::vector<double> row_sums(static_cast<std::size_t>(A.rows()), 0.0);
  parallel_for(row_sums.size(), workers, [&](std::size_t i) {
    double s = 0.0;
    const Vector a = A.row(static_cast<Index>(i)).transpose();
    for (Index j = 0; j < B.rows(); ++j) {
      s += polynomial_kernel(a, B.row(j).transpose());
    }
    row_sums[i] = s;
  });
  double total = 0.0;
  for (double s : row_sums) {
    total += s;
  }
  return total / (static_cast<double>(A.rows()) * static_cast<double>(B.rows()));
}

} // namespace

double polynomial_kernel(const ConstPointRef &x, const ConstPointRef &y) {
  const double base = x.dot(y) / 3.0 + 1.0;
  return base * base * base;
}

double mmd_squared(const PointSet &X, const PointSet &Y, unsigned workers) {
  if (X.rows() == 0 || Y.rows() == 0) {
    throw MetricError("MMD needs non-empty sample sets");
  }
  if (X.cols() != Y.cols()) {
    throw MetricError("MMD sample sets differ in dimension (" +
                      std::to_string(X.cols()) + " vs " +
                      std::to_string(Y.cols()) + ")");
  }
  return mean_kernel(X, X, workers) + mean_kernel(Y, Y, workers) -
         2.0 * mean_kernel(X, Y, workers);
}

NllResult avg_nll(const PointSet &samples, const TargetDensity &target) {
  if (samples.cols() != target.dimension()) {
    throw MetricError("samples have dimension " + std::to_string(samples.cols()) +
                      ", target '" + target.id() + "' has " +
                      std::to_string(target.dimension()));
  }
  NllResult out;
  double sum = 0.0;
  for (Index i = 0; i < samples.rows(); ++i) {
    const double lp = target.log_density(samples.row(i).transpose());
    if (!std::isfinite(lp)) {
      ++out.n_invalid;
      continue;
    }
    sum += lp;
    ++out.n_valid;
  }
  if (out.n_valid == 0) {
    throw MetricError("no sample has positive density under '" + target.id() +
                      "'");
  }
  out.value = -sum / static_cast<double>(out.n_valid);
  return out;
}

} // namespace eparvi
