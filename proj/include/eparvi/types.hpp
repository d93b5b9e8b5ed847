#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace eparvi {

using Index = Eigen::Index;

/// A single point or vector in R^d.
using Vector = Eigen::VectorXd;

/// N points in R^d, one per row. Row-major so that a particle's coordinates
/// are contiguous.
using PointSet =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ConstPointRef = Eigen::Ref<const Vector>;

/// Closed interval [low, high] along one axis.
struct Interval {
  double low = 0.0;
  double high = 1.0;

  double width() const { return high - low; }
  bool contains(double x) const { return x >= low && x <= high; }
};

using Box = std::vector<Interval>;

inline bool box_contains(const Box &box, const ConstPointRef &x) {
  for (std::size_t k = 0; k < box.size(); ++k) {
    if (!box[k].contains(x[static_cast<Index>(k)])) {
      return false;
    }
  }
  return true;
}

} // namespace eparvi
