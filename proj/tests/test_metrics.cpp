#include "eparvi/error.hpp"
#include "eparvi/metrics.hpp"
#include "eparvi/targets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace eparvi;

namespace {

PointSet random_set(Index n, Index d, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  PointSet x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) {
      x(i, k) = g(rng);
    }
  }
  return x;
}

double kernel_oracle(const double *x, const double *y, Index d) {
  double dot = 0.0;
  for (Index k = 0; k < d; ++k) {
    dot += x[k] * y[k];
  }
  const double b = dot / 3.0 + 1.0;
  return b * b * b;
}

double mmd_oracle(const PointSet &X, const PointSet &Y) {
  const Index d = X.cols();
  auto mean_k = [&](const PointSet &A, const PointSet &B) {
    double s = 0.0;
    for (Index i = 0; i < A.rows(); ++i) {
      for (Index j = 0; j < B.rows(); ++j) {
        s += kernel_oracle(A.row(i).data(), B.row(j).data(), d);
      }
    }
    return s / static_cast<double>(A.rows() * B.rows());
  };
  return mean_k(X, X) + mean_k(Y, Y) - 2.0 * mean_k(X, Y);
}

} // namespace

TEST(PolynomialKernel, HandValues) {
  Vector x(2);
  Vector y(2);
  x << 1, 0;
  y << 0, 1;
  EXPECT_DOUBLE_EQ(polynomial_kernel(x, x), 64.0 / 27.0);
  EXPECT_DOUBLE_EQ(polynomial_kernel(x, y), 1.0);
}

TEST(Mmd, IdenticalSetsGiveZero) {
  std::mt19937_64 rng(1);
  const PointSet X = random_set(200, 3, rng);
  const double v = mmd_squared(X, X);
  EXPECT_LT(std::abs(v), 1e-10 * mmd_oracle(X, X.array() + 1.0));
}

TEST(Mmd, SinglePointExample) {
  PointSet X(1, 2);
  PointSet Y(1, 2);
  X << 1, 0;
  Y << 0, 1;
  EXPECT_NEAR(mmd_squared(X, Y), 74.0 / 27.0, 1e-12);
}

TEST(Mmd, MatchesLoopOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const PointSet X = random_set(37, 2, rng);
    const PointSet Y = random_set(23, 2, rng);
    const double want = mmd_oracle(X, Y);
    EXPECT_NEAR(mmd_squared(X, Y), want, 1e-12 * std::max(1.0, std::abs(want)));
    EXPECT_NEAR(mmd_squared(X, Y, 3), want, 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST(Mmd, SymmetricAndNonNegative) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const PointSet X = random_set(10, 2, rng);
    const PointSet Y = random_set(15, 2, rng);
    const double xy = mmd_squared(X, Y);
    EXPECT_NEAR(xy, mmd_squared(Y, X), 1e-10 * std::max(1.0, xy));
    EXPECT_GE(xy, -1e-10);
  }
}

TEST(Mmd, InvariantToDuplicatingASet) {
  std::mt19937_64 rng(4);
  const PointSet X = random_set(20, 2, rng);
  const PointSet Y = random_set(30, 2, rng);
  PointSet XX(40, 2);
  XX << X, X;
  EXPECT_NEAR(mmd_squared(X, Y), mmd_squared(XX, Y), 1e-10);
}

TEST(Mmd, Errors) {
  EXPECT_THROW(mmd_squared(PointSet(0, 2), PointSet::Zero(3, 2)), MetricError);
  EXPECT_THROW(mmd_squared(PointSet::Zero(3, 2), PointSet::Zero(3, 3)), MetricError);
}

TEST(AvgNll, StandardNormalAtMean) {
  const GaussianTarget t("n01", Vector::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  const NllResult r = avg_nll(PointSet::Zero(1, 1), t);
  EXPECT_NEAR(r.value, 0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(r.value, 0.9189, 1e-4);
  EXPECT_EQ(r.n_valid, 1);
}

TEST(AvgNll, AveragesLogDensities) {
  const GaussianTarget t("n01", Vector::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  PointSet x(3, 1);
  x << -1.0, 0.0, 2.0;
  const double want = 0.5 * std::log(2.0 * std::numbers::pi) + (1.0 + 0.0 + 4.0) / 6.0;
  EXPECT_NEAR(avg_nll(x, t).value, want, 1e-12);
}

TEST(AvgNll, SkipsInvalidSamplesAndFailsWhenNoneValid) {
  const UniformBoxTarget t({{0, 2}});
  PointSet x(3, 1);
  x << 0.5, 5.0, 1.5;
  const NllResult r = avg_nll(x, t);
  EXPECT_EQ(r.n_valid, 2);
  EXPECT_EQ(r.n_invalid, 1);
  EXPECT_NEAR(r.value, std::log(2.0), 1e-12);
  EXPECT_THROW(avg_nll(PointSet::Constant(2, 1, 9.0), t), MetricError);
}
