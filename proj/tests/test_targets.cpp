#include "eparvi/error.hpp"
#include "eparvi/mesh.hpp"
#include "eparvi/targets.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace eparvi;

namespace {

Vector pt(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

std::vector<std::unique_ptr<TargetDensity>> gradient_targets() {
  std::vector<std::unique_ptr<TargetDensity>> out;
  out.push_back(make_gaussian_unimodal());
  out.push_back(make_gaussian_bimodal());
  out.push_back(std::make_unique<ShapeTarget>(ShapeTarget::Shape::Moon));
  out.push_back(std::make_unique<ShapeTarget>(ShapeTarget::Shape::DoubleBanana));
  out.push_back(std::make_unique<ShapeTarget>(ShapeTarget::Shape::Wave));
  out.push_back(std::make_unique<NealsFunnelTarget>(3.0));
  return out;
}

} // namespace

TEST(GaussianUnimodal, PeakValue) {
  EXPECT_NEAR(gaussian_unimodal(pt(0.5, 0.5)), 1.0 / (2.0 * std::numbers::pi * 0.05), 1e-12);
  EXPECT_NEAR(gaussian_unimodal(pt(0.5, 0.5)), 3.1831, 1e-4);
}

TEST(GaussianUnimodal, FarTailIsNegligible) {
  EXPECT_LT(gaussian_unimodal(pt(10, 10)), 1e-100);
  EXPECT_GE(gaussian_unimodal(pt(10, 10)), 0.0);
}

TEST(GaussianUnimodal, TargetAgreesWithFreeFunction) {
  const auto t = make_gaussian_unimodal();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 20; ++i) {
    const Vector x = pt(u(rng), u(rng));
    EXPECT_NEAR(*t->evaluate(x), gaussian_unimodal(x), 1e-12);
  }
}

TEST(GaussianBimodal, IntegratesToOne) {
  const double z = oracle::trapezoid2d(
      [](double a, double b) { return gaussian_bimodal(pt(a, b)); }, -8, 12, -8, 12, 400);
  EXPECT_NEAR(z, 1.0, 1e-3);
}

TEST(GaussianBimodal, ComponentsHaveStatedCovariances) {
  const auto t = make_gaussian_bimodal();
  ASSERT_EQ(t->components().size(), 2u);
  EXPECT_NEAR(t->weights()[0], 0.7, 1e-15);
  EXPECT_NEAR(t->weights()[1], 0.3, 1e-15);
  for (const auto &c : t->components()) {
    EXPECT_NEAR(c.covariance().determinant(), 0.75, 1e-12);
  }
  EXPECT_EQ(t->components()[1].mean(), pt(4, 4));
}

TEST(ShapeTargets, MoonCrest) {
  EXPECT_NEAR(moon_density(pt(0, 0.3)), 1.0, 1e-12);
  EXPECT_LT(moon_density(pt(0, 2.0)), 1e-10);
}

TEST(ShapeTargets, WaveRidge) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng);
    EXPECT_NEAR(wave_density(pt(a, std::sin(std::numbers::pi * a / 2.0))), 1.0, 1e-12);
  }
}

TEST(ShapeTargets, DoubleBananaPeaksOnRing) {
  const ChargeMesh m = ChargeMesh::build({{-3, 3}, {-3, 3}}, {121, 121});
  double best = -1.0;
  Vector where(2);
  for (std::size_t f = 0; f < m.size(); ++f) {
    const Vector x = m.point(f).transpose();
    const double v = double_banana_density(x);
    if (v > best) {
      best = v;
      where = x;
    }
  }
  EXPECT_NEAR(where.norm(), std::sqrt(3.0), 0.15);
}

TEST(ShapeTargets, IdsAreStable) {
  EXPECT_EQ(ShapeTarget(ShapeTarget::Shape::Moon).id(), "moon");
  EXPECT_EQ(ShapeTarget(ShapeTarget::Shape::DoubleBanana).id(), "double_banana");
  EXPECT_EQ(ShapeTarget(ShapeTarget::Shape::Wave).id(), "wave");
}

TEST(NealsFunnel, LogDensityAtOrigin) {
  const double want = -0.5 * std::log(2 * std::numbers::pi * 9) - 0.5 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(neals_funnel_log(pt(0, 0)), want, 1e-12);
  EXPECT_NEAR(neals_funnel_log(pt(0, 0)), -2.936, 1e-3);
  EXPECT_NEAR(std::log(neals_funnel(pt(0, 0))), want, 1e-12);
}

TEST(NealsFunnel, ConditionalVarianceIsExpHalfX2) {
  // At x2 = 2, p(x1 | x2) = N(0, e); compare density ratios along x1.
  const double x2 = 2.0;
  const double var = std::exp(x2 / 2.0);
  EXPECT_NEAR(var, std::numbers::e, 1e-15);
  for (double x1 : {0.5, 1.0, 2.0}) {
    const double ratio = neals_funnel(pt(x1, x2)) / neals_funnel(pt(0, x2));
    EXPECT_NEAR(std::log(ratio), -x1 * x1 / (2.0 * var), 1e-12);
  }
}

TEST(NealsFunnel, MarginalOfX2IsNormalNine) {
  for (double x2 : {-4.0, -1.0, 0.0, 2.5}) {
    const double sd = std::sqrt(std::exp(x2 / 2.0));
    const double m = oracle::simpson(
        [&](double x1) { return neals_funnel(pt(x1, x2)); }, -12 * sd, 12 * sd, 2000);
    const double want =
        std::exp(-x2 * x2 / 18.0) / std::sqrt(2.0 * std::numbers::pi * 9.0);
    EXPECT_NEAR(m, want, 1e-9);
  }
}

TEST(UniformBox, ConstantInsideZeroOutside) {
  const UniformBoxTarget t({{0, 2}, {0, 1}});
  EXPECT_NEAR(*t.evaluate(pt(0.3, 0.3)), 0.5, 1e-15);
  EXPECT_EQ(t.density(pt(-0.1, 0.3)), 0.0);
  EXPECT_EQ(*t.evaluate(pt(2, 1)), *t.evaluate(pt(0, 0)));
}

TEST(AllTargets, DensitiesAreNonNegativeAndDeterministic) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-6, 6);
  for (const auto &t : gradient_targets()) {
    for (int i = 0; i < 200; ++i) {
      const Vector x = pt(u(rng), u(rng));
      const double a = t->density(x);
      EXPECT_GE(a, 0.0) << t->id();
      EXPECT_EQ(a, t->density(x)) << t->id();
    }
  }
}

TEST(AllTargets, DensityFloorClampsToZero) {
  const auto t = make_gaussian_unimodal();
  const double v = t->density(pt(100, 100));
  EXPECT_EQ(v, 0.0);
  EXPECT_EQ(t->log_density(pt(100, 100)), t->log_density(pt(100, 100)));
}

TEST(AllTargets, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (const auto &t : gradient_targets()) {
    ASSERT_TRUE(t->has_gradient());
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    for (int i = 0; i < 20; ++i) {
      Vector x = pt(u(rng), u(rng));
      if (t->id() == "gaussian_unimodal") {
        x = 0.5 * Vector::Ones(2) + 0.2 * x;
      }
      const Vector g = t->grad_log_density(x);
      const Vector fd = oracle::fd_gradient(
          [&](const Vector &y) { return t->log_density(y); }, x, 1e-5);
      EXPECT_LE((g - fd).norm(), 1e-4 * std::max(fd.norm(), 1.0))
          << t->id() << " at (" << x[0] << ", " << x[1] << ")";
    }
  }
}

TEST(AllTargets, GradientUnavailableThrows) {
  const UniformBoxTarget t({{0, 1}});
  EXPECT_FALSE(t.has_gradient());
  EXPECT_THROW(t.grad_log_density(Vector::Zero(1)), UnsupportedTargetError);
}
