#include "eparvi/error.hpp"
#include "eparvi/integrators.hpp"
#include "eparvi/targets.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace eparvi;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) {
    out[k++] = x;
  }
  return out;
}

/// p(x) = max(x0, 0) on the real line; ratios are read off directly.
class LinearTarget : public TargetDensity {
public:
  std::string id() const override { return "linear"; }
  Index dimension() const override { return 1; }
  DensityKind kind() const override { return DensityKind::Density; }
  std::optional<double> evaluate(const ConstPointRef &x) const override {
    return std::max(x[0], 0.0);
  }
};

GaussianTarget standard_normal() {
  return GaussianTarget("n01", Vector::Zero(1), Eigen::MatrixXd::Identity(1, 1));
}

} // namespace

TEST(EulerStep, Examples) {
  const Vector x = euler_step(Vector::Zero(2), vec({1, 0}), vec({0.1}));
  EXPECT_DOUBLE_EQ(x[0], 0.1);
  EXPECT_EQ(x[1], 0.0);
  const Vector x0 = vec({0.3, -2.0});
  EXPECT_EQ(euler_step(x0, Vector::Zero(2), vec({0.7})), x0);
  EXPECT_EQ(euler_step(x0, vec({5.0, -9.0}), vec({0.0})), x0);
}

TEST(EulerStep, PerDimensionStepSizes) {
  const Vector x = euler_step(Vector::Zero(2), vec({1, 1}), vec({0.1, 0.01}));
  EXPECT_DOUBLE_EQ(x[0], 0.1);
  EXPECT_DOUBLE_EQ(x[1], 0.01);
}

TEST(EulerStep, NonFiniteInputThrows) {
  EXPECT_THROW(euler_step(vec({NAN}), vec({1}), vec({0.1})), IntegratorError);
  EXPECT_THROW(euler_step(vec({0}), vec({INFINITY}), vec({0.1})), IntegratorError);
}

TEST(VerletStep, Examples) {
  const VerletState s = verlet_step(vec({1}), vec({0.1}), vec({0}), vec({1}));
  EXPECT_DOUBLE_EQ(s.position[0], 1.1);
  EXPECT_DOUBLE_EQ(s.displacement[0], 0.1);
  const VerletState r = verlet_step(vec({2}), vec({0}), vec({1}), vec({0.01}));
  EXPECT_DOUBLE_EQ(r.position[0], 2.01);
}

TEST(VerletStep, ConstantForceGivesUniformAcceleration) {
  // From rest, after n steps the displacement is F dt^2 n(n+1)/2, which is the
  // uniform-acceleration law sampled on the leapfrog grid.
  const double f = 0.3;
  const double dt2 = 0.01;
  Vector x = Vector::Zero(1);
  Vector disp = Vector::Zero(1);
  for (int n = 1; n <= 50; ++n) {
    const VerletState s = verlet_step(x, disp, vec({f}), vec({dt2}));
    x = s.position;
    disp = s.displacement;
    EXPECT_NEAR(x[0], f * dt2 * n * (n + 1) / 2.0, 1e-12);
    EXPECT_NEAR(disp[0], f * dt2 * n, 1e-12);
  }
}

TEST(VerletStep, NonFiniteInputThrows) {
  EXPECT_THROW(verlet_step(vec({0}), vec({NAN}), vec({0}), vec({1})), IntegratorError);
}

TEST(DampedVerletStep, Examples) {
  const VerletState s =
      damped_verlet_step(vec({1}), vec({0.1}), vec({0}), vec({1}), vec({0.5}));
  EXPECT_DOUBLE_EQ(s.position[0], 1.05);
  EXPECT_DOUBLE_EQ(s.displacement[0], 0.1);
  const VerletState frozen =
      damped_verlet_step(vec({1}), vec({0.1}), vec({3}), vec({1}), vec({1e-300}));
  EXPECT_DOUBLE_EQ(frozen.position[0], 1.0);
}

TEST(DampedVerletStep, UnitDampingReducesToVerletBitForBit) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector x(3);
    Vector p(3);
    Vector f(3);
    for (Index k = 0; k < 3; ++k) {
      x[k] = n(rng);
      p[k] = n(rng);
      f[k] = n(rng);
    }
    const VerletState a = verlet_step(x, p, f, vec({0.02}));
    const VerletState b = damped_verlet_step(x, p, f, vec({0.02}), vec({1.0}));
    EXPECT_TRUE(a.position == b.position);
    EXPECT_TRUE(a.displacement == b.displacement);
  }
}

TEST(Rules, EulerFromRestMatchesVerletFromRest) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector x(2);
    Vector f(2);
    for (Index k = 0; k < 2; ++k) {
      x[k] = n(rng);
      f[k] = n(rng);
    }
    const double step = 0.037;
    const Vector e = euler_step(x, f, vec({step}));
    const VerletState v = verlet_step(x, Vector::Zero(2), f, vec({step}));
    EXPECT_TRUE(e == v.position);
  }
}

TEST(Rules, ApplyRuleDispatches) {
  const Vector x = vec({1.0});
  const Vector p = vec({0.1});
  const Vector f = vec({0.0});
  EXPECT_DOUBLE_EQ(apply_rule(UpdateRule::euler(0.5), x, p, vec({2.0})).position[0], 2.0);
  EXPECT_DOUBLE_EQ(apply_rule(UpdateRule::verlet(1.0), x, p, f).position[0], 1.1);
  EXPECT_DOUBLE_EQ(apply_rule(UpdateRule::damped_verlet(1.0, 0.5), x, p, f).position[0], 1.05);
}

TEST(Rules, ValidationRejectsOutOfRange) {
  EXPECT_THROW(UpdateRule::euler(-0.1).validate(2), ConfigError);
  EXPECT_THROW(UpdateRule::verlet(0.0).validate(2), ConfigError);
  EXPECT_THROW(UpdateRule::damped_verlet(0.1, 0.0).validate(2), ConfigError);
  EXPECT_THROW(UpdateRule::damped_verlet(0.1, 1.5).validate(2), ConfigError);
  UpdateRule r = UpdateRule::euler(0.1);
  r.tau = vec({0.1, 0.2, 0.3});
  EXPECT_THROW(r.validate(2), ConfigError);
  EXPECT_NO_THROW(r.validate(3));
  EXPECT_NO_THROW(UpdateRule::euler(0.0).validate(4));
}

TEST(Rules, KindNamesRoundTrip) {
  for (auto k : {UpdateRule::Kind::Euler, UpdateRule::Kind::Verlet,
                 UpdateRule::Kind::DampedVerlet}) {
    EXPECT_EQ(update_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(update_kind_from_string("rk4"), ConfigError);
}

TEST(Perturb, Examples) {
  std::mt19937_64 rng(1);
  const Vector x = vec({0.2, 0.4});
  EXPECT_EQ(perturb(x, PerturbationPolicy{0.0, 1}, 0, rng), x);
  EXPECT_EQ(perturb(x, PerturbationPolicy{1.0, 5}, 3, rng), x);
  EXPECT_NE(perturb(x, PerturbationPolicy{1.0, 5}, 10, rng), x);
}

TEST(Perturb, ReproducibleFromIdenticalStreamState) {
  std::mt19937_64 a(99);
  std::mt19937_64 b(99);
  const Vector x = vec({0.0, 0.0});
  const PerturbationPolicy pol{1.0, 1};
  EXPECT_TRUE(perturb(x, pol, 0, a) == perturb(x, pol, 0, b));
}

TEST(Perturb, MeanPreserving) {
  std::mt19937_64 rng(2024);
  const double sigma = 0.5;
  const PerturbationPolicy pol{sigma, 1};
  Vector sum = Vector::Zero(2);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    sum += perturb(Vector::Zero(2), pol, i, rng);
  }
  const Vector mean = sum / n;
  EXPECT_LT(std::abs(mean[0]), 3.0 * sigma / 100.0);
  EXPECT_LT(std::abs(mean[1]), 3.0 * sigma / 100.0);
}

TEST(MhFilter, AcceptsUphillAlways) {
  const LinearTarget t;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    bool acc = false;
    EXPECT_EQ(mh_filter(vec({1.0}), vec({1.5}), t, rng, &acc)[0], 1.5);
    EXPECT_TRUE(acc);
  }
}

TEST(MhFilter, NeverAcceptsZeroDensity) {
  const LinearTarget t;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(mh_filter(vec({1.0}), vec({-1.0}), t, rng)[0], 1.0);
  }
}

TEST(MhFilter, BothZeroKeepsOld) {
  const LinearTarget t;
  std::mt19937_64 rng(4);
  bool acc = true;
  EXPECT_EQ(mh_filter(vec({-2.0}), vec({-1.0}), t, rng, &acc)[0], -2.0);
  EXPECT_FALSE(acc);
}

TEST(MhFilter, HalfRatioAcceptsHalfTheTime) {
  const LinearTarget t;
  int accepted = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(i) * 7919 + 1);
    bool acc = false;
    mh_filter(vec({1.0}), vec({0.5}), t, rng, &acc);
    accepted += acc ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(accepted) / n, 0.5, 0.02);
}

TEST(MhFilter, RandomWalkTargetsStandardNormal) {
  const GaussianTarget t = standard_normal();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> step(0.0, 1.0);
  Vector x = Vector::Zero(1);
  const int n = 100000;
  double s = 0.0;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    Vector prop = x;
    prop[0] += step(rng);
    x = mh_filter(x, prop, t, rng);
    s += x[0];
    ss += x[0] * x[0];
  }
  const double mean = s / n;
  const double var = ss / n - mean * mean;
  EXPECT_LT(std::abs(mean), 0.05);
  EXPECT_NEAR(var, 1.0, 0.1);
}
