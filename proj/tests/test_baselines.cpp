#include "eparvi/baselines.hpp"
#include "eparvi/error.hpp"
#include "eparvi/targets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace eparvi;

namespace {

GaussianTarget standard_normal() {
  return GaussianTarget("n01", Vector::Zero(1), Eigen::MatrixXd::Identity(1, 1));
}

/// Flat density with an explicit zero gradient.
class FlatTarget : public TargetDensity {
public:
  std::string id() const override { return "flat"; }
  Index dimension() const override { return 1; }
  DensityKind kind() const override { return DensityKind::LogDensity; }
  std::optional<double> evaluate(const ConstPointRef &) const override { return 0.0; }
  bool has_gradient() const override { return true; }
  Vector grad_log_density(const ConstPointRef &) const override { return Vector::Zero(1); }
};

/// Weights 1 : 2 : 3 on [0,1), [1,2), [2,3); zero elsewhere.
class StepTarget : public TargetDensity {
public:
  std::string id() const override { return "steps"; }
  Index dimension() const override { return 1; }
  DensityKind kind() const override { return DensityKind::Density; }
  std::optional<double> evaluate(const ConstPointRef &x) const override {
    if (x[0] < 0.0 || x[0] >= 3.0) {
      return 0.0;
    }
    return std::floor(x[0]) + 1.0;
  }
};

MHConfig chain(long n, double step, double init, std::uint64_t seed = 1) {
  MHConfig c;
  c.n_samples = n;
  c.proposal_std = Vector::Constant(1, step);
  c.init = Vector::Constant(1, init);
  c.seed = seed;
  return c;
}

PointSet points_1d(Index n, double value) { return PointSet::Constant(n, 1, value); }

} // namespace

TEST(MetropolisHastings, StandardNormalVariance) {
  const GaussianTarget t = standard_normal();
  const MHResult r = metropolis_hastings(t, chain(100000, 1.0, 0.0));
  const double mean = r.samples.col(0).mean();
  const double var = (r.samples.col(0).array() - mean).square().mean();
  EXPECT_NEAR(var, 1.0, 0.05);
  EXPECT_EQ(r.samples.rows(), 80000);
  EXPECT_GT(r.acceptance_rate, 0.5);
  EXPECT_LT(r.acceptance_rate, 0.9);
}

TEST(MetropolisHastings, ConstantTargetAcceptsInBoxProposals) {
  const UniformBoxTarget t({{0, 10}});
  const MHResult r = metropolis_hastings(t, chain(20000, 0.01, 5.0));
  EXPECT_GT(r.acceptance_rate, 0.999);
}

TEST(MetropolisHastings, FixedSeedGivesIdenticalChain) {
  const GaussianTarget t = standard_normal();
  const MHResult a = metropolis_hastings(t, chain(5000, 0.7, 0.3, 42));
  const MHResult b = metropolis_hastings(t, chain(5000, 0.7, 0.3, 42));
  const MHResult c = metropolis_hastings(t, chain(5000, 0.7, 0.3, 43));
  EXPECT_TRUE(a.samples == b.samples);
  EXPECT_FALSE(a.samples == c.samples);
}

TEST(MetropolisHastings, OccupancyMatchesStepWeights) {
  const StepTarget t;
  const MHResult r = metropolis_hastings(t, chain(200000, 0.8, 1.5));
  double frac[3] = {0, 0, 0};
  for (Index i = 0; i < r.samples.rows(); ++i) {
    frac[static_cast<int>(std::floor(r.samples(i, 0)))] += 1.0;
  }
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(frac[k] / static_cast<double>(r.samples.rows()), (k + 1) / 6.0, 0.02) << k;
  }
}

TEST(MetropolisHastings, ZeroDensityStartWarns) {
  const StepTarget t;
  const MHResult r = metropolis_hastings(t, chain(100, 0.5, -10.0));
  EXPECT_FALSE(r.warnings.empty());
}

TEST(MetropolisHastings, ConfigValidation) {
  const GaussianTarget t = standard_normal();
  MHConfig c = chain(0, 1.0, 0.0);
  EXPECT_THROW(metropolis_hastings(t, c), ConfigError);
  c = chain(10, -1.0, 0.0);
  EXPECT_THROW(metropolis_hastings(t, c), ConfigError);
  c = chain(10, 1.0, 0.0);
  c.burn_in = 1.0;
  EXPECT_THROW(metropolis_hastings(t, c), ConfigError);
  c = chain(10, 1.0, 0.0);
  c.init = Vector::Zero(2);
  EXPECT_THROW(metropolis_hastings(t, c), ConfigError);
}

TEST(Langevin, StepSizeSchedule) {
  EXPECT_DOUBLE_EQ(langevin_step_size(0.01, 1.0, 0.55, 0), 0.01);
  double prev = INFINITY;
  for (long t = 0; t < 1000; ++t) {
    const double e = langevin_step_size(0.01, 1.0, 0.55, t);
    EXPECT_LT(e, prev);
    prev = e;
  }
  EXPECT_NEAR(langevin_step_size(0.01, 1.0, 0.55, 99), 0.01 * std::pow(100.0, -0.55), 1e-15);
}

TEST(Langevin, ZeroGradientIsPureDiffusion) {
  const FlatTarget t;
  LMCConfig c;
  c.n_iterations = 200;
  c.init = points_1d(4000, 0.0);
  c.seed = 5;
  const LMCResult r = langevin_evolve(t, c);
  double sum_eps = 0.0;
  for (long s = 0; s < c.n_iterations; ++s) {
    sum_eps += langevin_step_size(c.a, c.b, c.c, s);
  }
  EXPECT_NEAR(r.record.back().variance[0], 2.0 * sum_eps, 0.1 * 2.0 * sum_eps);
  ASSERT_EQ(r.record.size(), 200u);
  EXPECT_DOUBLE_EQ(r.record.front().step_size, 0.01);
}

TEST(Langevin, StandardNormalMean) {
  const GaussianTarget t = standard_normal();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3, 3);
  LMCConfig c;
  c.n_iterations = 10000;
  c.init.resize(400, 1);
  for (Index i = 0; i < 400; ++i) {
    c.init(i, 0) = u(rng);
  }
  c.seed = 2024;
  const LMCResult r = langevin_evolve(t, c);
  EXPECT_LT(std::abs(r.particles.col(0).mean()), 0.05);
}

TEST(Langevin, DeterministicAcrossWorkerCounts) {
  const GaussianTarget t = standard_normal();
  LMCConfig c;
  c.n_iterations = 50;
  c.init = points_1d(64, 1.0);
  c.seed = 3;
  const LMCResult a = langevin_evolve(t, c);
  c.workers = 4;
  const LMCResult b = langevin_evolve(t, c);
  EXPECT_TRUE(a.particles == b.particles);
}

TEST(Langevin, RequiresGradient) {
  const UniformBoxTarget t({{0, 1}});
  LMCConfig c;
  c.n_iterations = 5;
  c.init = points_1d(4, 0.5);
  EXPECT_THROW(langevin_evolve(t, c), UnsupportedTargetError);
}
