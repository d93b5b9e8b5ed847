#include "eparvi/error.hpp"
#include "eparvi/mesh.hpp"
#include "eparvi/targets.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include <unistd.h>

using namespace eparvi;

namespace {

/// Target defined by an arbitrary function of the point.
class FunctionTarget : public TargetDensity {
public:
  FunctionTarget(Index d, DensityKind kind,
                 std::function<std::optional<double>(const ConstPointRef &)> f)
      : d_(d), kind_(kind), f_(std::move(f)) {}

  std::string id() const override { return "function"; }
  Index dimension() const override { return d_; }
  DensityKind kind() const override { return kind_; }
  std::optional<double> evaluate(const ConstPointRef &x) const override { return f_(x); }

private:
  Index d_;
  DensityKind kind_;
  std::function<std::optional<double>(const ConstPointRef &)> f_;
};

std::filesystem::path temp_file(const std::string &name) {
  return std::filesystem::temp_directory_path() /
         ("eparvi_test_mesh_" + std::to_string(::getpid()) + "_" + name);
}

} // namespace

TEST(BuildGrid, ThreeByThreeUnitSquare) {
  const ChargeMesh m = ChargeMesh::build({{0, 1}, {0, 1}}, {3, 3});
  ASSERT_EQ(m.size(), 9u);
  const double v[3] = {0.0, 0.5, 1.0};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(m.point(i * 3 + j)[0], v[i]);
      EXPECT_EQ(m.point(i * 3 + j)[1], v[j]);
    }
  }
}

TEST(BuildGrid, TwoPointsAreTheEndpoints) {
  const ChargeMesh m = ChargeMesh::build({{0, 1}}, {2});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.point(0)[0], 0.0);
  EXPECT_EQ(m.point(1)[0], 1.0);
}

TEST(BuildGrid, EndpointsAreExactOnAwkwardBounds) {
  const ChargeMesh m = ChargeMesh::build({{-7, 3}, {0.001, 0.05}}, {100, 20});
  EXPECT_EQ(m.point(0)[0], -7.0);
  EXPECT_EQ(m.point(0)[1], 0.001);
  EXPECT_EQ(m.point(m.size() - 1)[0], 3.0);
  EXPECT_EQ(m.point(m.size() - 1)[1], 0.05);
}

TEST(BuildGrid, PopulationGridHas640000Points) {
  const ChargeMesh m = ChargeMesh::build(
      {{0.001, 1.0}, {0.001, 0.05}, {0.001, 0.05}, {0.001, 1.0}}, {40, 20, 20, 40});
  EXPECT_EQ(m.size(), 640000u);
  EXPECT_EQ(m.points().rows(), 640000);
  EXPECT_EQ(m.points().cols(), 4);
}

TEST(BuildGrid, RejectsBadInput) {
  EXPECT_THROW(ChargeMesh::build({{0, 1}}, {1}), MeshError);
  EXPECT_THROW(ChargeMesh::build({{1, 1}}, {5}), MeshError);
  EXPECT_THROW(ChargeMesh::build({{0, 1}, {0, 1}}, {5}), MeshError);
}

TEST(BuildGrid, FlatAndGridIndicesAreABijection) {
  const ChargeMesh m = ChargeMesh::build(
      {{0.001, 1.0}, {0.001, 0.05}, {0.001, 0.05}, {0.001, 1.0}}, {8, 4, 4, 8});
  for (std::size_t f = 0; f < m.size(); ++f) {
    const auto g = m.grid_index(f);
    ASSERT_EQ(m.flat_index(g), f);
    for (std::size_t k = 0; k < 4; ++k) {
      const Interval iv = m.bounds()[k];
      const double expect =
          iv.low + static_cast<double>(g[k]) * iv.width() / static_cast<double>(m.counts()[k] - 1);
      EXPECT_NEAR(m.point(f)[static_cast<Index>(k)], expect, 1e-15);
    }
  }
  // Last axis varies fastest.
  EXPECT_EQ(m.grid_index(1), (std::vector<std::size_t>{0, 0, 0, 1}));
}

TEST(BuildGrid, CellDiagonal) {
  const ChargeMesh m = ChargeMesh::build({{0, 3}, {0, 4}}, {4, 5});
  EXPECT_DOUBLE_EQ(m.cell_diagonal(), std::sqrt(2.0));
}

TEST(AssignMagnitudes, LogOffsetSubtractsMinimum) {
  ChargeMesh m = ChargeMesh::build({{0, 2}}, {3});
  const FunctionTarget t(1, DensityKind::LogDensity, [](const ConstPointRef &x) {
    const double table[3] = {-5.0, -2.0, -1.0};
    return std::optional<double>(table[static_cast<int>(std::lround(x[0]))]);
  });
  assign_magnitudes(m, t, MagnitudeSpec{MagnitudeMode::LogDensityOffset, 1.0, {}, 1});
  const auto q = m.magnitudes();
  EXPECT_EQ(q[0], 0.0);
  EXPECT_EQ(q[1], 3.0);
  EXPECT_EQ(q[2], 4.0);
}

TEST(AssignMagnitudes, ConstantDensityNormalisesToQMax) {
  ChargeMesh m = ChargeMesh::build({{0, 1}, {0, 1}}, {7, 7});
  const UniformBoxTarget t({{0, 1}, {0, 1}});
  assign_magnitudes(m, t, MagnitudeSpec{MagnitudeMode::NormalizedDensity, 2.5, {}, 1});
  for (double q : m.magnitudes()) {
    EXPECT_DOUBLE_EQ(q, 2.5);
  }
}

TEST(AssignMagnitudes, UnimodalArgmaxAtCentre) {
  ChargeMesh m = ChargeMesh::build({{0, 1}, {0, 1}}, {50, 50});
  const auto t = make_gaussian_unimodal();
  assign_magnitudes(m, *t, MagnitudeSpec{});
  // Brute force: nearest grid point to (0.5, 0.5) by direct scan.
  std::size_t nearest = 0;
  double best = INFINITY;
  for (std::size_t f = 0; f < m.size(); ++f) {
    const double dx = m.point(f)[0] - 0.5;
    const double dy = m.point(f)[1] - 0.5;
    if (dx * dx + dy * dy < best) {
      best = dx * dx + dy * dy;
      nearest = f;
    }
  }
  // 50 points leaves 0.5 between two grid lines; all four neighbours tie.
  const double peak = m.magnitudes()[m.argmax_magnitude()];
  EXPECT_DOUBLE_EQ(peak, m.magnitudes()[nearest]);
  const auto g = m.grid_index(m.argmax_magnitude());
  EXPECT_TRUE(g[0] == 24 || g[0] == 25);
  EXPECT_TRUE(g[1] == 24 || g[1] == 25);
}

TEST(AssignMagnitudes, InvalidPointsGetZero) {
  ChargeMesh m = ChargeMesh::build({{-1, 1}}, {5});
  const FunctionTarget t(1, DensityKind::Density, [](const ConstPointRef &x) {
    return x[0] < 0 ? std::nullopt : std::optional<double>(1.0);
  });
  assign_magnitudes(m, t, MagnitudeSpec{});
  EXPECT_EQ(m.magnitudes()[0], 0.0);
  EXPECT_EQ(m.magnitudes()[1], 0.0);
  EXPECT_EQ(m.magnitudes()[2], 1.0);
}

TEST(AssignMagnitudes, AllInvalidIsAnError) {
  ChargeMesh m = ChargeMesh::build({{-1, 1}}, {5});
  const FunctionTarget t(1, DensityKind::Density,
                         [](const ConstPointRef &) { return std::optional<double>(); });
  EXPECT_THROW(assign_magnitudes(m, t, MagnitudeSpec{}), MeshError);
}

TEST(AssignMagnitudes, NegativeDensityViolatesPositivity) {
  ChargeMesh m = ChargeMesh::build({{-1, 1}}, {5});
  const FunctionTarget t(1, DensityKind::Density,
                         [](const ConstPointRef &x) { return std::optional<double>(x[0]); });
  EXPECT_THROW(assign_magnitudes(m, t, MagnitudeSpec{}), PositivityError);
}

TEST(AssignMagnitudes, TotalChargeNeutralises) {
  ChargeMesh m = ChargeMesh::build({{0, 1}, {0, 1}}, {20, 20});
  const auto t = make_gaussian_unimodal();
  MagnitudeSpec spec;
  spec.total_charge = 400.0;
  assign_magnitudes(m, *t, spec);
  EXPECT_NEAR(m.total_charge(), 400.0, 1e-9);
}

TEST(AssignMagnitudes, NonNegativeInEveryModeAndUnderAnnealing) {
  const auto t = make_gaussian_bimodal();
  for (auto mode : {MagnitudeMode::Density, MagnitudeMode::NormalizedDensity,
                    MagnitudeMode::LogDensityOffset}) {
    ChargeMesh m = ChargeMesh::build({{-3, 7}, {-3, 7}}, {30, 30});
    assign_magnitudes(m, *t, MagnitudeSpec{mode, 3.0, {}, 2});
    const auto sched = AnnealingSchedule::geometric(0.9);
    for (long step : {0L, 1L, 10L, 100L}) {
      for (double q : annealed_magnitudes(m, sched, step)) {
        EXPECT_GE(q, 0.0);
      }
    }
  }
}

TEST(AssignMagnitudes, LogOffsetMinimumIsZeroAndInvariantToScale) {
  const auto base = make_gaussian_bimodal();
  ChargeMesh a = ChargeMesh::build({{-3, 7}, {-3, 7}}, {25, 25});
  ChargeMesh b = a;
  const FunctionTarget scaled(2, DensityKind::Density, [&](const ConstPointRef &x) {
    return std::optional<double>(1e6 * base->density(x));
  });
  const FunctionTarget plain(2, DensityKind::Density, [&](const ConstPointRef &x) {
    return std::optional<double>(base->density(x));
  });
  const MagnitudeSpec spec{MagnitudeMode::LogDensityOffset, 1.0, {}, 1};
  assign_magnitudes(a, plain, spec);
  assign_magnitudes(b, scaled, spec);
  EXPECT_EQ(*std::min_element(a.magnitudes().begin(), a.magnitudes().end()), 0.0);
  for (std::size_t f = 0; f < a.size(); ++f) {
    EXPECT_NEAR(a.magnitudes()[f], b.magnitudes()[f], 1e-9 * (1.0 + a.magnitudes()[f]));
  }
}

TEST(AssignMagnitudes, WorkerCountDoesNotChangeResult) {
  const auto t = make_gaussian_bimodal();
  ChargeMesh a = ChargeMesh::build({{-3, 7}, {-3, 7}}, {40, 40});
  ChargeMesh b = a;
  assign_magnitudes(a, *t, MagnitudeSpec{MagnitudeMode::Density, 1.0, 400.0, 1});
  assign_magnitudes(b, *t, MagnitudeSpec{MagnitudeMode::Density, 1.0, 400.0, 4});
  EXPECT_TRUE(std::equal(a.magnitudes().begin(), a.magnitudes().end(),
                         b.magnitudes().begin()));
}

TEST(Annealing, ConstantScheduleLeavesMagnitudes) {
  ChargeMesh m = ChargeMesh::build({{0, 1}, {0, 1}}, {5, 5});
  assign_magnitudes(m, *make_gaussian_unimodal(), MagnitudeSpec{});
  const AnnealingSchedule s;
  for (long t : {0L, 7L, 1000L}) {
    const auto q = annealed_magnitudes(m, s, t);
    EXPECT_TRUE(std::equal(q.begin(), q.end(), m.magnitudes().begin()));
  }
}

TEST(Annealing, GeometricPower) {
  const auto s = AnnealingSchedule::geometric(0.99, 0.1);
  EXPECT_NEAR(s.multiplier(100), std::pow(0.99, 100), 1e-15);
  EXPECT_NEAR(s.multiplier(100), 0.366, 1e-3);
  EXPECT_DOUBLE_EQ(s.multiplier(0), 1.0);
  EXPECT_DOUBLE_EQ(s.multiplier(100000), 0.1);
}

TEST(Annealing, RejectsOutOfRange) {
  EXPECT_THROW(AnnealingSchedule::geometric(0.0), ConfigError);
  EXPECT_THROW(AnnealingSchedule::geometric(1.2), ConfigError);
  EXPECT_THROW(AnnealingSchedule::explicit_values({1.0, 0.0}), ConfigError);
  EXPECT_THROW(AnnealingSchedule::explicit_values({}), ConfigError);
}

TEST(Annealing, ExplicitRepeatsLastValue) {
  const auto s = AnnealingSchedule::explicit_values({1.0, 0.5, 0.25});
  EXPECT_EQ(s.multiplier(1), 0.5);
  EXPECT_EQ(s.multiplier(2), 0.25);
  EXPECT_EQ(s.multiplier(50), 0.25);
}

TEST(MeshCache, RoundTripIsBitExact) {
  ChargeMesh m = ChargeMesh::build({{-3, 7}, {-3, 7}}, {33, 21});
  const MagnitudeSpec spec{MagnitudeMode::Density, 1.0, 400.0, 1};
  assign_magnitudes(m, *make_gaussian_bimodal(), spec);
  const MeshCacheKey key{"gaussian_bimodal", m.bounds(), m.counts(), spec.mode,
                         spec.q_max, spec.total_charge};
  const auto path = temp_file("roundtrip.bin");
  save_mesh_cache(path, key, m);
  const auto loaded = load_mesh_cache(path, key);
  ASSERT_TRUE(loaded.has_value());
  ASSERT_EQ(loaded->size(), m.size());
  EXPECT_EQ(std::memcmp(loaded->magnitudes().data(), m.magnitudes().data(),
                        m.size() * sizeof(double)),
            0);
  EXPECT_TRUE(loaded->points() == m.points());
  EXPECT_EQ(loaded->q_scale(), m.q_scale());

  MeshCacheKey other = key;
  other.q_max = 2.0;
  EXPECT_FALSE(load_mesh_cache(path, other).has_value());
  std::filesystem::remove(path);
  EXPECT_FALSE(load_mesh_cache(path, key).has_value());
}

TEST(MeshCache, ModeNamesRoundTrip) {
  for (auto mode : {MagnitudeMode::Density, MagnitudeMode::NormalizedDensity,
                    MagnitudeMode::LogDensityOffset}) {
    EXPECT_EQ(magnitude_mode_from_string(to_string(mode)), mode);
  }
  EXPECT_THROW(magnitude_mode_from_string("sqrt"), ConfigError);
}
