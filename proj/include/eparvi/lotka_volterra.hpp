#pragma once

#include "eparvi/targets.hpp"
#include "eparvi/types.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace eparvi {

/// Predator-prey posterior setup: observed pelts, known initial state, noise
/// level and uniform prior box over theta = (a, b, c, d).
struct LVModel {
  /// Observation times, relative to the first one (which is 0).
  std::vector<double> times;
  std::vector<double> hare;
  std::vector<double> lynx;
  double x0 = 33.956;
  double y0 = 5.933;
  double sigma = 0.25;
  /// a, d ~ U(0.001, 1); b, c ~ U(0.001, 0.05).
  Box prior = {{0.001, 1.0}, {0.001, 0.05}, {0.001, 0.05}, {0.001, 1.0}};
  double step = 0.01;

  /// Throws DataError on size mismatch or non-positive observations.
  void validate() const;
};

/// Reads a CSV with header `year,hare,lynx`.
LVModel load_lv_model(const std::filesystem::path &csv);

struct LVTrajectory {
  std::vector<double> x;
  std::vector<double> y;
  /// False if any state is non-finite or <= 0 at an observation time.
  bool valid = true;
};

/// Fixed-step RK4 solution of dx/dt = a x - b x y, dy/dt = c x y - d y from
/// (x0, y0) at times[0], reported at every entry of `times`. Each interval is
/// split into equal steps no longer than `step`.
LVTrajectory lv_simulate(const std::array<double, 4> &theta, double x0,
                         double y0, const std::vector<double> &times,
                         double step);

LVTrajectory lv_simulate(const std::array<double, 4> &theta,
                         const LVModel &model);

/// Log posterior with uniform priors and log-normal observation noise, or
/// nullopt outside the prior box or for an invalid trajectory.
std::optional<double> lv_log_posterior(const std::array<double, 4> &theta,
                                       const LVModel &model);

class LotkaVolterraTarget : public TargetDensity {
public:
  explicit LotkaVolterraTarget(LVModel model);

  std::string id() const override { return "lotka_volterra"; }
  Index dimension() const override { return 4; }
  DensityKind kind() const override { return DensityKind::LogDensity; }
  std::optional<double> evaluate(const ConstPointRef &x) const override;
  std::map<std::string, double> reference_values() const override;

  const LVModel &model() const { return model_; }

private:
  LVModel model_;
};

} // namespace eparvi
