#pragma once

#include "eparvi/types.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace eparvi {

/// Densities below this are treated as exactly zero when converting to the
/// density scale, so magnitudes never carry subnormal noise.
inline constexpr double kDensityFloor = 1e-300;

enum class DensityKind {
  /// evaluate() returns p(x), possibly unnormalised, >= 0.
  Density,
  /// evaluate() returns log p(x) up to an additive constant.
  LogDensity,
};

/// A queryable, possibly unnormalised target density.
///
/// Implementations must be pure and reentrant: the mesh evaluates them from
/// several threads at once.
class TargetDensity {
public:
  virtual ~TargetDensity() = default;

  virtual std::string id() const = 0;
  virtual Index dimension() const = 0;
  virtual DensityKind kind() const = 0;

  /// Density or log-density (per kind()), or nullopt where the target is
  /// undefined (outside a prior's support, a diverging ODE, ...).
  virtual std::optional<double> evaluate(const ConstPointRef &x) const = 0;

  virtual bool has_gradient() const { return false; }

  /// Gradient of log p. Throws UnsupportedTargetError unless has_gradient().
  virtual Vector grad_log_density(const ConstPointRef &x) const;

  /// Named ground-truth scalars (means, mode locations, ...).
  virtual std::map<std::string, double> reference_values() const { return {}; }

  bool is_valid(const ConstPointRef &x) const { return evaluate(x).has_value(); }

  /// log p(x); -inf where invalid or where the density is zero.
  double log_density(const ConstPointRef &x) const;

  /// p(x) with values below kDensityFloor clamped to 0; 0 where invalid.
  double density(const ConstPointRef &x) const;
};

// Scalar density functions behind the built-in 2-D benchmark targets.

/// N(x | (0.5, 0.5), 0.05 I).
double gaussian_unimodal(const ConstPointRef &x);

/// 0.7 N((0,0), [[1,-.5],[-.5,1]]) + 0.3 N((4,4), [[1,.5],[.5,1]]).
double gaussian_bimodal(const ConstPointRef &x);

/// exp{-x1^2/2 - (10 x2 + 3 x1^2 - 3)^2 / 2}, unnormalised.
double moon_density(const ConstPointRef &x);

/// exp{-2 (x1^2 + x2^2 - 3)^2 + log(e^{-2(x1-2)^2} + e^{-2(x2+2)^2})},
/// unnormalised.
double double_banana_density(const ConstPointRef &x);

/// exp{-((x2 - sin(pi x1 / 2)) / 0.4)^2 / 2}, unnormalised.
double wave_density(const ConstPointRef &x);

/// Neal's funnel N(x2 | 0, sigma^2) N(x1 | 0, exp(x2 / 2)); the second
/// factor's variance is exp(x2 / 2).
double neals_funnel(const ConstPointRef &x, double sigma = 3.0);
double neals_funnel_log(const ConstPointRef &x, double sigma = 3.0);

/// Multivariate normal with explicit mean and covariance.
class GaussianTarget : public TargetDensity {
public:
  GaussianTarget(std::string id, Vector mean, Eigen::MatrixXd covariance);

  std::string id() const override { return id_; }
  Index dimension() const override { return mean_.size(); }
  DensityKind kind() const override { return DensityKind::Density; }
  std::optional<double> evaluate(const ConstPointRef &x) const override;
  bool has_gradient() const override { return true; }
  Vector grad_log_density(const ConstPointRef &x) const override;
  std::map<std::string, double> reference_values() const override;

  double log_pdf(const ConstPointRef &x) const;
  const Vector &mean() const { return mean_; }
  const Eigen::MatrixXd &covariance() const { return covariance_; }

private:
  std::string id_;
  Vector mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd precision_;
  double log_norm_;
};

class GaussianMixtureTarget : public TargetDensity {
public:
  GaussianMixtureTarget(std::string id, std::vector<double> weights,
                        std::vector<GaussianTarget> components);

  std::string id() const override { return id_; }
  Index dimension() const override;
  DensityKind kind() const override { return DensityKind::Density; }
  std::optional<double> evaluate(const ConstPointRef &x) const override;
  bool has_gradient() const override { return true; }
  Vector grad_log_density(const ConstPointRef &x) const override;
  std::map<std::string, double> reference_values() const override;

  const std::vector<double> &weights() const { return weights_; }
  const std::vector<GaussianTarget> &components() const { return components_; }

private:
  std::string id_;
  std::vector<double> weights_;
  std::vector<GaussianTarget> components_;
};

/// One of the unnormalised 2-D shapes: moon, double banana or wave.
class ShapeTarget : public TargetDensity {
public:
  enum class Shape { Moon, DoubleBanana, Wave };

  explicit ShapeTarget(Shape shape) : shape_(shape) {}

  std::string id() const override;
  Index dimension() const override { return 2; }
  DensityKind kind() const override { return DensityKind::Density; }
  std::optional<double> evaluate(const ConstPointRef &x) const override;
  bool has_gradient() const override { return true; }
  Vector grad_log_density(const ConstPointRef &x) const override;

  double log_value(const ConstPointRef &x) const;

private:
  Shape shape_;
};

class NealsFunnelTarget : public TargetDensity {
public:
  explicit NealsFunnelTarget(double sigma = 3.0) : sigma_(sigma) {}

  std::string id() const override { return "neals_funnel"; }
  Index dimension() const override { return 2; }
  DensityKind kind() const override { return DensityKind::Density; }
  std::optional<double> evaluate(const ConstPointRef &x) const override;
  bool has_gradient() const override { return true; }
  Vector grad_log_density(const ConstPointRef &x) const override;
  std::map<std::string, double> reference_values() const override;

  double sigma() const { return sigma_; }

private:
  double sigma_;
};

/// Constant density on a box, zero outside. Handy for checking that pure
/// repulsion against a neutral background spreads particles evenly.
class UniformBoxTarget : public TargetDensity {
public:
  explicit UniformBoxTarget(Box box);

  std::string id() const override { return "uniform_box"; }
  Index dimension() const override { return static_cast<Index>(box_.size()); }
  DensityKind kind() const override { return DensityKind::Density; }
  std::optional<double> evaluate(const ConstPointRef &x) const override;

private:
  Box box_;
  double value_;
};

std::unique_ptr<GaussianTarget> make_gaussian_unimodal();
std::unique_ptr<GaussianMixtureTarget> make_gaussian_bimodal();

} // namespace eparvi
