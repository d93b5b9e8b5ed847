#include "eparvi/targets.hpp"

#include "eparvi/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace eparvi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836; // log(2 pi)

void require_dimension(const ConstPointRef &x, Index d, const char *who) {
  if (x.size() != d) {
    throw InvalidDimensionError(std::string(who) + ": expected dimension " +
                                std::to_string(d) + ", got " +
                                std::to_string(x.size()));
  }
}

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) {
    return m;
  }
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double clamp_density(double p) { return p < kDensityFloor ? 0.0 : p; }

} // namespace

Vector TargetDensity::grad_log_density(const ConstPointRef &) const {
  throw UnsupportedTargetError("target '" + id() + "' has no gradient");
}

double TargetDensity::log_density(const ConstPointRef &x) const {
  const auto value = evaluate(x);
  if (!value) {
    return -std::numeric_limits<double>::infinity();
  }
  if (kind() == DensityKind::LogDensity) {
    return *value;
  }
  return *value > 0.0 ? std::log(*value)
                      : -std::numeric_limits<double>::infinity();
}

double TargetDensity::density(const ConstPointRef &x) const {
  const auto value = evaluate(x);
  if (!value) {
    return 0.0;
  }
  if (kind() == DensityKind::LogDensity) {
    return clamp_density(std::exp(*value));
  }
  return clamp_density(*value);
}

// --- Gaussian --------------------------------------------------------------

GaussianTarget::GaussianTarget(std::string id, Vector mean,
                               Eigen::MatrixXd covariance)
    : id_(std::move(id)), mean_(std::move(mean)),
      covariance_(std::move(covariance)) {
  const Index d = mean_.size();
  if (covariance_.rows() != d || covariance_.cols() != d) {
    throw InvalidDimensionError("covariance shape does not match mean");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw Error("covariance is not positive definite");
  }
  precision_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
  const double log_det =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(d) * kLog2Pi + log_det);
}

double GaussianTarget::log_pdf(const ConstPointRef &x) const {
  require_dimension(x, mean_.size(), "gaussian");
  const Vector diff = x - mean_;
  return log_norm_ - 0.5 * diff.dot(precision_ * diff);
}

std::optional<double> GaussianTarget::evaluate(const ConstPointRef &x) const {
  return std::exp(log_pdf(x));
}

Vector GaussianTarget::grad_log_density(const ConstPointRef &x) const {
  require_dimension(x, mean_.size(), "gaussian");
  return -(precision_ * (x - mean_));
}

std::map<std::string, double> GaussianTarget::reference_values() const {
  std::map<std::string, double> out;
  for (Index k = 0; k < mean_.size(); ++k) {
    out["mean_" + std::to_string(k)] = mean_[k];
    out["std_" + std::to_string(k)] = std::sqrt(covariance_(k, k));
  }
  return out;
}

GaussianMixtureTarget::GaussianMixtureTarget(
    std::string id, std::vector<double> weights,
    std::vector<GaussianTarget> components)
    : id_(std::move(id)), weights_(std::move(weights)),
      components_(std::move(components)) {
  if (weights_.size() != components_.size() || components_.empty()) {
    throw Error("mixture needs one weight per component");
  }
}

Index GaussianMixtureTarget::dimension() const {
  return components_.front().dimension();
}

std::optional<double>
GaussianMixtureTarget::evaluate(const ConstPointRef &x) const {
  double p = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    p += weights_[k] * std::exp(components_[k].log_pdf(x));
  }
  return p;
}

Vector GaussianMixtureTarget::grad_log_density(const ConstPointRef &x) const {
  // Responsibility-weighted component scores, computed in log space.
  std::vector<double> log_terms(components_.size());
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < components_.size(); ++k) {
    log_terms[k] = std::log(weights_[k]) + components_[k].log_pdf(x);
    max_term = std::max(max_term, log_terms[k]);
  }
  double total = 0.0;
  for (double &t : log_terms) {
    t = std::exp(t - max_term);
    total += t;
  }
  Vector grad = Vector::Zero(dimension());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    grad += (log_terms[k] / total) * components_[k].grad_log_density(x);
  }
  return grad;
}

std::map<std::string, double> GaussianMixtureTarget::reference_values() const {
  std::map<std::string, double> out;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto tag = std::to_string(k);
    out["weight_" + tag] = weights_[k];
    for (Index i = 0; i < dimension(); ++i) {
      out["mean_" + tag + "_" + std::to_string(i)] = components_[k].mean()[i];
    }
  }
  return out;
}

std::unique_ptr<GaussianTarget> make_gaussian_unimodal() {
  return std::make_unique<GaussianTarget>(
      "gaussian_unimodal", Vector::Constant(2, 0.5),
      Eigen::MatrixXd::Identity(2, 2) * 0.05);
}

std::unique_ptr<GaussianMixtureTarget> make_gaussian_bimodal() {
  Eigen::MatrixXd cov1(2, 2);
  cov1 << 1.0, -0.5, -0.5, 1.0;
  Eigen::MatrixXd cov2(2, 2);
  cov2 << 1.0, 0.5, 0.5, 1.0;
  std::vector<GaussianTarget> parts;
  parts.emplace_back("mode_1", Vector::Zero(2), cov1);
  parts.emplace_back("mode_2", Vector::Constant(2, 4.0), cov2);
  return std::make_unique<GaussianMixtureTarget>(
      "gaussian_bimodal", std::vector<double>{0.7, 0.3}, std::move(parts));
}

double gaussian_unimodal(const ConstPointRef &x) {
  static const auto target = make_gaussian_unimodal();
  return *target->evaluate(x);
}

double gaussian_bimodal(const ConstPointRef &x) {
  static const auto target = make_gaussian_bimodal();
  return *target->evaluate(x);
}

// --- Shapes ----------------------------------------------------------------

namespace {

double moon_log(double x1, double x2) {
  const double u = 10.0 * x2 + 3.0 * x1 * x1 - 3.0;
  return -0.5 * x1 * x1 - 0.5 * u * u;
}

double banana_log(double x1, double x2) {
  const double ring = x1 * x1 + x2 * x2 - 3.0;
  const double a = -2.0 * (x1 - 2.0) * (x1 - 2.0);
  const double b = -2.0 * (x2 + 2.0) * (x2 + 2.0);
  return -2.0 * ring * ring + log_sum_exp(a, b);
}

double wave_log(double x1, double x2) {
  const double u = (x2 - std::sin(std::numbers::pi * x1 / 2.0)) / 0.4;
  return -0.5 * u * u;
}

} // namespace

double moon_density(const ConstPointRef &x) {
  require_dimension(x, 2, "moon");
  return clamp_density(std::exp(moon_log(x[0], x[1])));
}

double double_banana_density(const ConstPointRef &x) {
  require_dimension(x, 2, "double_banana");
  return clamp_density(std::exp(banana_log(x[0], x[1])));
}

double wave_density(const ConstPointRef &x) {
  require_dimension(x, 2, "wave");
  return clamp_density(std::exp(wave_log(x[0], x[1])));
}

std::string ShapeTarget::id() const {
  switch (shape_) {
  case Shape::Moon:
    return "moon";
  case Shape::DoubleBanana:
    return "double_banana";
  case Shape::Wave:
    return "wave";
  }
  return "unknown";
}

double ShapeTarget::log_value(const ConstPointRef &x) const {
  require_dimension(x, 2, "shape");
  switch (shape_) {
  case Shape::Moon:
    return moon_log(x[0], x[1]);
  case Shape::DoubleBanana:
    return banana_log(x[0], x[1]);
  case Shape::Wave:
    return wave_log(x[0], x[1]);
  }
  return 0.0;
}

std::optional<double> ShapeTarget::evaluate(const ConstPointRef &x) const {
  return clamp_density(std::exp(log_value(x)));
}

Vector ShapeTarget::grad_log_density(const ConstPointRef &x) const {
  require_dimension(x, 2, "shape");
  const double x1 = x[0];
  const double x2 = x[1];
  Vector g(2);
  switch (shape_) {
  case Shape::Moon: {
    const double u = 10.0 * x2 + 3.0 * x1 * x1 - 3.0;
    g << -x1 - u * 6.0 * x1, -10.0 * u;
    break;
  }
  case Shape::DoubleBanana: {
    const double ring = x1 * x1 + x2 * x2 - 3.0;
    const double a = -2.0 * (x1 - 2.0) * (x1 - 2.0);
    const double b = -2.0 * (x2 + 2.0) * (x2 + 2.0);
    const double lse = log_sum_exp(a, b);
    const double wa = std::exp(a - lse);
    const double wb = std::exp(b - lse);
    g << -8.0 * ring * x1 + wa * (-4.0 * (x1 - 2.0)),
        -8.0 * ring * x2 + wb * (-4.0 * (x2 + 2.0));
    break;
  }
  case Shape::Wave: {
    const double half_pi = std::numbers::pi / 2.0;
    const double u = (x2 - std::sin(half_pi * x1)) / 0.4;
    g << u / 0.4 * std::cos(half_pi * x1) * half_pi, -u / 0.4;
    break;
  }
  }
  return g;
}

// --- Funnel ----------------------------------------------------------------

double neals_funnel_log(const ConstPointRef &x, double sigma) {
  require_dimension(x, 2, "neals_funnel");
  const double x1 = x[0];
  const double x2 = x[1];
  const double var1 = std::exp(x2 / 2.0);
  return -0.5 * (kLog2Pi + std::log(sigma * sigma)) -
         x2 * x2 / (2.0 * sigma * sigma) - 0.5 * (kLog2Pi + x2 / 2.0) -
         x1 * x1 / (2.0 * var1);
}

double neals_funnel(const ConstPointRef &x, double sigma) {
  return clamp_density(std::exp(neals_funnel_log(x, sigma)));
}

std::optional<double> NealsFunnelTarget::evaluate(const ConstPointRef &x) const {
  return neals_funnel(x, sigma_);
}

Vector NealsFunnelTarget::grad_log_density(const ConstPointRef &x) const {
  require_dimension(x, 2, "neals_funnel");
  const double x1 = x[0];
  const double x2 = x[1];
  const double inv_var1 = std::exp(-x2 / 2.0);
  Vector g(2);
  g << -x1 * inv_var1,
      -x2 / (sigma_ * sigma_) - 0.25 + 0.25 * x1 * x1 * inv_var1;
  return g;
}

std::map<std::string, double> NealsFunnelTarget::reference_values() const {
  return {{"mean_0", 0.0}, {"mean_1", 0.0}, {"std_1", sigma_}};
}

// --- Uniform box ------------------------------------------------------------

UniformBoxTarget::UniformBoxTarget(Box box) : box_(std::move(box)) {
  double volume = 1.0;
  for (const auto &axis : box_) {
    if (!(axis.high > axis.low)) {
      throw Error("uniform box needs low < high on every axis");
    }
    volume *= axis.width();
  }
  value_ = 1.0 / volume;
}

std::optional<double> UniformBoxTarget::evaluate(const ConstPointRef &x) const {
  require_dimension(x, dimension(), "uniform_box");
  return box_contains(box_, x) ? value_ : 0.0;
}

} // namespace eparvi
