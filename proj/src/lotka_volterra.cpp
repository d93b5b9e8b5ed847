#include "eparvi/lotka_volterra.hpp"

#include "eparvi/csv.hpp"
#include "eparvi/error.hpp"

#include <cmath>
#include <numbers>

namespace eparvi {

void LVModel::validate() const {
  if (times.empty() || times.size() != hare.size() ||
      times.size() != lynx.size()) {
    throw DataError("LV data needs matching, non-empty time/hare/lynx columns");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(hare[i] > 0.0) || !(lynx[i] > 0.0)) {
      throw DataError("LV observations must be positive (row " +
                      std::to_string(i) + ")");
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw DataError("LV times must be strictly ascending");
    }
  }
  if (prior.size() != 4) {
    throw DataError("LV prior needs four intervals");
  }
  if (!(sigma > 0.0) || !(step > 0.0) || !(x0 > 0.0) || !(y0 > 0.0)) {
    throw DataError("LV sigma, step and initial state must be positive");
  }
}

LVModel load_lv_model(const std::filesystem::path &csv) {
  const CsvTable table = read_csv(csv);
  const auto year = table.column("year");
  LVModel model;
  model.hare = table.column("hare");
  model.lynx = table.column("lynx");
  model.times.reserve(year.size());
  for (double y : year) {
    model.times.push_back(y - year.front());
  }
  model.validate();
  return model;
}

namespace {

struct State {
  double x;
  double y;
};

inline State rates(const std::array<double, 4> &p, State s) {
  return {p[0] * s.x - p[1] * s.x * s.y, p[2] * s.x * s.y - p[3] * s.y};
}

} // namespace

LVTrajectory lv_simulate(const std::array<double, 4> &theta, double x0,
                         double y0, const std::vector<double> &times,
                         double step) {
  LVTrajectory out;
  out.x.reserve(times.size());
  out.y.reserve(times.size());
  State s{x0, y0};
  out.x.push_back(s.x);
  out.y.push_back(s.y);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double span = times[i] - times[i - 1];
    const auto n = static_cast<long>(std::max(1.0, std::ceil(span / step - 1e-9)));
    const double h = span / static_cast<double>(n);
    for (long k = 0; k < n; ++k) {
      const State k1 = rates(theta, s);
      const State k2 = rates(theta, {s.x + 0.5 * h * k1.x, s.y + 0.5 * h * k1.y});
      const State k3 = rates(theta, {s.x + 0.5 * h * k2.x, s.y + 0.5 * h * k2.y});
      const State k4 = rates(theta, {s.x + h * k3.x, s.y + h * k3.y});
      s.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
      s.y += h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
    }
    out.x.push_back(s.x);
    out.y.push_back(s.y);
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || s.x <= 0.0 || s.y <= 0.0) {
      out.valid = false;
      return out;
    }
  }
  if (!(x0 > 0.0) || !(y0 > 0.0)) {
    out.valid = false;
  }
  return out;
}

LVTrajectory lv_simulate(const std::array<double, 4> &theta,
                         const LVModel &model) {
  return lv_simulate(theta, model.x0, model.y0, model.times, model.step);
}

std::optional<double> lv_log_posterior(const std::array<double, 4> &theta,
                                       const LVModel &model) {
  double log_prior = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (!model.prior[k].contains(theta[k])) {
      return std::nullopt;
    }
    log_prior -= std::log(model.prior[k].width());
  }
  const LVTrajectory traj = lv_simulate(theta, model);
  if (!traj.valid) {
    return std::nullopt;
  }
  const auto n = static_cast<double>(model.times.size());
  const double sigma = model.sigma;
  double jacobian = 0.0;
  double sse = 0.0;
  for (std::size_t i = 0; i < model.times.size(); ++i) {
    const double lx = std::log(model.hare[i]);
    const double ly = std::log(model.lynx[i]);
    jacobian += lx + ly;
    const double rx = lx - std::log(traj.x[i]);
    const double ry = ly - std::log(traj.y[i]);
    sse += rx * rx + ry * ry;
  }
  const double log_norm = std::log(std::sqrt(2.0 * std::numbers::pi) * sigma);
  return log_prior - 2.0 * n * log_norm - jacobian - sse / (2.0 * sigma * sigma);
}

LotkaVolterraTarget::LotkaVolterraTarget(LVModel model) : model_(std::move(model)) {
  model_.validate();
}

std::optional<double> LotkaVolterraTarget::evaluate(const ConstPointRef &x) const {
  if (x.size() != 4) {
    throw InvalidDimensionError("lotka_volterra expects 4 parameters");
  }
  return lv_log_posterior({x[0], x[1], x[2], x[3]}, model_);
}

std::map<std::string, double> LotkaVolterraTarget::reference_values() const {
  // Literature values for the hare/lynx record, plus the reported grid MAP.
  return {{"a", 0.55},      {"b", 0.028},     {"c", 0.024},
          {"d", 0.80},      {"map_a", 0.539}, {"map_b", 0.027},
          {"map_c", 0.024}, {"map_d", 0.795}};
}

} // namespace eparvi
