#include "eparvi/logistic_regression.hpp"

#include "eparvi/csv.hpp"
#include "eparvi/error.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace eparvi {

namespace {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_weights(const ConstPointRef &w, const LogisticDataset &data) {
  if (w.size() != data.features()) {
    throw InvalidDimensionError("weight vector has " + std::to_string(w.size()) +
                                " entries, dataset has " +
                                std::to_string(data.features()) + " features");
  }
}

LogisticDataset take_rows(const LogisticDataset &data,
                          const std::vector<Index> &rows) {
  LogisticDataset out;
  out.X.resize(static_cast<Index>(rows.size()), data.features());
  out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Index>(i)) = data.X.row(rows[i]);
    out.y[static_cast<Index>(i)] = data.y[rows[i]];
  }
  return out;
}

} // namespace

LogisticDataset load_logistic_csv(const std::filesystem::path &csv) {
  const CsvTable table = read_csv(csv);
  const std::size_t cols = table.header.size();
  if (cols < 2 || table.rows.empty()) {
    throw DataError(csv.string() + ": need at least one feature and one row");
  }
  LogisticDataset data;
  data.X.resize(static_cast<Index>(table.rows.size()),
                static_cast<Index>(cols - 1));
  data.y.resize(static_cast<Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto &row = table.rows[i];
    for (std::size_t k = 0; k + 1 < cols; ++k) {
      data.X(static_cast<Index>(i), static_cast<Index>(k)) = row[k];
    }
    const double label = row[cols - 1];
    if (label != 0.0 && label != 1.0) {
      throw DataError(csv.string() + ": label in row " + std::to_string(i + 1) +
                      " is not 0 or 1");
    }
    data.y[static_cast<Index>(i)] = label;
  }
  return data;
}

void standardize(LogisticDataset &data) {
  const auto n = static_cast<double>(data.rows());
  for (Index k = 0; k < data.features(); ++k) {
    auto col = data.X.col(k);
    const double mean = col.sum() / n;
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / n);
    if (sd > 0.0) {
      col /= sd;
    }
  }
}

DatasetSplit split_dataset(const LogisticDataset &data, double train_fraction,
                           std::uint64_t seed) {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw ConfigError("split.train_fraction", "must lie in (0, 1)");
  }
  std::vector<Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  // Explicit Fisher-Yates on raw engine output: std::shuffle and
  // uniform_int_distribution differ between standard libraries.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::lround(train_fraction * static_cast<double>(order.size())));
  DatasetSplit split;
  split.train = take_rows(
      data, std::vector<Index>(order.begin(), order.begin() + n_train));
  split.test =
      take_rows(data, std::vector<Index>(order.begin() + n_train, order.end()));
  return split;
}

double blr_log_posterior(const ConstPointRef &w, const LogisticDataset &data,
                         double alpha) {
  check_weights(w, data);
  const Vector z = data.X * w;
  double ll = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    ll += data.y[i] * z[i] - softplus(z[i]);
  }
  return ll - w.squaredNorm() / (2.0 * alpha);
}

Vector blr_gradient(const ConstPointRef &w, const LogisticDataset &data,
                    double alpha) {
  check_weights(w, data);
  const Vector z = data.X * w;
  Vector resid(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    resid[i] = data.y[i] - sigmoid(z[i]);
  }
  return data.X.transpose() * resid - w / alpha;
}

double classification_accuracy(const ConstPointRef &w,
                               const LogisticDataset &data) {
  check_weights(w, data);
  const Vector z = data.X * w;
  Index correct = 0;
  for (Index i = 0; i < z.size(); ++i) {
    const double predicted = z[i] > 0.0 ? 1.0 : 0.0;
    correct += predicted == data.y[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(z.size());
}

BlrTarget::BlrTarget(LogisticDataset train, double alpha)
    : train_(std::move(train)), alpha_(alpha) {
  if (!(alpha_ > 0.0)) {
    throw ConfigError("target.alpha", "prior variance must be positive");
  }
}

std::optional<double> BlrTarget::evaluate(const ConstPointRef &w) const {
  return blr_log_posterior(w, train_, alpha_);
}

Vector BlrTarget::grad_log_density(const ConstPointRef &w) const {
  return blr_gradient(w, train_, alpha_);
}

std::map<std::string, double> BlrTarget::reference_values() const {
  // Maximum-likelihood coefficients on the setosa-vs-rest task.
  return {{"mle_w0", -0.64}, {"mle_w1", 1.89}, {"mle_w2", -1.75},
          {"mle_w3", -1.67}};
}

} // namespace eparvi
