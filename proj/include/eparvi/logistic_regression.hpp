#pragma once

#include "eparvi/targets.hpp"
#include "eparvi/types.hpp"

#include <cstdint>
#include <filesystem>

namespace eparvi {

/// Binary classification data: one row of features per instance, labels in
/// {0, 1}.
struct LogisticDataset {
  Eigen::MatrixXd X;
  Vector y;

  Index rows() const { return X.rows(); }
  Index features() const { return X.cols(); }
};

struct DatasetSplit {
  LogisticDataset train;
  LogisticDataset test;
};

/// Reads a CSV whose last column is the 0/1 label and whose other columns are
/// numeric features. Throws DataError on a label outside {0, 1}.
LogisticDataset load_logistic_csv(const std::filesystem::path &csv);

/// Centres every column and divides by its population standard deviation.
/// Constant columns are only centred.
void standardize(LogisticDataset &data);

/// Seeded Fisher-Yates shuffle, then the first round(train_fraction * n) rows
/// form the training set.
DatasetSplit split_dataset(const LogisticDataset &data, double train_fraction,
                           std::uint64_t seed);

/// sum_i [y_i log s(w.x_i) + (1 - y_i) log(1 - s(w.x_i))] - w.w / (2 alpha),
/// evaluated as y z - softplus(z) so it never takes log(0).
double blr_log_posterior(const ConstPointRef &w, const LogisticDataset &data,
                         double alpha = 1.0);

/// X^T (y - s(X w)) - w / alpha.
Vector blr_gradient(const ConstPointRef &w, const LogisticDataset &data,
                    double alpha = 1.0);

/// Fraction of rows where s(w.x) > 1/2 agrees with the label.
double classification_accuracy(const ConstPointRef &w,
                               const LogisticDataset &data);

/// Bayesian logistic regression posterior over the weights.
class BlrTarget : public TargetDensity {
public:
  BlrTarget(LogisticDataset train, double alpha = 1.0);

  std::string id() const override { return "bayesian_logistic_regression"; }
  Index dimension() const override { return train_.features(); }
  DensityKind kind() const override { return DensityKind::LogDensity; }
  std::optional<double> evaluate(const ConstPointRef &w) const override;
  bool has_gradient() const override { return true; }
  Vector grad_log_density(const ConstPointRef &w) const override;
  std::map<std::string, double> reference_values() const override;

  const LogisticDataset &train() const { return train_; }
  double alpha() const { return alpha_; }

private:
  LogisticDataset train_;
  double alpha_;
};

} // namespace eparvi
