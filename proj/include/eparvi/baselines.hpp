#pragma once

#include "eparvi/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace eparvi {

class TargetDensity;

struct MHConfig {
  long n_samples = 10000;
  /// Random-walk proposal standard deviation; one entry is broadcast.
  Vector proposal_std = Vector::Ones(1);
  Vector init;
  std::uint64_t seed = 0;
  /// Leading fraction of the chain discarded.
  double burn_in = 0.2;

  void validate(Index dimension) const;
};

struct MHResult {
  /// Post-burn-in states, one per row.
  PointSet samples;
  /// Accepted / proposed over the whole chain, burn-in included.
  double acceptance_rate = 0.0;
  std::vector<std::string> warnings;
};

/// Random-walk Metropolis-Hastings with symmetric Gaussian proposals, accepting
/// with probability min{1, p(x') / p(x)} in log space.
MHResult metropolis_hastings(const TargetDensity &target, const MHConfig &cfg);

struct LMCConfig {
  double a = 0.01;
  double b = 1.0;
  double c = 0.55;
  long n_iterations = 1000;
  PointSet init;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const;
};

/// eps_t = a (b + t)^{-c}.
double langevin_step_size(double a, double b, double c, long t);

struct LMCIteration {
  long iteration = 0;
  double step_size = 0.0;
  /// Per-dimension ensemble mean and (population) variance after the step.
  Vector mean;
  Vector variance;
};

struct LMCResult {
  PointSet particles;
  std::vector<LMCIteration> record;
};

/// x_{t+1} = x_t + eps_t grad log p(x_t) + sqrt(2 eps_t) z_t for every particle
/// independently. Each particle owns one RNG stream for its whole path.
/// Throws UnsupportedTargetError if the target has no gradient.
LMCResult langevin_evolve(const TargetDensity &target, const LMCConfig &cfg);

} // namespace eparvi
