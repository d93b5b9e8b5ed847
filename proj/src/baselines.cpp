#include "eparvi/baselines.hpp"

#include "eparvi/error.hpp"
#include "eparvi/parallel.hpp"
#include "eparvi/sampler.hpp"
#include "eparvi/targets.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace eparvi {

void MHConfig::validate(Index dimension) const {
  if (n_samples < 1) {
    throw ConfigError("mh.n_samples", "must be at least 1");
  }
  if (proposal_std.size() != 1 && proposal_std.size() != dimension) {
    throw ConfigError("mh.proposal_std",
                      "length must be 1 or " + std::to_string(dimension));
  }
  if (!(proposal_std.array() > 0.0).all()) {
    throw ConfigError("mh.proposal_std", "must be positive");
  }
  if (init.size() != dimension) {
    throw ConfigError("mh.init", "expected " + std::to_string(dimension) +
                                     " entries");
  }
  if (!(burn_in >= 0.0) || !(burn_in < 1.0)) {
    throw ConfigError("mh.burn_in", "must lie in [0, 1)");
  }
}

MHResult metropolis_hastings(const TargetDensity &target, const MHConfig &cfg) {
  const Index d = target.dimension();
  cfg.validate(d);
  const Vector step = cfg.proposal_std.size() == d
                          ? cfg.proposal_std
                          : Vector::Constant(d, cfg.proposal_std[0]);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();

  MHResult out;
  auto rng = make_stream(cfg.seed, StreamTag::Chain, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto burn = static_cast<long>(
      std::floor(cfg.burn_in * static_cast<double>(cfg.n_samples)));
  out.samples.resize(cfg.n_samples - burn, d);

  Vector x = cfg.init;
  double lp = target.log_density(x);
  if (lp == neg_inf) {
    out.warnings.push_back(
        "chain starts at a point of zero density; it may stay stuck until a "
        "proposal lands in the support");
  }
  long accepted = 0;
  Vector prop(d);
  for (long i = 0; i < cfg.n_samples; ++i) {
    for (Index k = 0; k < d; ++k) {
      prop[k] = x[k] + step[k] * normal(rng);
    }
    const double lp_new = target.log_density(prop);
    bool accept = false;
    if (lp_new != neg_inf) {
      accept = lp == neg_inf || lp_new >= lp || std::log(unit(rng)) < lp_new - lp;
    }
    if (accept) {
      x = prop;
      lp = lp_new;
      ++accepted;
    }
    if (i >= burn) {
      out.samples.row(i - burn) = x.transpose();
    }
  }
  out.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(cfg.n_samples);
  if (accepted == 0) {
    out.warnings.push_back("no proposal was accepted; the chain is stuck");
  }
  return out;
}

void LMCConfig::validate() const {
  if (!(a > 0.0)) {
    throw ConfigError("lmc.a", "must be positive");
  }
  if (!(b >= 0.0)) {
    throw ConfigError("lmc.b", "must be non-negative");
  }
  if (!(c > 0.0) || !(c < 1.0)) {
    throw ConfigError("lmc.c", "must lie in (0, 1)");
  }
  if (n_iterations < 1) {
    throw ConfigError("lmc.n_iterations", "must be at least 1");
  }
  if (init.rows() < 1) {
    throw ConfigError("lmc.init", "needs at least one particle");
  }
}

double langevin_step_size(double a, double b, double c, long t) {
  return a * std::pow(b + static_cast<double>(t), -c);
}

LMCResult langevin_evolve(const TargetDensity &target, const LMCConfig &cfg) {
  if (!target.has_gradient()) {
    throw UnsupportedTargetError("target '" + target.id() +
                                 "' has no gradient; Langevin dynamics needs one");
  }
  cfg.validate();
  const Index d = target.dimension();
  if (cfg.init.cols() != d) {
    throw InvalidDimensionError("LMC particles and target differ in dimension");
  }
  const Index n = cfg.init.rows();
  const unsigned workers = resolve_workers(cfg.workers);

  std::vector<std::mt19937_64> streams;
  streams.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    streams.push_back(make_stream(cfg.seed, StreamTag::Langevin,
                                  static_cast<std::uint64_t>(j), 0));
  }

  LMCResult out;
  out.particles = cfg.init;
  out.record.reserve(static_cast<std::size_t>(cfg.n_iterations));
  for (long t = 0; t < cfg.n_iterations; ++t) {
    const double eps = langevin_step_size(cfg.a, cfg.b, cfg.c, t);
    const double noise_scale = std::sqrt(2.0 * eps);
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t js) {
      const auto j = static_cast<Index>(js);
      std::normal_distribution<double> normal(0.0, 1.0);
      const Vector x = out.particles.row(j).transpose();
      const Vector g = target.grad_log_density(x);
      Vector next = x + eps * g;
      for (Index k = 0; k < d; ++k) {
        next[k] += noise_scale * normal(streams[js]);
      }
      out.particles.row(j) = next.transpose();
    });
    LMCIteration rec;
    rec.iteration = t + 1;
    rec.step_size = eps;
    rec.mean = out.particles.colwise().mean().transpose();
    rec.variance = (out.particles.rowwise() - rec.mean.transpose())
                       .array()
                       .square()
                       .colwise()
                       .mean()
                       .transpose();
    out.record.push_back(std::move(rec));
  }
  return out;
}

} // namespace eparvi
