#pragma once

#include "eparvi/types.hpp"

#include <random>
#include <string>

namespace eparvi {

class TargetDensity;

/// Position-update rule. Step sizes are per-dimension; a single entry is
/// broadcast to every dimension.
struct UpdateRule {
  enum class Kind { Euler, Verlet, DampedVerlet };

  Kind kind = Kind::Euler;
  /// Euler compliance tau >= 0.
  Vector tau = Vector::Constant(1, 0.1);
  /// Verlet dt^2 > 0.
  Vector dt2 = Vector::Constant(1, 0.01);
  /// Damping tau' in (0, 1].
  Vector tau_prime = Vector::Constant(1, 1.0);

  static UpdateRule euler(double tau);
  static UpdateRule verlet(double dt2);
  static UpdateRule damped_verlet(double dt2, double tau_prime);

  /// Throws ConfigError if a parameter is out of range or its length is
  /// neither 1 nor `dimension`.
  void validate(Index dimension) const;
};

std::string to_string(UpdateRule::Kind kind);
UpdateRule::Kind update_kind_from_string(const std::string &name);

struct PerturbationPolicy {
  /// Per-component noise standard deviation; 0 disables perturbation.
  double sigma = 0.0;
  /// Noise is injected on steps where step_index % period_k == 0.
  long period_k = 1;

  bool active_at(long step_index) const {
    return sigma > 0.0 && period_k > 0 && step_index % period_k == 0;
  }
};

struct VerletState {
  Vector position;
  Vector displacement;
};

/// x + tau * F.
Vector euler_step(const ConstPointRef &x, const ConstPointRef &force,
                  const ConstPointRef &tau);

/// new_disp = F dt^2 + prev_disp; new_x = x + new_disp (unit mass).
VerletState verlet_step(const ConstPointRef &x, const ConstPointRef &prev_disp,
                        const ConstPointRef &force, const ConstPointRef &dt2);

/// As verlet_step but new_x = x + tau' * new_disp. The carried displacement is
/// the undamped new_disp.
VerletState damped_verlet_step(const ConstPointRef &x,
                               const ConstPointRef &prev_disp,
                               const ConstPointRef &force,
                               const ConstPointRef &dt2,
                               const ConstPointRef &tau_prime);

/// Applies `rule` to one particle. Euler leaves the displacement at the move
/// it made.
VerletState apply_rule(const UpdateRule &rule, const ConstPointRef &x,
                       const ConstPointRef &prev_disp,
                       const ConstPointRef &force);

/// Adds isotropic N(0, sigma^2) noise on active steps, otherwise returns x.
Vector perturb(const ConstPointRef &x, const PerturbationPolicy &policy,
               long step_index, std::mt19937_64 &rng);

/// Metropolis move filter: accept x_proposed with probability
/// min{1, p(x_proposed) / p(x_old)}. Invalid points have density 0. If
/// p(x_old) = 0 the proposal is accepted unless it too has zero density.
Vector mh_filter(const ConstPointRef &x_old, const ConstPointRef &x_proposed,
                 const TargetDensity &target, std::mt19937_64 &rng,
                 bool *accepted = nullptr);

} // namespace eparvi
