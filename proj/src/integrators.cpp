#include "eparvi/integrators.hpp"

#include "eparvi/error.hpp"
#include "eparvi/targets.hpp"

#include <cmath>
#include <limits>

namespace eparvi {

namespace {

void require_finite(const ConstPointRef &v, const char *what) {
  if (!v.allFinite()) {
    throw IntegratorError(std::string("non-finite ") + what);
  }
}

// Broadcasts a length-1 parameter to the point's dimension.
Vector expand(const ConstPointRef &param, Index d, const char *what) {
  if (param.size() == d) {
    return param;
  }
  if (param.size() == 1) {
    return Vector::Constant(d, param[0]);
  }
  throw IntegratorError(std::string(what) + " has length " +
                        std::to_string(param.size()) + ", expected 1 or " +
                        std::to_string(d));
}

void check_sizes(const ConstPointRef &a, const ConstPointRef &b) {
  if (a.size() != b.size()) {
    throw IntegratorError("position and force dimensions differ");
  }
}

void check_range(const Vector &v, double lo, bool lo_open, double hi,
                 const std::string &field) {
  for (Index k = 0; k < v.size(); ++k) {
    const double x = v[k];
    const bool ok_lo = lo_open ? x > lo : x >= lo;
    if (!std::isfinite(x) || !ok_lo || x > hi) {
      throw ConfigError(field, "value " + std::to_string(x) + " out of range");
    }
  }
}

} // namespace

UpdateRule UpdateRule::euler(double tau) {
  UpdateRule r;
  r.kind = Kind::Euler;
  r.tau = Vector::Constant(1, tau);
  return r;
}

UpdateRule UpdateRule::verlet(double dt2) {
  UpdateRule r;
  r.kind = Kind::Verlet;
  r.dt2 = Vector::Constant(1, dt2);
  return r;
}

UpdateRule UpdateRule::damped_verlet(double dt2, double tau_prime) {
  UpdateRule r;
  r.kind = Kind::DampedVerlet;
  r.dt2 = Vector::Constant(1, dt2);
  r.tau_prime = Vector::Constant(1, tau_prime);
  return r;
}

void UpdateRule::validate(Index dimension) const {
  const auto check_len = [dimension](const Vector &v, const char *field) {
    if (v.size() != 1 && v.size() != dimension) {
      throw ConfigError(field, "length must be 1 or " + std::to_string(dimension));
    }
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
  case Kind::Euler:
    check_len(tau, "rule.tau");
    check_range(tau, 0.0, false, inf, "rule.tau");
    break;
  case Kind::DampedVerlet:
    check_len(tau_prime, "rule.tau_prime");
    check_range(tau_prime, 0.0, true, 1.0, "rule.tau_prime");
    [[fallthrough]];
  case Kind::Verlet:
    check_len(dt2, "rule.dt2");
    check_range(dt2, 0.0, true, inf, "rule.dt2");
    break;
  }
}

std::string to_string(UpdateRule::Kind kind) {
  switch (kind) {
  case UpdateRule::Kind::Euler:
    return "euler";
  case UpdateRule::Kind::Verlet:
    return "verlet";
  case UpdateRule::Kind::DampedVerlet:
    return "damped_verlet";
  }
  return "euler";
}

UpdateRule::Kind update_kind_from_string(const std::string &name) {
  if (name == "euler") {
    return UpdateRule::Kind::Euler;
  }
  if (name == "verlet") {
    return UpdateRule::Kind::Verlet;
  }
  if (name == "damped_verlet") {
    return UpdateRule::Kind::DampedVerlet;
  }
  throw ConfigError("rule.kind", "unknown update rule '" + name + "'");
}

Vector euler_step(const ConstPointRef &x, const ConstPointRef &force,
                  const ConstPointRef &tau) {
  check_sizes(x, force);
  require_finite(x, "position");
  require_finite(force, "force");
  const Vector t = expand(tau, x.size(), "tau");
  return x + t.cwiseProduct(force);
}

VerletState verlet_step(const ConstPointRef &x, const ConstPointRef &prev_disp,
                        const ConstPointRef &force, const ConstPointRef &dt2) {
  check_sizes(x, force);
  check_sizes(x, prev_disp);
  require_finite(x, "position");
  require_finite(prev_disp, "displacement");
  require_finite(force, "force");
  const Vector step = expand(dt2, x.size(), "dt2");
  VerletState out;
  out.displacement = force.cwiseProduct(step) + prev_disp;
  out.position = x + out.displacement;
  return out;
}

VerletState damped_verlet_step(const ConstPointRef &x,
                               const ConstPointRef &prev_disp,
                               const ConstPointRef &force,
                               const ConstPointRef &dt2,
                               const ConstPointRef &tau_prime) {
  check_sizes(x, force);
  check_sizes(x, prev_disp);
  require_finite(x, "position");
  require_finite(prev_disp, "displacement");
  require_finite(force, "force");
  const Vector step = expand(dt2, x.size(), "dt2");
  const Vector damping = expand(tau_prime, x.size(), "tau_prime");
  VerletState out;
  out.displacement = force.cwiseProduct(step) + prev_disp;
  out.position = x + damping.cwiseProduct(out.displacement);
  return out;
}

VerletState apply_rule(const UpdateRule &rule, const ConstPointRef &x,
                       const ConstPointRef &prev_disp,
                       const ConstPointRef &force) {
  switch (rule.kind) {
  case UpdateRule::Kind::Euler: {
    VerletState out;
    out.position = euler_step(x, force, rule.tau);
    out.displacement = out.position - x;
    return out;
  }
  case UpdateRule::Kind::Verlet:
    return verlet_step(x, prev_disp, force, rule.dt2);
  case UpdateRule::Kind::DampedVerlet:
    return damped_verlet_step(x, prev_disp, force, rule.dt2, rule.tau_prime);
  }
  throw IntegratorError("unknown update rule");
}

Vector perturb(const ConstPointRef &x, const PerturbationPolicy &policy,
               long step_index, std::mt19937_64 &rng) {
  if (!policy.active_at(step_index)) {
    return x;
  }
  std::normal_distribution<double> noise(0.0, policy.sigma);
  Vector out = x;
  for (Index k = 0; k < out.size(); ++k) {
    out[k] += noise(rng);
  }
  return out;
}

Vector mh_filter(const ConstPointRef &x_old, const ConstPointRef &x_proposed,
                 const TargetDensity &target, std::mt19937_64 &rng,
                 bool *accepted) {
  // Work with log densities so tiny unnormalised values do not underflow.
  const double lp_old = target.log_density(x_old);
  const double lp_new = target.log_density(x_proposed);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();

  bool accept = false;
  if (lp_new == neg_inf) {
    accept = false;
  } else if (lp_old == neg_inf || lp_new >= lp_old) {
    accept = true;
  } else {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    accept = std::log(unit(rng)) < lp_new - lp_old;
  }
  if (accepted != nullptr) {
    *accepted = accept;
  }
  return accept ? Vector(x_proposed) : Vector(x_old);
}

} // namespace eparvi
