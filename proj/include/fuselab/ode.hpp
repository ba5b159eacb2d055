#pragma once

#include "fuselab/errors.hpp"
#include "fuselab/model.hpp"
#include "fuselab/types.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <type_traits>

namespace fuselab {

enum class MomentKind {
  mean,      // dx/dt = F(t) x
  lyapunov,  // dP/dt = F(t) P + P F(t)ᵀ + G Q Gᵀ
};

/// Moment ODE of a linear SDE. Cross-covariance blocks obey the same
/// Lyapunov law but are not symmetric, so symmetrization can be switched off.
template <typename Scalar>
struct BasicMomentOde {
  const BasicStateModel<Scalar>* model;
  MomentKind kind;
  bool symmetrize = true;

  Matrix<Scalar> derivative(Scalar t, const Matrix<Scalar>& x) const {
    const Matrix<Scalar> f = model->drift(t);
    if (kind == MomentKind::mean) return f * x;
    return f * x + x * f.transpose() + model->diffusion();
  }

  bool symmetric_state() const { return kind == MomentKind::lyapunov && symmetrize; }
};

using MomentOde = BasicMomentOde<double>;

template <typename Scalar>
BasicMomentOde<Scalar> mean_ode(const BasicStateModel<Scalar>& m) {
  return {&m, MomentKind::mean, false};
}
template <typename Scalar>
BasicMomentOde<Scalar> covariance_ode(const BasicStateModel<Scalar>& m) {
  return {&m, MomentKind::lyapunov, true};
}
template <typename Scalar>
BasicMomentOde<Scalar> cross_covariance_ode(const BasicStateModel<Scalar>& m) {
  return {&m, MomentKind::lyapunov, false};
}

/// Grid between two epochs: `full_steps` steps of dt followed by one
/// shortened step of `last_step` (zero when dt divides the interval).
template <typename Scalar>
struct StepPlan {
  std::size_t full_steps = 0;
  Scalar last_step = 0;

  std::size_t total_steps() const { return full_steps + (last_step > 0 ? 1 : 0); }
};

template <typename Scalar>
StepPlan<Scalar> plan_steps(Scalar t0, Scalar t1, Scalar dt) {
  if (!(dt > 0)) throw DomainError("integrator step must be positive");
  if (!(t1 > t0)) throw DomainError("propagation interval must have t1 > t0");
  const Scalar ratio = (t1 - t0) / dt;
  const Scalar nearest = std::round(ratio);
  // Remainders below 1e-9 steps are round-off in the epoch grid, not a real step.
  if (nearest >= 1 && std::abs(ratio - nearest) <= Scalar(1e-9) * std::max(Scalar(1), ratio))
    return {static_cast<std::size_t>(nearest), Scalar(0)};
  const auto full = static_cast<std::size_t>(std::floor(ratio));
  return {full, t1 - (t0 + static_cast<Scalar>(full) * dt)};
}

/// One classical fourth-order Runge-Kutta step with stages at t, t+h/2, t+h/2, t+h.
template <typename Scalar>
Matrix<Scalar> rk4_step(const BasicMomentOde<Scalar>& ode, const std::type_identity_t<Matrix<Scalar>>& x,
                        std::type_identity_t<Scalar> t, std::type_identity_t<Scalar> h) {
  if (!(h > 0)) throw DomainError("RK4 step must be positive");
  const auto check = [&](const Matrix<Scalar>& stage) {
    if (!stage.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite value in RK4 step at t=" << t << " h=" << h;
      throw NumericError(msg.str());
    }
  };
  const Scalar half = h / Scalar(2);
  const Matrix<Scalar> k1 = ode.derivative(t, x);
  check(k1);
  const Matrix<Scalar> k2 = ode.derivative(t + half, x + half * k1);
  check(k2);
  const Matrix<Scalar> k3 = ode.derivative(t + half, x + half * k2);
  check(k3);
  const Matrix<Scalar> k4 = ode.derivative(t + h, x + h * k3);
  check(k4);
  Matrix<Scalar> next = x + (h / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
  check(next);
  return next;
}

/// Integrates from t0 to exactly t1. Symmetric (covariance) states are
/// symmetrized after every step.
template <typename Scalar>
Matrix<Scalar> propagate_interval(const BasicMomentOde<Scalar>& ode, std::type_identity_t<Matrix<Scalar>> x,
                                  std::type_identity_t<Scalar> t0, std::type_identity_t<Scalar> t1,
                                  std::type_identity_t<Scalar> dt) {
  const auto plan = plan_steps(t0, t1, dt);
  const bool sym = ode.symmetric_state();
  for (std::size_t k = 0; k < plan.full_steps; ++k) {
    x = rk4_step(ode, x, t0 + static_cast<Scalar>(k) * dt, dt);
    if (sym) symmetrize(x);
  }
  if (plan.last_step > 0) {
    x = rk4_step(ode, x, t0 + static_cast<Scalar>(plan.full_steps) * dt, plan.last_step);
    if (sym) symmetrize(x);
  }
  return x;
}

}  // namespace fuselab
