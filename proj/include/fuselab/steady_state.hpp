#pragma once

#include "fuselab/errors.hpp"

#include <cmath>

namespace fuselab {

/// Closed-form steady state of the scalar system dx = -x dt + dw (intensity q)
/// observed by two sensors y_i = x + v_i, v_i ~ N(0, r_i).
template <typename Scalar>
struct BasicSteadyStateReport {
  Scalar q, r1, r2;
  Scalar p11, p22, p12;
  Scalar c1, c2;  // optimal (FF) weights
  Scalar w1, w2;  // CI weights
  Scalar p_ff, p_ci;
};

using SteadyStateReport = BasicSteadyStateReport<double>;

template <typename Scalar>
BasicSteadyStateReport<Scalar> steady_state(Scalar q, Scalar r1, Scalar r2) {
  if (!(q > 0)) throw DomainError("q must be positive");
  if (!(r1 > 0)) throw DomainError("r1 must be positive");
  if (!(r2 > 0)) throw DomainError("r2 must be positive");
  BasicSteadyStateReport<Scalar> s{};
  s.q = q;
  s.r1 = r1;
  s.r2 = r2;
  s.p11 = q * r1 / (q + 2 * r1);
  s.p22 = q * r2 / (q + 2 * r2);
  s.p12 = 2 * r1 * r2 * q / ((q + 2 * r1) * (q + 2 * r2));

  const Scalar spread = s.p11 + s.p22 - 2 * s.p12;
  s.c1 = (s.p22 - s.p12) / spread;
  s.c2 = (s.p11 - s.p12) / spread;
  const Scalar sq = s.p11 * s.p11 + s.p22 * s.p22;
  s.w1 = s.p22 * s.p22 / sq;
  s.w2 = s.p11 * s.p11 / sq;

  const auto fused = [&](Scalar a, Scalar b) { return a * a * s.p11 + b * b * s.p22 + 2 * a * b * s.p12; };
  s.p_ff = fused(s.c1, s.c2);
  s.p_ci = fused(s.w1, s.w2);
  return s;
}

/// (P_CI - P_FF) / P_FF.
template <typename Scalar>
Scalar ci_relative_excess(const BasicSteadyStateReport<Scalar>& s) {
  return (s.p_ci - s.p_ff) / s.p_ff;
}

}  // namespace fuselab
