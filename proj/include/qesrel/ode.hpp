#pragma once

#include <string>

#include "qesrel/poly.hpp"

namespace qesrel {

/// Second-order operator P(t) d^2/dt^2 + Q(t) d/dt + R(t) with polynomial
/// coefficients (deg P <= 3, deg Q <= 3, deg R <= 2), together with the
/// target degree n of the sought polynomial solution.
struct QesOde {
  Poly P, Q, R;
  int n = 0;

  QesOde(Poly P_, Poly Q_, Poly R_, int n_) : P(std::move(P_)), Q(std::move(Q_)), R(std::move(R_)), n(n_) {
    if (P.degree() > 3) throw ContractViolation("QesOde: deg P > 3");
    if (Q.degree() > 3) throw ContractViolation("QesOde: deg Q > 3");
    if (R.degree() > 2) throw ContractViolation("QesOde: deg R > 2");
    if (n_ < 0) throw ContractViolation("QesOde: n must be non-negative");
  }

  // coefficient accessors; absent coefficients read as 0
  double a(int k) const { return P.coeff(k); }
  double b(int k) const { return Q.coeff(k); }
  double c(int k) const { return R.coeff(k); }
};

/// The expanded polynomial P*S'' + Q*S' + R*S. S is a genuine solution of
/// the operator iff every coefficient vanishes; this is the certification
/// oracle for everything downstream.
inline Poly closure_residual(const QesOde& ode, const Poly& S) {
  return mul(ode.P, derivative(derivative(S))) + mul(ode.Q, derivative(S)) + mul(ode.R, S);
}

/// Scale used by the closure-residual acceptance test: the largest absolute
/// input coefficient, floored at 1.
inline double closure_scale(const QesOde& ode, const Poly& S) {
  double m = 1.0;
  m = std::max(m, ode.P.max_abs_coeff());
  m = std::max(m, ode.Q.max_abs_coeff());
  m = std::max(m, ode.R.max_abs_coeff());
  m = std::max(m, S.max_abs_coeff());
  return m;
}

inline double closure_residual_norm(const QesOde& ode, const Poly& S) {
  return closure_residual(ode, S).max_abs_coeff();
}

inline bool closure_certifies(const QesOde& ode, const Poly& S, double tol = 1e-10) {
  return closure_residual_norm(ode, S) <= tol * closure_scale(ode, S);
}

}  // namespace qesrel
