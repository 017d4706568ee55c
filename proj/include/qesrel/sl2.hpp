#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qesrel/ode.hpp"
#include "qesrel/poly.hpp"

namespace qesrel {

/// Dense real matrix of a linear operator on the degree-<=n polynomials in
/// the monomial basis {1, t, ..., t^n}: column k holds the coefficients of
/// the image of t^k.
struct OperatorMatrix {
  int dim = 0;
  std::vector<double> a;  // row-major

  OperatorMatrix() = default;
  explicit OperatorMatrix(int d) : dim(d), a(static_cast<std::size_t>(d) * d, 0.0) {}

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * dim + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * dim + j]; }

  static OperatorMatrix identity(int d) {
    OperatorMatrix m(d);
    for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
    return m;
  }

  double max_abs() const {
    double v = 0.0;
    for (double x : a) v = std::max(v, std::abs(x));
    return v;
  }
};

inline OperatorMatrix operator*(const OperatorMatrix& x, const OperatorMatrix& y) {
  OperatorMatrix z(x.dim);
  for (int i = 0; i < x.dim; ++i)
    for (int k = 0; k < x.dim; ++k) {
      const double v = x.at(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < x.dim; ++j) z.at(i, j) += v * y.at(k, j);
    }
  return z;
}

inline OperatorMatrix operator*(double s, const OperatorMatrix& x) {
  OperatorMatrix z = x;
  for (double& v : z.a) v *= s;
  return z;
}

inline OperatorMatrix operator+(const OperatorMatrix& x, const OperatorMatrix& y) {
  OperatorMatrix z = x;
  for (std::size_t i = 0; i < z.a.size(); ++i) z.a[i] += y.a[i];
  return z;
}

inline OperatorMatrix operator-(const OperatorMatrix& x, const OperatorMatrix& y) {
  OperatorMatrix z = x;
  for (std::size_t i = 0; i < z.a.size(); ++i) z.a[i] -= y.a[i];
  return z;
}

inline double max_abs_diff(const OperatorMatrix& x, const OperatorMatrix& y) { return (x - y).max_abs(); }

struct Sl2Generators {
  OperatorMatrix jminus, jzero, jplus;
};

/// Differential-operator realization of sl(2) on degree-<=n polynomials:
/// J- = d/dt, J0 = t d/dt - n/2, J+ = t^2 d/dt - n t.
inline Sl2Generators generators(int n) {
  if (n < 0) throw ContractViolation("generators: n must be non-negative");
  const int d = n + 1;
  Sl2Generators g{OperatorMatrix(d), OperatorMatrix(d), OperatorMatrix(d)};
  for (int k = 0; k <= n; ++k) {
    if (k > 0) g.jminus.at(k - 1, k) = k;
    g.jzero.at(k, k) = k - n / 2.0;
    if (k < n) g.jplus.at(k + 1, k) = k - n;  // vanishes at k = n, preserving the space
  }
  return g;
}

struct QesConditionReport {
  bool satisfied = false;
  std::vector<std::string> violations;
};

/// The algebraization condition: b3 = c2 = 0 and c1 = -n[(n-1)a3 + b2],
/// each to 1e-12 relative to the coefficient scale.
inline QesConditionReport qes_condition(const QesOde& ode) {
  QesConditionReport rep;
  double scale = 1.0;
  scale = std::max(scale, ode.P.max_abs_coeff());
  scale = std::max(scale, ode.Q.max_abs_coeff());
  scale = std::max(scale, ode.R.max_abs_coeff());
  const double tol = 1e-12 * scale;
  if (std::abs(ode.b(3)) > tol) rep.violations.push_back("b3 != 0");
  if (std::abs(ode.c(2)) > tol) rep.violations.push_back("c2 != 0");
  const double want = -ode.n * ((ode.n - 1) * ode.a(3) + ode.b(2));
  if (std::abs(ode.c(1) - want) > tol) rep.violations.push_back("c1 != -n[(n-1)a3 + b2]");
  rep.satisfied = rep.violations.empty();
  return rep;
}

/// The bilinear-plus-linear combination of sl(2) generators equal to the
/// ODE operator (with the constant c0 split off) whenever the
/// algebraization condition holds.
inline OperatorMatrix assemble_H(const QesOde& ode) {
  const auto rep = qes_condition(ode);
  if (!rep.satisfied) {
    std::string msg = "assemble_H: algebraization condition fails:";
    for (const auto& v : rep.violations) msg += " " + v + ";";
    throw std::runtime_error(msg);
  }
  const int n = ode.n;
  const auto g = generators(n);
  const double a3 = ode.a(3), a2 = ode.a(2), a1 = ode.a(1), a0 = ode.a(0);
  const double b2 = ode.b(2), b1 = ode.b(1), b0 = ode.b(0);
  OperatorMatrix h = a3 * (g.jplus * g.jzero) + a2 * (g.jzero * g.jzero) + a1 * (g.jzero * g.jminus) +
                     a0 * (g.jminus * g.jminus);
  h = h + (0.5 * (3.0 * n - 2.0) * a3 + b2) * g.jplus;
  h = h + ((n - 1.0) * a2 + b1) * g.jzero;
  h = h + (0.5 * n * a1 + b0) * g.jminus;
  const double constant = -0.25 * n * n * a2 + 0.5 * n * ((n - 1.0) * a2 + b1);
  h = h + constant * OperatorMatrix::identity(n + 1);
  return h;
}

/// Matrix of t -> P d^2/dt^2 + Q d/dt + (R - c0), restricted to degree <= n.
/// Well-definedness on the invariant subspace is checked, not assumed: any
/// image coefficient beyond t^n is an error naming the overflowing monomial.
inline OperatorMatrix direct_matrix(const QesOde& ode) {
  const int n = ode.n;
  OperatorMatrix h(n + 1);
  const Poly r_top = sub(ode.R, Poly::constant(ode.c(0)));
  double scale = 1.0;
  scale = std::max(scale, ode.P.max_abs_coeff());
  scale = std::max(scale, ode.Q.max_abs_coeff());
  scale = std::max(scale, ode.R.max_abs_coeff());
  for (int k = 0; k <= n; ++k) {
    const Poly mono = Poly::monomial(k);
    const Poly img =
        add(add(mul(ode.P, derivative(derivative(mono))), mul(ode.Q, derivative(mono))), mul(r_top, mono));
    for (int i = 0; i <= img.degree(); ++i) {
      if (i > n) {
        if (std::abs(img.coeff(i)) > 1e-12 * scale)
          throw std::runtime_error("direct_matrix: image of t^" + std::to_string(k) +
                                   " overflows to t^" + std::to_string(i) +
                                   " (operator does not preserve degree <= n)");
        continue;
      }
      h.at(i, k) = img.coeff(i);
    }
  }
  return h;
}

namespace detail {

// characteristic polynomial det(xI - A) by Faddeev-LeVerrier
inline Poly characteristic_poly(const OperatorMatrix& m) {
  const int d = m.dim;
  std::vector<double> c(static_cast<std::size_t>(d) + 1, 0.0);
  c[static_cast<std::size_t>(d)] = 1.0;
  OperatorMatrix mk = OperatorMatrix::identity(d);
  for (int k = 1; k <= d; ++k) {
    mk = m * mk;
    double tr = 0.0;
    for (int i = 0; i < d; ++i) tr += mk.at(i, i);
    const double ck = -tr / k;
    c[static_cast<std::size_t>(d - k)] = ck;
    for (int i = 0; i < d; ++i) mk.at(i, i) += ck;
  }
  return Poly(std::move(c));
}

// all real roots of a low-degree polynomial by recursive derivative
// bracketing, with closed forms for degree <= 3
inline std::vector<double> real_roots_bracketed(const Poly& p) {
  const int deg = p.degree();
  if (deg <= 0) return {};
  if (deg <= 3) return roots_real_upto_cubic(p);
  const std::vector<double> crit = real_roots_bracketed(derivative(p));
  double bound = 0.0;
  for (int k = 0; k < deg; ++k) bound = std::max(bound, std::abs(p.coeff(k) / p.leading()));
  bound += 1.0;
  std::vector<double> knots{-bound};
  for (double c : crit)
    if (c > -bound && c < bound) knots.push_back(c);
  knots.push_back(bound);

  std::vector<double> roots;
  const Poly dp = derivative(p);
  const double vscale = 1.0 + p.max_abs_coeff() * std::pow(bound, deg);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double lo = knots[i], hi = knots[i + 1];
    double flo = p(lo), fhi = p(hi);
    if (flo == 0.0) {
      roots.push_back(lo);
      continue;
    }
    if (flo * fhi > 0.0) {
      // tangency at the right knot counts as an even-multiplicity root
      if (i + 2 == knots.size() && fhi == 0.0) roots.push_back(hi);
      continue;
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = p(mid);
      if (fm == 0.0 || hi - lo < 1e-15 * (1.0 + std::abs(mid))) {
        lo = hi = mid;
        break;
      }
      if (flo * fm < 0.0) {
        hi = mid;
      } else {
        lo = mid;
        flo = fm;
      }
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) r = newton_polish(p, dp, r);
    roots.push_back(r);
  }
  // interior critical points where p vanishes are double roots the sign
  // scan cannot see
  for (double c : crit)
    if (std::abs(p(c)) <= 1e-11 * vscale) {
      bool known = false;
      for (double r : roots)
        if (std::abs(r - c) <= 1e-7 * (1.0 + std::abs(c))) known = true;
      if (!known) {
        roots.push_back(c);
        roots.push_back(c);
      }
    }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace detail

struct Spectrum {
  std::vector<double> real_eigenvalues;  // ascending
  int complex_pairs = 0;
};

/// Eigenvalues of a (generally non-symmetric) small operator matrix via the
/// characteristic polynomial; each real eigenvalue is an allowed -c0 value.
/// Complex pairs are counted, not an error.
inline Spectrum spectrum(const OperatorMatrix& m) {
  if (m.dim > 8) throw ContractViolation("spectrum: dim must be <= 8");
  Spectrum s;
  const Poly chi = detail::characteristic_poly(m);
  s.real_eigenvalues = detail::real_roots_bracketed(chi);
  const int missing = m.dim - static_cast<int>(s.real_eigenvalues.size());
  s.complex_pairs = missing > 0 ? missing / 2 : 0;
  return s;
}

}  // namespace qesrel
