#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qesrel {

/// Thrown when an operation's preconditions are violated.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense univariate real polynomial, coefficients stored in ascending power.
///
/// Canonical form: the highest stored coefficient is nonzero unless the
/// polynomial is identically zero. Trimming removes only exact zeros;
/// numerical near-zeros are kept so residual checks can see them.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }
  Poly(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }

  static Poly zero() { return Poly{}; }
  static Poly constant(double v) { return Poly{{v}}; }

  static Poly monomial(int k, double coeff = 1.0) {
    if (k < 0) throw ContractViolation("Poly::monomial: negative power");
    std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
    c.back() = coeff;
    return Poly(std::move(c));
  }

  /// Monic polynomial with the prescribed roots.
  static Poly from_roots(std::span<const double> roots) {
    std::vector<double> c{1.0};
    for (double r : roots) {
      c.push_back(0.0);
      for (std::size_t k = c.size() - 1; k > 0; --k) c[k] = c[k - 1] - r * c[k];
      c[0] *= -r;
    }
    return Poly(std::move(c));
  }

  /// Degree; the zero polynomial reports -1.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }

  /// Coefficient of t^k; indices beyond the stored range read as 0.
  double coeff(int k) const {
    return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[static_cast<std::size_t>(k)] : 0.0;
  }

  double leading() const { return c_.empty() ? 0.0 : c_.back(); }
  std::span<const double> coeffs() const { return c_; }

  double max_abs_coeff() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Horner evaluation.
  double operator()(double x) const {
    double acc = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
    return acc;
  }

  friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
  }

  std::vector<double> c_;
};

inline Poly add(const Poly& p, const Poly& q) {
  std::vector<double> c(static_cast<std::size_t>(std::max(p.degree(), q.degree())) + 1, 0.0);
  for (int k = 0; k < static_cast<int>(c.size()); ++k) c[static_cast<std::size_t>(k)] = p.coeff(k) + q.coeff(k);
  return Poly(std::move(c));
}

inline Poly negate(const Poly& p) {
  std::vector<double> c(p.coeffs().begin(), p.coeffs().end());
  for (double& v : c) v = -v;
  return Poly(std::move(c));
}

inline Poly sub(const Poly& p, const Poly& q) { return add(p, negate(q)); }

inline Poly mul(const Poly& p, const Poly& q) {
  if (p.is_zero() || q.is_zero()) return Poly::zero();
  std::vector<double> c(static_cast<std::size_t>(p.degree() + q.degree()) + 1, 0.0);
  for (int i = 0; i <= p.degree(); ++i)
    for (int j = 0; j <= q.degree(); ++j) c[static_cast<std::size_t>(i + j)] += p.coeff(i) * q.coeff(j);
  return Poly(std::move(c));
}

inline Poly scale(const Poly& p, double s) {
  std::vector<double> c(p.coeffs().begin(), p.coeffs().end());
  for (double& v : c) v *= s;
  return Poly(std::move(c));
}

inline Poly derivative(const Poly& p) {
  if (p.degree() <= 0) return Poly::zero();
  std::vector<double> c(static_cast<std::size_t>(p.degree()), 0.0);
  for (int k = 1; k <= p.degree(); ++k) c[static_cast<std::size_t>(k - 1)] = k * p.coeff(k);
  return Poly(std::move(c));
}

inline double eval(const Poly& p, double x) { return p(x); }

inline Poly operator+(const Poly& a, const Poly& b) { return add(a, b); }
inline Poly operator-(const Poly& a, const Poly& b) { return sub(a, b); }
inline Poly operator*(const Poly& a, const Poly& b) { return mul(a, b); }
inline Poly operator*(double s, const Poly& a) { return scale(a, s); }

namespace detail {

inline double newton_polish(const Poly& p, const Poly& dp, double x) {
  double d = dp(x);
  if (d == 0.0) return x;
  double step = p(x) / d;
  if (!std::isfinite(step)) return x;
  return x - step;
}

}  // namespace detail

/// All real roots of a polynomial of degree 1..3, in ascending order,
/// repeated according to multiplicity. Closed-form (linear / quadratic /
/// Cardano with the trigonometric branch for three real roots), each root
/// polished by one Newton step.
inline std::vector<double> roots_real_upto_cubic(const Poly& p) {
  const int deg = p.degree();
  if (deg < 1 || deg > 3)
    throw ContractViolation("roots_real_upto_cubic: degree must be in [1,3], got " + std::to_string(deg));

  std::vector<double> roots;
  if (deg == 1) {
    roots.push_back(-p.coeff(0) / p.coeff(1));
  } else if (deg == 2) {
    const double a = p.coeff(2), b = p.coeff(1), c = p.coeff(0);
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return {};
    if (disc == 0.0) {
      roots.assign(2, -b / (2.0 * a));
    } else {
      const double s = std::sqrt(disc);
      const double q = -0.5 * (b + std::copysign(s, b));
      roots.push_back(q / a);
      roots.push_back(c / q);
    }
  } else {
    const double a = p.coeff(3);
    const double b = p.coeff(2) / a, c = p.coeff(1) / a, d = p.coeff(0) / a;
    const double shift = b / 3.0;
    // depressed form x^3 + px + q, t = x - b/3
    const double pp = c - b * b / 3.0;
    const double qq = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double pscale = 1.0 + std::abs(b) + std::abs(c) + std::abs(d);
    if (std::abs(pp) <= 1e-14 * pscale && std::abs(qq) <= 1e-14 * pscale * pscale) {
      roots.assign(3, -shift);
    } else {
      const double delta = -4.0 * pp * pp * pp - 27.0 * qq * qq;
      if (delta >= 0.0) {
        // three real roots: trigonometric branch
        constexpr double two_pi = 6.283185307179586476925286766559;
        const double amp = 2.0 * std::sqrt(-pp / 3.0);
        double cosarg = 3.0 * qq / (pp * amp);
        cosarg = std::clamp(cosarg, -1.0, 1.0);
        const double theta = std::acos(cosarg);
        for (int k = 0; k < 3; ++k)
          roots.push_back(amp * std::cos(theta / 3.0 - two_pi * k / 3.0) - shift);
      } else {
        const double big = std::sqrt(qq * qq / 4.0 + pp * pp * pp / 27.0);
        const double u = std::cbrt(-qq / 2.0 - std::copysign(big, qq));
        const double x = (u == 0.0) ? 0.0 : u - pp / (3.0 * u);
        roots.push_back(x - shift);
      }
    }
  }

  const Poly dp = derivative(p);
  for (double& r : roots) r = detail::newton_polish(p, dp, r);
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace qesrel
