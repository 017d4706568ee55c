#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace qesrel {
namespace detail {

using Vec = std::vector<double>;
// row-major m x n
struct Mat {
  int rows = 0, cols = 0;
  Vec a;
  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

inline double norm_inf(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double norm2(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Solves A x = b in place by LU with partial pivoting. Returns false if
// (numerically) singular.
inline bool lu_solve(Mat A, Vec b, Vec& x) {
  const int n = A.rows;
  std::vector<int> piv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) piv[static_cast<std::size_t>(i)] = i;
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(A.at(k, k));
    for (int i = k + 1; i < n; ++i)
      if (std::abs(A.at(i, k)) > best) { best = std::abs(A.at(i, k)); p = i; }
    if (best < 1e-300) return false;
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(A.at(k, j), A.at(p, j));
      std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(p)]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = A.at(i, k) / A.at(k, k);
      A.at(i, k) = f;
      for (int j = k + 1; j < n; ++j) A.at(i, j) -= f * A.at(k, j);
      b[static_cast<std::size_t>(i)] -= f * b[static_cast<std::size_t>(k)];
    }
  }
  x.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s -= A.at(i, j) * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = s / A.at(i, i);
  }
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

// Least-squares min ||A x - b||_2 via Householder QR (m >= n). Returns false
// on rank deficiency.
inline bool qr_solve(Mat A, Vec b, Vec& x) {
  const int m = A.rows, n = A.cols;
  for (int k = 0; k < n; ++k) {
    double norm = 0.0;
    for (int i = k; i < m; ++i) norm += A.at(i, k) * A.at(i, k);
    norm = std::sqrt(norm);
    if (norm < 1e-300) return false;
    double alpha = (A.at(k, k) > 0.0) ? -norm : norm;
    Vec v(static_cast<std::size_t>(m - k), 0.0);
    v[0] = A.at(k, k) - alpha;
    for (int i = k + 1; i < m; ++i) v[static_cast<std::size_t>(i - k)] = A.at(i, k);
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    if (vnorm2 < 1e-300) continue;
    for (int j = k; j < n; ++j) {
      double dot = 0.0;
      for (int i = k; i < m; ++i) dot += v[static_cast<std::size_t>(i - k)] * A.at(i, j);
      const double f = 2.0 * dot / vnorm2;
      for (int i = k; i < m; ++i) A.at(i, j) -= f * v[static_cast<std::size_t>(i - k)];
    }
    double dot = 0.0;
    for (int i = k; i < m; ++i) dot += v[static_cast<std::size_t>(i - k)] * b[static_cast<std::size_t>(i)];
    const double f = 2.0 * dot / vnorm2;
    for (int i = k; i < m; ++i) b[static_cast<std::size_t>(i)] -= f * v[static_cast<std::size_t>(i - k)];
  }
  x.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s -= A.at(i, j) * x[static_cast<std::size_t>(j)];
    if (std::abs(A.at(i, i)) < 1e-300) return false;
    x[static_cast<std::size_t>(i)] = s / A.at(i, i);
  }
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

struct NewtonOptions {
  int max_iterations = 100;
  int max_halvings = 40;
  double step_tol = 1e-14;
  double residual_tol = 1e-12;
  double divergence_bound = 1e8;
};

struct NewtonOutcome {
  bool converged = false;
  bool singular_jacobian = false;
  Vec x;
  double residual_norm = 0.0;
};

// Residual map R^n -> R^m (m >= n). `scale` returns the magnitude of the
// summands making up the residual at x, used for relative convergence.
using ResidualFn = std::function<bool(const Vec&, Vec&)>;
using ScaleFn = std::function<double(const Vec&)>;

inline bool fd_jacobian(const ResidualFn& f, const Vec& x, const Vec& fx, Mat& J) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(fx.size());
  J = Mat(m, n);
  Vec xp = x, fp, fm;
  for (int j = 0; j < n; ++j) {
    const double h = 1e-7 * (1.0 + std::abs(x[static_cast<std::size_t>(j)]));
    xp[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] + h;
    if (!f(xp, fp)) return false;
    xp[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] - h;
    if (!f(xp, fm)) return false;
    xp[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)];
    for (int i = 0; i < m; ++i)
      J.at(i, j) = (fp[static_cast<std::size_t>(i)] - fm[static_cast<std::size_t>(i)]) / (2.0 * h);
  }
  return true;
}

// Damped Newton (square) or Gauss-Newton (overdetermined) with step halving.
inline NewtonOutcome damped_newton(const ResidualFn& f, const ScaleFn& scale, Vec x,
                                   const NewtonOptions& opt = {}) {
  NewtonOutcome out;
  Vec fx;
  if (!f(x, fx)) return out;
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(fx.size());

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    const double res = norm_inf(fx);
    const double s = scale ? scale(x) : 1.0;
    if (!std::isfinite(res) || norm_inf(x) > opt.divergence_bound) return out;

    Mat J;
    if (!fd_jacobian(f, x, fx, J)) return out;
    Vec rhs(fx);
    for (double& v : rhs) v = -v;
    Vec delta;
    const bool ok = (m == n) ? lu_solve(J, rhs, delta) : qr_solve(J, rhs, delta);
    if (!ok) {
      out.singular_jacobian = true;
      return out;
    }

    // backtracking: halve until the residual norm decreases
    double alpha = 1.0;
    Vec xn(x), fn;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h) {
      for (int j = 0; j < n; ++j)
        xn[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] + alpha * delta[static_cast<std::size_t>(j)];
      if (f(xn, fn) && std::isfinite(norm_inf(fn)) && (norm_inf(fn) < res || res == 0.0)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // no productive step; report convergence only if already at a root
      out.converged = res <= opt.residual_tol * s;
      out.x = x;
      out.residual_norm = res;
      return out;
    }
    const double step = alpha * norm2(delta);
    x = xn;
    fx = fn;
    if (step < opt.step_tol * (1.0 + norm2(x)) && norm_inf(fx) <= opt.residual_tol * scale(x)) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  out.residual_norm = norm_inf(fx);
  if (!out.converged) out.converged = out.residual_norm <= opt.residual_tol * (scale ? scale(x) : 1.0);
  return out;
}

}  // namespace detail
}  // namespace qesrel
