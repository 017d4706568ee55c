#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qesrel/bethe.hpp"
#include "qesrel/newton.hpp"
#include "qesrel/ode.hpp"
#include "qesrel/poly.hpp"

namespace qesrel {

/// The four soft-core families in scaled variables u = s*t, w = s*beta,
/// where s is the decay rate (sigma or xi). Scaling maps each family onto
/// the member with s = 1 and cut-off w, so the root-and-constraint system
/// depends only on (u_i, w) plus lambda2 for the Klein-Gordon cases.
enum class ScaledCase { DiracQ1, DiracQ2, KleinGordonQ1, KleinGordonQ2 };

inline bool has_lambda2(ScaledCase c) {
  return c == ScaledCase::KleinGordonQ1 || c == ScaledCase::KleinGordonQ2;
}

inline const char* scaled_case_name(ScaledCase c) {
  switch (c) {
    case ScaledCase::DiracQ1: return "dirac q=1";
    case ScaledCase::DiracQ2: return "dirac q=2";
    case ScaledCase::KleinGordonQ1: return "kg q=1";
    case ScaledCase::KleinGordonQ2: return "kg q=2";
  }
  return "?";
}

/// Scaled ODE of a family member. `m` is the angular number (kappa for
/// Dirac, nu = ell+1 for Klein-Gordon). The R polynomial carries the
/// coupling identity appropriate to the family, so a consistent (roots, w,
/// lambda2) makes the closure residual vanish identically.
inline QesOde scaled_ode(ScaledCase c, double m, int n, double w, double lambda2 = 0.0) {
  switch (c) {
    case ScaledCase::DiracQ1: {
      const Poly P{{0.0, -w, 1.0}};
      const Poly Q{{0.0, 2.0 * (m + w), -2.0}};
      // physical c1 = 2n via the coupling identity g = -2(n+m)
      const Poly R{{-2.0 * (n + m) * w, 2.0 * static_cast<double>(n)}};
      return QesOde(P, Q, R, n);
    }
    case ScaledCase::DiracQ2: {
      const Poly P{{0.0, -w * w, 0.0, 1.0}};
      const Poly Q{{w * w, 2.0 * w * w, 2.0 * m, -2.0}};
      const Poly R{{-w * w, -w * w, 2.0 * static_cast<double>(n)}};
      return QesOde(P, Q, R, n);
    }
    case ScaledCase::KleinGordonQ1: {
      const Poly P{{0.0, 0.0, -w, 1.0}};
      const Poly Q{{0.0, 0.0, 2.0 * (m + w), -2.0}};
      const Poly R{{lambda2 * w, -(2.0 * (n + m) * w + lambda2), 2.0 * static_cast<double>(n)}};
      return QesOde(P, Q, R, n);
    }
    case ScaledCase::KleinGordonQ2: {
      const Poly P{{0.0, -w * w, 0.0, 1.0}};
      const Poly Q{{w * w, 2.0 * w * w, 2.0 * m, -2.0}};
      const Poly R{{-w * w, -lambda2, 2.0 * static_cast<double>(n)}};
      return QesOde(P, Q, R, n);
    }
  }
  throw ContractViolation("scaled_ode: unknown case");
}

/// Number of unknowns in the scaled root-and-parameter system:
/// (u_1..u_n, w) plus lambda2 for the Klein-Gordon cases.
inline int stage1_unknowns(ScaledCase c, int n) { return n + 1 + (has_lambda2(c) ? 1 : 0); }

/// Number of equations: n Bethe equations plus the c-coefficient identities
/// that are not automatic for the family. Dirac q=2 is overdetermined by one.
inline int stage1_equations(ScaledCase c, int n) {
  return n + (c == ScaledCase::DiracQ1 ? 1 : 2);
}

namespace detail {

struct Stage1Point {
  std::vector<double> roots;
  double w = 0.0;
  double lambda2 = 0.0;
};

inline Stage1Point unpack_stage1(ScaledCase c, int n, const Vec& x) {
  Stage1Point p;
  p.roots.assign(x.begin(), x.begin() + n);
  p.w = x[static_cast<std::size_t>(n)];
  p.lambda2 = has_lambda2(c) ? x[static_cast<std::size_t>(n + 1)] : 0.0;
  return p;
}

// Residuals: cleared Bethe equations followed by the c1/c0 identity gaps
// (physical scaled coefficient minus the value induced by the roots). For
// Dirac q=1 the c1 identity holds automatically and is omitted.
inline bool stage1_residuals(ScaledCase c, double m, int n, const Vec& x, Vec& f) {
  const auto pt = unpack_stage1(c, n, x);
  const QesOde ode = scaled_ode(c, m, n, pt.w, pt.lambda2);
  auto bethe = bethe_residuals_checked(ode.P, ode.Q, pt.roots, 1e-13);
  if (!bethe) return false;
  f = std::move(*bethe);
  const InducedR induced = r_from_roots(ode.P, ode.Q, n, pt.roots);
  if (c != ScaledCase::DiracQ1) f.push_back(ode.c(1) - induced.c1);
  f.push_back(ode.c(0) - induced.c0);
  return true;
}

inline double stage1_scale(ScaledCase c, double m, int n, const Vec& x) {
  const auto pt = unpack_stage1(c, n, x);
  const QesOde ode = scaled_ode(c, m, n, pt.w, pt.lambda2);
  double s = bethe_residual_scale(ode.P, ode.Q, pt.roots);
  const InducedR induced = r_from_roots(ode.P, ode.Q, n, pt.roots);
  s = std::max(s, std::abs(ode.c(1)) + std::abs(induced.c1));
  s = std::max(s, std::abs(ode.c(0)) + std::abs(induced.c0));
  return s;
}

}  // namespace detail

/// One consistent point of a scaled family: Bethe roots (ascending), the
/// scaled cut-off w = s*beta, and lambda2 for the Klein-Gordon cases.
struct ScaledSolution {
  std::vector<double> roots;
  double w = 0.0;
  double lambda2 = 0.0;
  double residual_norm = 0.0;  // infinity norm of the full scaled system
  double closure_norm = 0.0;
};

namespace detail {

inline double scaled_system_norm(ScaledCase c, double m, int n, const ScaledSolution& s) {
  Vec x(s.roots.begin(), s.roots.end());
  x.push_back(s.w);
  if (has_lambda2(c)) x.push_back(s.lambda2);
  Vec f;
  if (!stage1_residuals(c, m, n, x, f)) return std::numeric_limits<double>::infinity();
  return norm_inf(f);
}

inline bool finalize_scaled(ScaledCase c, double m, int n, ScaledSolution& s, double accept_tol) {
  // Branches forcing w -> 0 are the discarded beta = 0 solutions. Near that
  // limit the whole solution collapses to the origin and residuals shrink
  // with it, so tolerance tests alone cannot reject the shadows; every
  // genuine sector of these families has w of order one.
  if (!(s.w > 1e-4)) return false;
  std::sort(s.roots.begin(), s.roots.end());
  if (!roots_distinct(s.roots, 1e-8)) return false;
  const QesOde ode = scaled_ode(c, m, n, s.w, s.lambda2);
  const Poly S = Poly::from_roots(s.roots);
  s.closure_norm = closure_residual_norm(ode, S);
  s.residual_norm = scaled_system_norm(c, m, n, s);
  const double scale = closure_scale(ode, S);
  return s.closure_norm <= accept_tol * scale && s.residual_norm <= accept_tol * scale;
}

}  // namespace detail

/// Multi-start Newton (Gauss-Newton for the overdetermined Dirac q=2 case)
/// on the scaled root-and-parameter system. For the q=1 families a root can
/// sit exactly on the common zero of P and Q at u=0, where its Bethe
/// equation is trivially satisfied and Newton stalls at quadratic order;
/// candidates with a near-zero root are re-polished with that root pinned
/// to 0 and the pinned refinement kept only when it certifies.
inline std::vector<ScaledSolution> solve_scaled_family(ScaledCase c, double m, int n,
                                                       const SearchConfig& cfg = {},
                                                       std::vector<std::string>* diagnostics = nullptr) {
  if (n < 1) throw ContractViolation("solve_scaled_family: n must be >= 1");
  const int dim = stage1_unknowns(c, n);
  const bool q2 = (c == ScaledCase::DiracQ2 || c == ScaledCase::KleinGordonQ2);

  const auto residual = [&](const detail::Vec& x, detail::Vec& f) { return detail::stage1_residuals(c, m, n, x, f); };
  const auto scale = [&](const detail::Vec& x) { return detail::stage1_scale(c, m, n, x); };

  detail::NewtonOptions nopt;
  nopt.max_iterations = cfg.max_iterations;
  nopt.max_halvings = cfg.max_halvings;
  nopt.step_tol = cfg.step_tol;
  nopt.residual_tol = cfg.residual_tol;

  const double rho = 1.0 + std::abs(m) + n;
  const double radius = cfg.box_factor * rho;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(-radius, radius);
  std::uniform_real_distribution<double> uni_pos(0.05, radius);

  int singular = 0;
  std::vector<ScaledSolution> found;
  auto is_duplicate = [&](const ScaledSolution& s) {
    for (const auto& prev : found) {
      detail::Vec a(prev.roots.begin(), prev.roots.end());
      a.push_back(prev.w);
      a.push_back(prev.lambda2);
      detail::Vec b(s.roots.begin(), s.roots.end());
      b.push_back(s.w);
      b.push_back(s.lambda2);
      if (detail::same_vector(a, b, cfg.dedup_tol)) return true;
    }
    return false;
  };
  auto try_accept = [&](const detail::Vec& x) {
    ScaledSolution s;
    auto pt = detail::unpack_stage1(c, n, x);
    if (q2) pt.w = std::abs(pt.w);  // q=2 systems depend on w^2 only
    s.roots = pt.roots;
    s.w = pt.w;
    s.lambda2 = pt.lambda2;

    // pin a near-zero root to exactly 0 when the cleared Bethe equation is
    // trivial there, then re-solve the reduced square system
    double span = 0.0;
    for (double u : s.roots) span = std::max(span, std::abs(u));
    int zi = -1;
    for (std::size_t i = 0; i < s.roots.size(); ++i)
      if (std::abs(s.roots[i]) <= 1e-5 * (1.0 + span)) zi = static_cast<int>(i);
    const QesOde probe = scaled_ode(c, m, n, s.w == 0.0 ? 1.0 : s.w, s.lambda2);
    if (zi >= 0 && probe.P(0.0) == 0.0 && probe.Q(0.0) == 0.0) {
      // reduced unknowns: remaining roots, w, lambda2
      detail::Vec y;
      for (std::size_t i = 0; i < s.roots.size(); ++i)
        if (static_cast<int>(i) != zi) y.push_back(s.roots[i]);
      y.push_back(s.w);
      if (has_lambda2(c)) y.push_back(s.lambda2);
      const auto reduced = [&](const detail::Vec& yy, detail::Vec& f) -> bool {
        detail::Vec full(yy.begin(), yy.begin() + (n - 1));
        full.insert(full.begin(), 0.0);
        full.push_back(yy[static_cast<std::size_t>(n - 1)]);
        if (has_lambda2(c)) full.push_back(yy[static_cast<std::size_t>(n)]);
        detail::Vec g;
        if (!detail::stage1_residuals(c, m, n, full, g)) return false;
        f.assign(g.begin() + 1, g.end());  // drop the pinned root's trivial equation
        return true;
      };
      const auto reduced_scale = [&](const detail::Vec& yy) {
        detail::Vec full(yy.begin(), yy.begin() + (n - 1));
        full.insert(full.begin(), 0.0);
        full.push_back(yy[static_cast<std::size_t>(n - 1)]);
        if (has_lambda2(c)) full.push_back(yy[static_cast<std::size_t>(n)]);
        return detail::stage1_scale(c, m, n, full);
      };
      auto polish = detail::damped_newton(reduced, reduced_scale, y, nopt);
      if (polish.converged) {
        ScaledSolution snapped;
        snapped.roots.assign(polish.x.begin(), polish.x.begin() + (n - 1));
        snapped.roots.insert(snapped.roots.begin(), 0.0);
        snapped.w = polish.x[static_cast<std::size_t>(n - 1)];
        if (q2) snapped.w = std::abs(snapped.w);
        snapped.lambda2 = has_lambda2(c) ? polish.x[static_cast<std::size_t>(n)] : 0.0;
        if (detail::finalize_scaled(c, m, n, snapped, cfg.accept_tol)) {
          if (!is_duplicate(snapped)) found.push_back(snapped);
          return;
        }
      }
    }

    if (!detail::finalize_scaled(c, m, n, s, cfg.accept_tol)) return;
    if (!is_duplicate(s)) found.push_back(s);
  };

  for (int st = 0; st < cfg.starts; ++st) {
    detail::Vec x0(static_cast<std::size_t>(dim));
    for (int i = 0; i < n; ++i) x0[static_cast<std::size_t>(i)] = uni(rng);
    x0[static_cast<std::size_t>(n)] = uni_pos(rng);  // w starts positive
    if (has_lambda2(c)) x0[static_cast<std::size_t>(n + 1)] = uni(rng);
    auto run = detail::damped_newton(residual, scale, x0, nopt);
    if (run.singular_jacobian) {
      ++singular;
      continue;
    }
    if (!run.converged) continue;
    try_accept(run.x);
  }
  if (diagnostics && singular > 0)
    diagnostics->push_back(std::to_string(singular) + " start(s) abandoned: singular Jacobian");

  std::sort(found.begin(), found.end(), [](const ScaledSolution& a, const ScaledSolution& b) {
    if (a.w != b.w) return a.w < b.w;
    if (a.lambda2 != b.lambda2) return a.lambda2 < b.lambda2;
    return a.roots < b.roots;
  });
  return found;
}

/// Independent brute-force oracle for n <= 2: equates every coefficient of
/// the closure residual to zero and solves the resulting system exactly in
/// the elementary symmetric functions of the roots and the family
/// parameters. Only branches with w > 0 and real distinct roots are
/// returned; the discarded branches all force w = 0.
inline std::vector<ScaledSolution> eliminate_small_n(ScaledCase c, double m, int n) {
  if (n != 1 && n != 2) throw ContractViolation("eliminate_small_n: n must be 1 or 2");
  std::vector<ScaledSolution> out;
  auto push = [&](std::vector<double> roots, double w, double lambda2) {
    ScaledSolution s;
    s.roots = std::move(roots);
    s.w = w;
    s.lambda2 = lambda2;
    if (detail::finalize_scaled(c, m, n, s, 1e-10)) out.push_back(s);
  };

  switch (c) {
    case ScaledCase::DiracQ1:
      if (n == 1) {
        // u1 = 0 and w = 1; the u1 = m + w branch forces w = 0
        push({0.0}, 1.0, 0.0);
      } else {
        // roots {0, e}, e = 1 + 2m - m w, with (m+1)w^2 - 3(m+1)w + (2m+1) = 0
        const Poly wpoly{{2.0 * m + 1.0, -3.0 * (m + 1.0), m + 1.0}};
        for (double w : roots_real_upto_cubic(wpoly)) push({0.0, 1.0 + 2.0 * m - m * w}, w, 0.0);
      }
      break;
    case ScaledCase::KleinGordonQ1:
      if (n == 1) {
        // u1 = 0, lambda2 = 0, w = 1
        push({0.0}, 1.0, 0.0);
      } else {
        // same w-quadratic as Dirac q=1 with m = nu; lambda2 = 0 forced
        const Poly wpoly{{2.0 * m + 1.0, -3.0 * (m + 1.0), m + 1.0}};
        for (double w : roots_real_upto_cubic(wpoly)) push({0.0, 1.0 + 2.0 * m - m * w}, w, 0.0);
      }
      break;
    case ScaledCase::DiracQ2:
    case ScaledCase::KleinGordonQ2:
      if (n == 1) {
        // u1 = -1 and w^2 = 2(m+1); the u1 in {0, m} branches force w = 0
        const double w = std::sqrt(2.0 * (m + 1.0));
        const double lam2 = 2.0 * (m + 1.0);  // KG only; c1 identity
        push({-1.0}, w, c == ScaledCase::KleinGordonQ2 ? lam2 : 0.0);
      } else {
        // e1^2 - (m-4) e1 - (3+6m) = 0, e0 = -e1, w^2 = 2+4m-2 e1;
        // the Klein-Gordon case additionally fixes lambda2 = w^2
        const Poly e1poly{{-(3.0 + 6.0 * m), -(m - 4.0), 1.0}};
        for (double e1 : roots_real_upto_cubic(e1poly)) {
          const double w2 = 2.0 + 4.0 * m - 2.0 * e1;
          if (w2 <= 0.0) continue;
          const double disc = e1 * e1 + 4.0 * e1;  // e0 = -e1
          if (disc <= 0.0) continue;
          const double sq = std::sqrt(disc);
          push({(e1 - sq) / 2.0, (e1 + sq) / 2.0}, std::sqrt(w2),
               c == ScaledCase::KleinGordonQ2 ? w2 : 0.0);
        }
      }
      break;
  }
  std::sort(out.begin(), out.end(), [](const ScaledSolution& a, const ScaledSolution& b) {
    if (a.w != b.w) return a.w < b.w;
    return a.roots < b.roots;
  });
  return out;
}

}  // namespace qesrel
