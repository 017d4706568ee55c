#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qesrel/newton.hpp"
#include "qesrel/ode.hpp"
#include "qesrel/poly.hpp"

namespace qesrel {

/// R-coefficients induced by a prescribed root set: the unique (c2, c1, c0)
/// for which the operator with the given P, Q admits the monic degree-n
/// polynomial with those roots as a solution.
struct InducedR {
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;
  Poly to_poly() const { return Poly{{c0, c1, c2}}; }
};

inline InducedR r_from_roots(const Poly& P, const Poly& Q, int n, std::span<const double> roots) {
  if (P.degree() > 3 || Q.degree() > 3)
    throw ContractViolation("r_from_roots: deg P and deg Q must be <= 3");
  if (static_cast<int>(roots.size()) != n)
    throw ContractViolation("r_from_roots: expected " + std::to_string(n) + " roots, got " +
                            std::to_string(roots.size()));
  const double a3 = P.coeff(3), a2 = P.coeff(2);
  const double b3 = Q.coeff(3), b2 = Q.coeff(2), b1 = Q.coeff(1);
  double s1 = 0.0, s2 = 0.0;
  for (double t : roots) {
    s1 += t;
    s2 += t * t;
  }
  InducedR r;
  r.c2 = -n * b3;
  r.c1 = -(b3 * s1 + n * (n - 1) * a3 + n * b2);
  r.c0 = -(b3 * s2 + (2.0 * (n - 1) * a3 + b2) * s1 + n * (n - 1) * a2 + n * b1);
  return r;
}

namespace detail {

// Cleared Bethe residuals: 2 P(t_i) sum_{j!=i} 1/(t_i - t_j) + Q(t_i).
// Returns nothing when two roots coincide within `distinct_tol` (relative).
inline std::optional<std::vector<double>> bethe_residuals_checked(const Poly& P, const Poly& Q,
                                                                  std::span<const double> roots,
                                                                  double distinct_tol, int* bad_i = nullptr,
                                                                  int* bad_j = nullptr) {
  const int n = static_cast<int>(roots.size());
  double span = 0.0;
  for (double t : roots) span = std::max(span, std::abs(t));
  std::vector<double> res(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double pair_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = roots[static_cast<std::size_t>(i)] - roots[static_cast<std::size_t>(j)];
      if (std::abs(d) <= distinct_tol * (1.0 + span)) {
        if (bad_i) *bad_i = std::min(i, j);
        if (bad_j) *bad_j = std::max(i, j);
        return std::nullopt;
      }
      pair_sum += 1.0 / d;
    }
    const double t = roots[static_cast<std::size_t>(i)];
    res[static_cast<std::size_t>(i)] = 2.0 * P(t) * pair_sum + Q(t);
  }
  return res;
}

// Magnitude of the summands of the cleared residual at each root; used as a
// relative scale for convergence and acceptance tests.
inline double bethe_residual_scale(const Poly& P, const Poly& Q, std::span<const double> roots) {
  const int n = static_cast<int>(roots.size());
  double scale = 1.0;
  for (int i = 0; i < n; ++i) {
    const double t = std::abs(roots[static_cast<std::size_t>(i)]);
    double pabs = 0.0, qabs = 0.0;
    for (int k = 0; k <= 3; ++k) {
      pabs += std::abs(P.coeff(k)) * std::pow(t, k);
      qabs += std::abs(Q.coeff(k)) * std::pow(t, k);
    }
    double pair_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = roots[static_cast<std::size_t>(i)] - roots[static_cast<std::size_t>(j)];
      if (d != 0.0) pair_sum += 1.0 / std::abs(d);
    }
    scale = std::max(scale, 2.0 * pabs * pair_sum + qabs);
  }
  return scale;
}

}  // namespace detail

/// Cleared Bethe residual vector: entry i is
///   2 P(t_i) sum_{j != i} 1/(t_i - t_j) + Q(t_i),
/// which vanishes for every valid root set. Roots lying on zeros of P are
/// admitted (the cleared form is polynomial there). Coincident roots are a
/// contract violation.
inline std::vector<double> bethe_residuals(const Poly& P, const Poly& Q, std::span<const double> roots,
                                           double distinct_tol = 1e-8) {
  int bi = -1, bj = -1;
  auto res = detail::bethe_residuals_checked(P, Q, roots, distinct_tol, &bi, &bj);
  if (!res)
    throw ContractViolation("bethe_residuals: roots " + std::to_string(bi) + " and " + std::to_string(bj) +
                            " coincide");
  return *res;
}

struct SearchConfig {
  int starts = 200;
  double box_factor = 10.0;  // box is [-box_factor*rho, +box_factor*rho]
  std::uint64_t seed = 42;
  int max_iterations = 100;
  int max_halvings = 40;
  double step_tol = 1e-14;
  double residual_tol = 1e-12;
  double dedup_tol = 1e-8;
  double distinct_tol = 1e-8;
  double accept_tol = 1e-10;  // closure-oracle acceptance threshold
};

/// One certified root set of the Bethe system for fixed P, Q, n.
struct BetheSolution {
  int n = 0;
  std::vector<double> roots;  // ascending
  InducedR c_coeffs;
  double bethe_residual_norm = 0.0;
  double closure_residual_norm = 0.0;
  double acceptance_threshold = 0.0;
};

struct BetheSolveResult {
  std::vector<BetheSolution> solutions;
  std::vector<std::string> diagnostics;
};

namespace detail {

inline bool same_vector(std::span<const double> a, std::span<const double> b, double tol) {
  if (a.size() != b.size()) return false;
  double d2 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d2 += (a[i] - b[i]) * (a[i] - b[i]);
    n2 += a[i] * a[i];
  }
  return std::sqrt(d2) <= tol * (1.0 + std::sqrt(n2));
}

inline bool roots_distinct(std::span<const double> roots, double tol) {
  double span = 0.0;
  for (double t : roots) span = std::max(span, std::abs(t));
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = i + 1; j < roots.size(); ++j)
      if (std::abs(roots[i] - roots[j]) <= tol * (1.0 + span)) return false;
  return true;
}

}  // namespace detail

/// Multi-start damped Newton search over real root vectors of the Bethe
/// system. Converged candidates are deduplicated, certified against the
/// closure oracle with R from r_from_roots, and returned sorted by root
/// vector. Deterministic for a fixed seed.
///
/// A root sitting on a common zero of P and Q (t = 0 in the q = 1 soft-core
/// reductions) makes its cleared equation degenerate at quadratic order, so
/// candidates with a near-zero root are re-polished with that root pinned to
/// exactly 0 and kept only when the pinned set certifies.
inline BetheSolveResult solve_bethe(const Poly& P, const Poly& Q, int n, const SearchConfig& cfg = {}) {
  if (n < 1) throw ContractViolation("solve_bethe: n must be >= 1");
  BetheSolveResult out;

  const auto residual = [&](const detail::Vec& x, detail::Vec& f) -> bool {
    auto r = detail::bethe_residuals_checked(P, Q, x, 1e-13);
    if (!r) return false;
    f = std::move(*r);
    return true;
  };
  const auto res_scale = [&](const detail::Vec& x) { return detail::bethe_residual_scale(P, Q, x); };

  // box radius from the coefficient scale of Q against P
  const double rho = 1.0 + Q.max_abs_coeff() / std::max(1.0, P.max_abs_coeff());
  const double radius = cfg.box_factor * rho;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(-radius, radius);

  detail::NewtonOptions nopt;
  nopt.max_iterations = cfg.max_iterations;
  nopt.max_halvings = cfg.max_halvings;
  nopt.step_tol = cfg.step_tol;
  nopt.residual_tol = cfg.residual_tol;

  int singular = 0, rejected_confluent = 0;
  std::vector<std::vector<double>> seen;

  auto certify = [&](std::vector<double> roots) -> std::optional<BetheSolution> {
    std::sort(roots.begin(), roots.end());
    if (!detail::roots_distinct(roots, cfg.distinct_tol)) {
      ++rejected_confluent;
      return std::nullopt;
    }
    BetheSolution sol;
    sol.n = n;
    sol.roots = std::move(roots);
    sol.c_coeffs = r_from_roots(P, Q, n, sol.roots);
    const QesOde ode(P, Q, sol.c_coeffs.to_poly(), n);
    const Poly S = Poly::from_roots(sol.roots);
    sol.closure_residual_norm = closure_residual_norm(ode, S);
    sol.bethe_residual_norm = detail::norm_inf(bethe_residuals(P, Q, sol.roots, cfg.distinct_tol));
    sol.acceptance_threshold = cfg.accept_tol * closure_scale(ode, S);
    if (sol.closure_residual_norm > sol.acceptance_threshold ||
        sol.bethe_residual_norm > sol.acceptance_threshold)
      return std::nullopt;
    return sol;
  };

  auto pinned_refinement = [&](const detail::Vec& x) -> std::optional<BetheSolution> {
    if (P(0.0) != 0.0 || Q(0.0) != 0.0) return std::nullopt;
    double span = 0.0;
    for (double t : x) span = std::max(span, std::abs(t));
    int zi = -1;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (std::abs(x[i]) <= 1e-5 * (1.0 + span)) zi = static_cast<int>(i);
    if (zi < 0) return std::nullopt;
    detail::Vec rest;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (static_cast<int>(i) != zi) rest.push_back(x[i]);
    if (n == 1) return certify({0.0});
    const auto reduced = [&](const detail::Vec& y, detail::Vec& f) -> bool {
      detail::Vec full(y);
      full.insert(full.begin(), 0.0);
      detail::Vec g;
      auto r = detail::bethe_residuals_checked(P, Q, full, 1e-13);
      if (!r) return false;
      g = std::move(*r);
      f.assign(g.begin() + 1, g.end());  // the pinned root's equation is trivial
      return true;
    };
    const auto reduced_scale = [&](const detail::Vec& y) {
      detail::Vec full(y);
      full.insert(full.begin(), 0.0);
      return detail::bethe_residual_scale(P, Q, full);
    };
    auto polish = detail::damped_newton(reduced, reduced_scale, rest, nopt);
    if (!polish.converged) return std::nullopt;
    std::vector<double> roots(polish.x.begin(), polish.x.end());
    roots.push_back(0.0);
    return certify(std::move(roots));
  };

  for (int s = 0; s < cfg.starts; ++s) {
    detail::Vec x0(static_cast<std::size_t>(n));
    for (double& v : x0) v = uni(rng);
    auto run = detail::damped_newton(residual, res_scale, x0, nopt);
    if (run.singular_jacobian) {
      ++singular;
      continue;
    }
    if (!run.converged) continue;

    std::optional<BetheSolution> sol = pinned_refinement(run.x);
    if (!sol) sol = certify(run.x);
    if (!sol) continue;
    bool dup = false;
    for (const auto& v : seen)
      if (detail::same_vector(v, sol->roots, cfg.dedup_tol)) {
        dup = true;
        break;
      }
    if (dup) continue;
    seen.push_back(sol->roots);
    out.solutions.push_back(std::move(*sol));
  }

  std::sort(out.solutions.begin(), out.solutions.end(),
            [](const BetheSolution& a, const BetheSolution& b) { return a.roots < b.roots; });
  if (singular > 0) out.diagnostics.push_back(std::to_string(singular) + " start(s) abandoned: singular Jacobian");
  if (rejected_confluent > 0)
    out.diagnostics.push_back(std::to_string(rejected_confluent) +
                              " converged candidate(s) rejected: roots within distinctness tolerance");
  return out;
}

}  // namespace qesrel
