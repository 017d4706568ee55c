#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qesrel/families.hpp"
#include "qesrel/ode.hpp"
#include "qesrel/poly.hpp"

namespace qesrel {

enum class ModelKind { Dirac, KleinGordon };
enum class ParameterPolicy { GivenCouplingSolveBeta, GivenBetaSolveCoupling, CheckOnly };

inline const char* policy_name(ParameterPolicy p) {
  switch (p) {
    case ParameterPolicy::GivenCouplingSolveBeta: return "solve-beta";
    case ParameterPolicy::GivenBetaSolveCoupling: return "solve-coupling";
    case ParameterPolicy::CheckOnly: return "check";
  }
  return "?";
}

/// One physical problem instance. Natural units (hbar = c = e = 1).
/// Dirac sectors use the pseudospin limit V + S = C_q and carry the coupling
/// difference Z_delta = Z_v - Z_s; Klein-Gordon sectors carry (Z_s, Z_v).
struct ModelSector {
  ModelKind kind = ModelKind::Dirac;
  int q = 1;       // 1 or 2
  int n = 1;       // target polynomial degree / excitation index
  double mu = 1.0; // mass
  int kappa = 1;   // Dirac spin-orbit number (nonzero)
  int ell = 0;     // KG orbital number; nu = ell + 1
  double c_q = 0.0;        // Dirac pseudospin constant
  double z_delta = 0.0;    // Dirac coupling (Z_v - Z_s)
  double z_s = 0.0, z_v = 0.0;  // KG couplings
  std::optional<double> beta;   // cut-off; absent when solved for
  ParameterPolicy policy = ParameterPolicy::GivenCouplingSolveBeta;
  bool allow_any_kappa = false;

  int nu() const { return ell + 1; }
  double angular_m() const { return kind == ModelKind::Dirac ? static_cast<double>(kappa) : static_cast<double>(nu()); }

  void validate() const {
    if (q != 1 && q != 2) throw ContractViolation("sector: q must be 1 or 2");
    if (n < 1) throw ContractViolation("sector: n must be a positive integer");
    if (!(mu > 0.0)) throw ContractViolation("sector: mu must be positive");
    if (kind == ModelKind::Dirac) {
      if (kappa == 0) throw ContractViolation("sector: kappa must be nonzero");
      if (kappa < 1 && !allow_any_kappa)
        throw ContractViolation("sector: kappa >= 1 required for a regular lower component "
                                "(override with allow_any_kappa)");
    } else {
      if (ell < 0) throw ContractViolation("sector: ell must be non-negative");
    }
    if (beta && !(*beta > 0.0)) throw ContractViolation("sector: beta must be positive when given");
    const bool needs_beta = policy != ParameterPolicy::GivenCouplingSolveBeta;
    if (needs_beta && !beta) throw ContractViolation("sector: policy requires beta");
    if (!needs_beta && beta) throw ContractViolation("sector: beta must be absent when solved for");
  }

  ScaledCase scaled_case() const {
    if (kind == ModelKind::Dirac) return q == 1 ? ScaledCase::DiracQ1 : ScaledCase::DiracQ2;
    return q == 1 ? ScaledCase::KleinGordonQ1 : ScaledCase::KleinGordonQ2;
  }
};

/// Energy-dependent quantities. Dirac: gamma = mu - E + C_q and decay rate
/// sigma with sigma^2 = (mu+E) gamma. Klein-Gordon: decay rate xi with
/// xi^2 = mu^2 - E^2, lambda1 = 2(mu Z_s + E Z_v), lambda2 = Z_s^2 - Z_v^2.
struct DerivedQuantities {
  double energy = 0.0;
  double gamma = 0.0;        // Dirac only
  double sigma_or_xi = 0.0;  // decay rate in the wavefunction exponent
  double lambda1 = 0.0;      // KG only
  double lambda2 = 0.0;      // KG only
};

struct EnergyCandidate {
  double energy = 0.0;
  bool bound_state_valid = true;
  std::string note;
};

/// The exact (P, Q, R) of the transformed radial equation in t = (r^q + beta^q)^{1/q}.
inline QesOde build_ode(const ModelSector& sec, const DerivedQuantities& d) {
  const double beta = sec.beta.value();
  if (sec.kind == ModelKind::Dirac) {
    const double s = d.sigma_or_xi, k = sec.kappa;
    const double gzd = d.gamma * sec.z_delta;
    if (sec.q == 1) {
      return QesOde(Poly{{0.0, -beta, 1.0}}, Poly{{0.0, 2.0 * (k + s * beta), -2.0 * s}},
                    Poly{{gzd * beta, -(2.0 * s * k + gzd)}}, sec.n);
    }
    return QesOde(Poly{{0.0, -beta * beta, 0.0, 1.0}},
                  Poly{{beta * beta, 2.0 * s * beta * beta, 2.0 * k, -2.0 * s}},
                  Poly{{-s * beta * beta, -s * s * beta * beta, -(2.0 * s * k + gzd)}}, sec.n);
  }
  const double x = d.sigma_or_xi, nu = sec.nu();
  if (sec.q == 1) {
    return QesOde(Poly{{0.0, 0.0, -beta, 1.0}}, Poly{{0.0, 0.0, 2.0 * (nu + x * beta), -2.0 * x}},
                  Poly{{d.lambda2 * beta, -(d.lambda1 * beta + d.lambda2), d.lambda1 - 2.0 * x * nu}}, sec.n);
  }
  return QesOde(Poly{{0.0, -beta * beta, 0.0, 1.0}},
                Poly{{beta * beta, 2.0 * x * beta * beta, 2.0 * nu, -2.0 * x}},
                Poly{{-x * beta * beta, -d.lambda2, d.lambda1 - 2.0 * x * nu}}, sec.n);
}

namespace detail {

inline double canon_zero(double v) { return v == 0.0 ? 0.0 : v; }

inline double dirac_energy(double mu, double c_q, double z_delta, int n, int kappa) {
  const double nk2 = 4.0 * (n + kappa) * (n + kappa);
  return ((mu + c_q) * z_delta * z_delta - mu * nk2) / (nk2 + z_delta * z_delta);
}

}  // namespace detail

/// Candidate energies fixed by the quantum numbers and couplings alone.
/// Dirac: the unique value from the squared coupling identity
/// 4 (n+kappa)^2 sigma^2 = gamma^2 Z_delta^2. Klein-Gordon: both roots of
/// E^2 [(n+nu)^2 + Z_v^2] + 2 mu Z_s Z_v E + mu^2 (Z_s^2 - (n+nu)^2) = 0,
/// each flagged by whether the unsquared relation (n+nu) xi = mu Z_s + E Z_v
/// holds with xi = +sqrt(mu^2 - E^2) > 0.
inline std::vector<EnergyCandidate> energy_candidates(const ModelSector& sec) {
  std::vector<EnergyCandidate> out;
  if (sec.kind == ModelKind::Dirac) {
    EnergyCandidate c;
    c.energy = detail::dirac_energy(sec.mu, sec.c_q, sec.z_delta, sec.n, sec.kappa);
    const double gamma = sec.mu - c.energy + sec.c_q;
    const double sig2 = (sec.mu + c.energy) * gamma;
    if (sig2 <= 0.0) {
      c.bound_state_valid = false;
      c.note = "sigma^2 = (mu+E)gamma not positive";
    } else if (gamma * sec.z_delta >= 0.0) {
      c.bound_state_valid = false;
      c.note = "sign inconsistency: gamma*Z_delta must be negative for sigma > 0";
    }
    out.push_back(std::move(c));
    return out;
  }
  const double nn = sec.n + sec.nu();
  const double qa = nn * nn + sec.z_v * sec.z_v;
  const double qb = 2.0 * sec.mu * sec.z_s * sec.z_v;
  const double qc = sec.mu * sec.mu * (sec.z_s * sec.z_s - nn * nn);
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return out;
  const double sq = std::sqrt(disc);
  std::vector<double> energies;
  if (sq == 0.0) {
    energies.push_back(-qb / (2.0 * qa));
  } else {
    energies.push_back((-qb - sq) / (2.0 * qa));
    energies.push_back((-qb + sq) / (2.0 * qa));
  }
  for (double e : energies) {
    EnergyCandidate c;
    c.energy = (e == 0.0) ? 0.0 : e;  // normalize -0
    const double xi2 = sec.mu * sec.mu - e * e;
    if (xi2 < -1e-12 * sec.mu * sec.mu) {
      c.bound_state_valid = false;
      c.note = "|E| exceeds mu";
    } else {
      const double xi = std::sqrt(std::max(0.0, xi2));
      const double lhs = nn * xi, rhs = sec.mu * sec.z_s + e * sec.z_v;
      if (xi <= 1e-12 * sec.mu) {
        c.bound_state_valid = false;
        c.note = "xi = 0: exponential decay lost, not normalizable";
      } else if (std::abs(lhs - rhs) > 1e-10 * (1.0 + std::abs(lhs) + std::abs(rhs))) {
        c.bound_state_valid = false;
        c.note = "unsquared branch relation (n+nu)xi = mu Z_s + E Z_v fails";
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// A fully-determined sector: concrete parameters, derived quantities,
/// certified Bethe data and the printed-constraint residuals.
struct SectorSolution {
  ModelSector sector;  // with beta and couplings concretized
  DerivedQuantities derived;
  BetheSolution bethe;  // roots in the t coordinate
  std::map<std::string, double> constraint_residuals;
  bool certified = false;
  std::vector<std::string> diagnostics;
};

struct SectorSolveResult {
  std::vector<SectorSolution> solutions;
  std::vector<std::string> diagnostics;
};

inline std::map<std::string, double> constraint_residuals(const SectorSolution& sol);

namespace detail {

inline double root_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Assemble, certify and annotate one physical solution.
inline std::optional<SectorSolution> make_solution(const ModelSector& base, DerivedQuantities d,
                                                   const ScaledSolution& s1, double beta,
                                                   const SearchConfig& cfg,
                                                   std::vector<std::string>* diags) {
  const double s = d.sigma_or_xi;
  if (!(s > 0.0) || !(beta > 0.0)) {
    if (diags) diags->push_back("candidate dropped: nonpositive decay rate or cut-off");
    return std::nullopt;
  }
  SectorSolution sol;
  sol.sector = base;
  sol.sector.beta = beta;
  sol.derived = d;
  sol.bethe.n = base.n;
  for (double u : s1.roots) sol.bethe.roots.push_back(u / s);
  std::sort(sol.bethe.roots.begin(), sol.bethe.roots.end());

  const QesOde ode = build_ode(sol.sector, sol.derived);
  const Poly S = Poly::from_roots(sol.bethe.roots);
  sol.bethe.c_coeffs = r_from_roots(ode.P, ode.Q, base.n, sol.bethe.roots);
  sol.bethe.closure_residual_norm = closure_residual_norm(ode, S);
  sol.bethe.bethe_residual_norm =
      norm_inf(bethe_residuals(ode.P, ode.Q, sol.bethe.roots, cfg.distinct_tol));
  sol.bethe.acceptance_threshold = cfg.accept_tol * closure_scale(ode, S);
  sol.certified = sol.bethe.closure_residual_norm <= sol.bethe.acceptance_threshold &&
                  sol.bethe.bethe_residual_norm <= sol.bethe.acceptance_threshold;
  if (!sol.certified) {
    if (diags)
      diags->push_back("candidate dropped: closure residual " +
                       std::to_string(sol.bethe.closure_residual_norm) + " above threshold");
    return std::nullopt;
  }
  sol.constraint_residuals = constraint_residuals(sol);
  return sol;
}

}  // namespace detail

/// Two-stage sector solve. Stage 1 finds all consistent scaled
/// (roots, w, lambda2) points by multi-start Newton. Stage 2 maps them to
/// physical (E, sigma/xi, beta, t_i) under the sector's parameter policy and
/// certifies each result against the closure oracle built from the physical
/// coefficients.
inline SectorSolveResult solve_sector(const ModelSector& sec, const SearchConfig& cfg = {}) {
  sec.validate();
  SectorSolveResult out;
  const ScaledCase sc = sec.scaled_case();
  const double m = sec.angular_m();

  auto stage1 = solve_scaled_family(sc, m, sec.n, cfg, &out.diagnostics);
  if (stage1.empty()) {
    out.diagnostics.push_back("no scaled root-and-constraint solution found");
    return out;
  }

  // q=2, n=1: report every real root of the scaled cubic with the residual
  // of the full system, for transparency about the branch the system forces.
  if (sec.q == 2 && sec.n == 1) {
    for (const auto& s1 : stage1) {
      const QesOde so = scaled_ode(sc, m, sec.n, s1.w, s1.lambda2);
      Poly cubic = so.Q;  // n=1 Bethe equation is Q(u) = 0
      for (double r : roots_real_upto_cubic(cubic)) {
        ScaledSolution probe = s1;
        probe.roots = {r};
        const double resid = detail::scaled_system_norm(sc, m, sec.n, probe);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "scaled cubic root u=%.12g at w=%.12g: full-system residual %.3e",
                      r, s1.w, resid);
        out.diagnostics.emplace_back(buf);
      }
    }
  }

  for (const auto& s1 : stage1) {
    if (sec.kind == ModelKind::Dirac) {
      if (sec.policy == ParameterPolicy::GivenCouplingSolveBeta ||
          sec.policy == ParameterPolicy::CheckOnly) {
        auto cands = energy_candidates(sec);
        for (const auto& cand : cands) {
          if (!cand.bound_state_valid) {
            out.diagnostics.push_back("energy candidate dropped: " + cand.note);
            continue;
          }
          DerivedQuantities d;
          d.energy = cand.energy;
          d.gamma = sec.mu - d.energy + sec.c_q;
          d.sigma_or_xi = std::sqrt((sec.mu + d.energy) * d.gamma);
          double beta = s1.w / d.sigma_or_xi;
          if (sec.policy == ParameterPolicy::CheckOnly) {
            const double mismatch = std::abs(d.sigma_or_xi * *sec.beta - s1.w);
            if (mismatch > 1e-8 * (1.0 + s1.w)) {
              char buf[160];
              std::snprintf(buf, sizeof(buf),
                            "check failed: sigma*beta = %.12g but the scaled system requires w = %.12g",
                            d.sigma_or_xi * *sec.beta, s1.w);
              out.diagnostics.emplace_back(buf);
              continue;
            }
            beta = *sec.beta;
          }
          if (auto sol = detail::make_solution(sec, d, s1, beta, cfg, &out.diagnostics))
            out.solutions.push_back(std::move(*sol));
        }
      } else {  // GivenBetaSolveCoupling
        const double sigma = s1.w / *sec.beta;
        // (mu+E)(mu - E + C) = sigma^2, then Z_delta from the coupling identity
        const double C = sec.c_q;
        const double disc = C * C + 4.0 * (sec.mu * sec.mu + sec.mu * C - sigma * sigma);
        if (disc < 0.0) {
          out.diagnostics.push_back("no real energy for the required decay rate");
          continue;
        }
        for (double sgn : {-1.0, 1.0}) {
          const double e = 0.5 * (C + sgn * std::sqrt(disc));
          if (sgn > 0.0 && std::sqrt(disc) == 0.0) continue;  // coincident roots
          DerivedQuantities d;
          d.energy = e;
          d.gamma = sec.mu - e + C;
          if (std::abs(d.gamma) < 1e-14 * (1.0 + sec.mu)) {
            out.diagnostics.push_back("energy branch dropped: gamma = 0");
            continue;
          }
          d.sigma_or_xi = sigma;
          ModelSector with_coupling = sec;
          with_coupling.z_delta = detail::canon_zero(-2.0 * sigma * (sec.n + sec.kappa) / d.gamma);
          if (auto sol = detail::make_solution(with_coupling, d, s1, *sec.beta, cfg, &out.diagnostics))
            out.solutions.push_back(std::move(*sol));
        }
      }
    } else {  // Klein-Gordon
      const double nu = sec.nu();
      if (sec.policy == ParameterPolicy::GivenCouplingSolveBeta ||
          sec.policy == ParameterPolicy::CheckOnly) {
        const double lam2_phys = sec.z_s * sec.z_s - sec.z_v * sec.z_v;
        if (std::abs(lam2_phys - s1.lambda2) > 1e-8 * (1.0 + std::abs(lam2_phys))) {
          char buf[160];
          std::snprintf(buf, sizeof(buf),
                        "couplings dropped: sector requires lambda2 = %.12g but Z_s^2 - Z_v^2 = %.12g",
                        s1.lambda2, lam2_phys);
          out.diagnostics.emplace_back(buf);
          continue;
        }
        auto cands = energy_candidates(sec);
        if (cands.empty()) out.diagnostics.push_back("no real energy root for the given couplings");
        for (const auto& cand : cands) {
          if (!cand.bound_state_valid) {
            out.diagnostics.push_back("energy candidate dropped: " + cand.note);
            continue;
          }
          DerivedQuantities d;
          d.energy = cand.energy;
          d.sigma_or_xi = std::sqrt(sec.mu * sec.mu - d.energy * d.energy);
          d.lambda1 = 2.0 * (sec.mu * sec.z_s + d.energy * sec.z_v);
          d.lambda2 = lam2_phys;
          double beta = s1.w / d.sigma_or_xi;
          if (sec.policy == ParameterPolicy::CheckOnly) {
            const double mismatch = std::abs(d.sigma_or_xi * *sec.beta - s1.w);
            if (mismatch > 1e-8 * (1.0 + s1.w)) {
              char buf[160];
              std::snprintf(buf, sizeof(buf),
                            "check failed: xi*beta = %.12g but the scaled system requires w = %.12g",
                            d.sigma_or_xi * *sec.beta, s1.w);
              out.diagnostics.emplace_back(buf);
              continue;
            }
            beta = *sec.beta;
          }
          if (auto sol = detail::make_solution(sec, d, s1, beta, cfg, &out.diagnostics))
            out.solutions.push_back(std::move(*sol));
        }
      } else {  // GivenBetaSolveCoupling
        const double xi = s1.w / *sec.beta;
        if (xi >= sec.mu + 1e-14) {
          out.diagnostics.push_back("no real energy: required xi exceeds mu");
          continue;
        }
        const double e_mag = std::sqrt(std::max(0.0, sec.mu * sec.mu - xi * xi));
        const double lam1 = 2.0 * xi * (sec.n + nu);
        const double lam2 = s1.lambda2;
        std::vector<double> energies = {e_mag};
        if (e_mag > 0.0) energies.push_back(-e_mag);
        for (double e : energies) {
          const double dv = sec.mu * sec.mu * (lam1 * lam1 - 4.0 * xi * xi * lam2);
          if (dv < 0.0) {
            out.diagnostics.push_back("coupling branch dropped: negative discriminant for Z_v");
            continue;
          }
          for (double sgn : {-1.0, 1.0}) {
            if (sgn > 0.0 && dv == 0.0) continue;
            const double zv = detail::canon_zero((-lam1 * e + sgn * std::sqrt(dv)) / (2.0 * xi * xi));
            const double zs = detail::canon_zero((lam1 / 2.0 - e * zv) / sec.mu);
            DerivedQuantities d;
            d.energy = e;
            d.sigma_or_xi = xi;
            d.lambda1 = lam1;
            d.lambda2 = lam2;
            ModelSector with_coupling = sec;
            with_coupling.z_s = zs;
            with_coupling.z_v = zv;
            if (auto sol = detail::make_solution(with_coupling, d, s1, *sec.beta, cfg, &out.diagnostics))
              out.solutions.push_back(std::move(*sol));
          }
        }
      }
    }
  }

  std::sort(out.solutions.begin(), out.solutions.end(), [](const SectorSolution& a, const SectorSolution& b) {
    const double ba = a.sector.beta.value(), bb = b.sector.beta.value();
    if (ba != bb) return ba < bb;
    if (a.derived.energy != b.derived.energy) return a.derived.energy < b.derived.energy;
    if (a.sector.z_delta != b.sector.z_delta) return a.sector.z_delta < b.sector.z_delta;
    if (a.sector.z_s != b.sector.z_s) return a.sector.z_s < b.sector.z_s;
    if (a.sector.z_v != b.sector.z_v) return a.sector.z_v < b.sector.z_v;
    return a.bethe.roots < b.bethe.roots;
  });
  // deduplicate coincident branches (e.g. a double energy root); distinct
  // recovered couplings at the same energy are distinct solutions
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b)); };
  std::vector<SectorSolution> unique;
  for (auto& s : out.solutions) {
    bool dup = false;
    for (const auto& prev : unique) {
      if (close(prev.sector.beta.value(), s.sector.beta.value()) &&
          close(prev.derived.energy, s.derived.energy) &&
          close(prev.sector.z_delta, s.sector.z_delta) && close(prev.sector.z_s, s.sector.z_s) &&
          close(prev.sector.z_v, s.sector.z_v) && detail::same_vector(prev.bethe.roots, s.bethe.roots, 1e-8)) {
        dup = true;
        break;
      }
    }
    if (!dup) unique.push_back(std::move(s));
  }
  out.solutions = std::move(unique);
  return out;
}

/// Residuals of the printed closed-form constraints applicable to the
/// sector, in squared/sign-free form where one exists. The verbatim n=2
/// conditions are evaluated for documentation although they do not vanish
/// on certified solutions; the independently derived n=2 quadratic
/// (m+1)w^2 - 3(m+1)w + (2m+1) does.
inline std::map<std::string, double> constraint_residuals(const SectorSolution& sol) {
  std::map<std::string, double> r;
  const ModelSector& sec = sol.sector;
  const DerivedQuantities& d = sol.derived;
  const double beta = sec.beta.value();
  const double s = d.sigma_or_xi;
  const double w = s * beta;
  const int n = sec.n;

  if (sec.kind == ModelKind::Dirac) {
    const double k = sec.kappa;
    const double gzd = d.gamma * sec.z_delta;
    r["Eq42-energy"] = d.energy - detail::dirac_energy(sec.mu, sec.c_q, sec.z_delta, n, sec.kappa);
    r["Eq39-squared"] = 4.0 * s * s * (n + k) * (n + k) - gzd * gzd;
    if (sec.q == 1 && n == 1) r["Eq44"] = beta * (2.0 * s + gzd) + 2.0 * k;
    if (sec.q == 1 && n == 2) {
      r["Eq48-verbatim"] = gzd * gzd * beta * beta * (k * k + 7.0 * k + 11.0) +
                           2.0 * gzd * beta * (3.0 * k * k * k + 15.0 * k * k + 22.0 * k + 8.0) +
                           4.0 * k * (k + 1.0) * (k + 2.0) * (k + 2.0);
      r["derived-n2-quadratic"] = (k + 1.0) * w * w - 3.0 * (k + 1.0) * w + (2.0 * k + 1.0);
      double e = sol.bethe.roots.front();
      for (double t : sol.bethe.roots)
        if (std::abs(t) > std::abs(e)) e = t;
      r["n2-root-quadratic"] = s * e * e - (1.0 + k + w) * e + beta;
    }
    if (sec.q == 2) {
      double s1 = 0.0, s2 = 0.0;
      for (double t : sol.bethe.roots) {
        s1 += t;
        s2 += t * t;
      }
      r["Eq53"] = n * (n + 2.0 * k - 1.0) - 2.0 * s * s1 - s * s * beta * beta;
      r["Eq54"] = (n + k - 1.0) * s1 - s * s2 + s * beta * beta * (n - 0.5);
      if (n == 1) r["Eq59-squared"] = s * s * beta * beta - 2.0 * (k + 1.0);
    }
  } else {
    const double nu = sec.nu();
    const double nn = n + nu;
    r["Eq62-unsquared"] = nn * s - (sec.mu * sec.z_s + d.energy * sec.z_v);
    r["Eq66-quadratic"] = d.energy * d.energy * (nn * nn + sec.z_v * sec.z_v) +
                          2.0 * sec.mu * sec.z_s * sec.z_v * d.energy +
                          sec.mu * sec.mu * (sec.z_s * sec.z_s - nn * nn);
    if (sec.q == 1) {
      r["lambda2"] = d.lambda2;
      if (n == 1) r["Eq67-beta"] = d.lambda1 * beta - 2.0 * (nu + 1.0);
      if (n == 2) {
        r["Eq69-verbatim"] = nu * (nu + 1.0) * beta * beta * d.lambda1 * d.lambda1 -
                             (nu + 2.0) * (6.0 * nu * nu + 4.0 * nu - 1.0) * beta * d.lambda1 +
                             (nu + 2.0) * (nu + 2.0) * (8.0 * nu * nu - 2.0 * nu - 1.0);
        r["derived-n2-quadratic"] = (nu + 1.0) * w * w - 3.0 * (nu + 1.0) * w + (2.0 * nu + 1.0);
        double e = sol.bethe.roots.front();
        for (double t : sol.bethe.roots)
          if (std::abs(t) > std::abs(e)) e = t;
        r["n2-root-quadratic"] = s * e * e - (1.0 + nu + w) * e + beta;
      }
    } else if (n == 1) {
      r["Eq80-squared"] = beta * beta * d.lambda1 * d.lambda1 - 8.0 * std::pow(nu + 1.0, 3);
      r["Eq79"] = d.lambda2 - (2.0 * nu - 2.0 * s * sol.bethe.roots.front());
    }
  }
  return r;
}

/// Closed-form radial wavefunction in the transformed coordinate
/// t(r) = (r^q + beta^q)^{1/q}: value(r) = r^p exp(-s t) S(t) with p = kappa
/// (Dirac lower component G) or ell+1 (Klein-Gordon phi).
struct RadialWavefunction {
  ModelKind kind = ModelKind::KleinGordon;
  int q = 1;
  int n = 1;
  double prefactor_power = 1.0;
  double decay_rate = 1.0;
  Poly poly_factor;  // S in t
  double beta = 1.0;
  double gamma = 0.0;  // Dirac: needed to recover the upper component F
};

inline RadialWavefunction wavefunction(const SectorSolution& sol) {
  RadialWavefunction w;
  w.kind = sol.sector.kind;
  w.q = sol.sector.q;
  w.n = sol.sector.n;
  w.beta = sol.sector.beta.value();
  w.decay_rate = sol.derived.sigma_or_xi;
  w.poly_factor = Poly::from_roots(sol.bethe.roots);
  if (w.kind == ModelKind::Dirac) {
    w.prefactor_power = sol.sector.kappa;
    w.gamma = sol.derived.gamma;
    if (std::abs(w.gamma) < 1e-14 * (1.0 + sol.sector.mu))
      throw std::runtime_error("wavefunction: gamma = 0, upper spinor component is singular");
  } else {
    w.prefactor_power = sol.sector.ell + 1;
  }
  return w;
}

inline double radial_t(const RadialWavefunction& w, double r) {
  return w.q == 1 ? r + w.beta : std::sqrt(r * r + w.beta * w.beta);
}

/// Lower component G (Dirac) or phi (Klein-Gordon).
inline double wavefunction_value(const RadialWavefunction& w, double r) {
  const double t = radial_t(w, r);
  return std::pow(r, w.prefactor_power) * std::exp(-w.decay_rate * t) * w.poly_factor(t);
}

/// Dirac upper component F recovered from the first-order intertwining
/// relation F = (G' - (kappa/r) G) / gamma; the r^(kappa-1) terms cancel,
/// leaving F = r^kappa e^{-sigma t} t'(r) (S'(t) - sigma S(t)) / gamma.
inline double wavefunction_upper(const RadialWavefunction& w, double r) {
  if (w.kind != ModelKind::Dirac) throw std::runtime_error("wavefunction_upper: not a Dirac solution");
  const double t = radial_t(w, r);
  const double tprime = w.q == 1 ? 1.0 : r / t;
  const Poly dS = derivative(w.poly_factor);
  return std::pow(r, w.prefactor_power) * std::exp(-w.decay_rate * t) * tprime *
         (dS(t) - w.decay_rate * w.poly_factor(t)) / w.gamma;
}

struct WavefunctionSample {
  std::vector<double> r;
  std::vector<double> value;  // G or phi
  std::vector<double> upper;  // F (Dirac only)
  bool has_upper = false;
};

namespace detail {

// composite Simpson with a 3/8 tail when the interval count is odd
inline double simpson(const std::vector<double>& y, double h) {
  const std::size_t m = y.size();
  if (m < 2) return 0.0;
  if (m == 2) return 0.5 * h * (y[0] + y[1]);
  std::size_t intervals = m - 1;
  double total = 0.0;
  std::size_t last = m - 1;
  if (intervals % 2 == 1) {
    if (intervals >= 3) {
      // Simpson 3/8 on the final three intervals
      total += 3.0 * h / 8.0 * (y[m - 4] + 3.0 * y[m - 3] + 3.0 * y[m - 2] + y[m - 1]);
      last = m - 4;
    } else {
      return 0.5 * h * (y[0] + 2.0 * y[1] + y[2]);
    }
  }
  for (std::size_t i = 0; i + 2 <= last; i += 2)
    total += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
  return total;
}

}  // namespace detail

/// Samples the radial function on the uniform grid r_i = i*r_max/points,
/// i = 1..points. With normalize, values are scaled so the composite-Simpson
/// integral of the squared function(s) over the grid equals 1 (Dirac:
/// integral of F^2 + G^2).
inline WavefunctionSample sample_wavefunction(const RadialWavefunction& w, double r_max, int points,
                                              bool normalize) {
  if (!(r_max > 0.0)) throw ContractViolation("sample_wavefunction: r_max must be positive");
  if (points < 2) throw ContractViolation("sample_wavefunction: grid needs at least 2 points");
  WavefunctionSample out;
  out.has_upper = (w.kind == ModelKind::Dirac);
  const double h = r_max / points;
  for (int i = 1; i <= points; ++i) {
    const double r = i * h;
    out.r.push_back(r);
    out.value.push_back(wavefunction_value(w, r));
    if (out.has_upper) out.upper.push_back(wavefunction_upper(w, r));
  }
  if (normalize) {
    std::vector<double> sq(out.value.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
      sq[i] = out.value[i] * out.value[i];
      if (out.has_upper) sq[i] += out.upper[i] * out.upper[i];
    }
    const double integral = detail::simpson(sq, h);
    if (integral > 0.0) {
      const double f = 1.0 / std::sqrt(integral);
      for (double& v : out.value) v *= f;
      for (double& v : out.upper) v *= f;
    }
  }
  return out;
}

}  // namespace qesrel
