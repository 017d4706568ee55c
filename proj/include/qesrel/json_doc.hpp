#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qesrel/models.hpp"

namespace qesrel {

using Json = nlohmann::ordered_json;

inline const char* kind_name(ModelKind k) { return k == ModelKind::Dirac ? "dirac" : "kg"; }

inline ModelKind kind_from_name(const std::string& s) {
  if (s == "dirac") return ModelKind::Dirac;
  if (s == "kg") return ModelKind::KleinGordon;
  throw std::runtime_error("unknown model kind: " + s);
}

inline ParameterPolicy policy_from_name(const std::string& s) {
  if (s == "solve-beta") return ParameterPolicy::GivenCouplingSolveBeta;
  if (s == "solve-coupling") return ParameterPolicy::GivenBetaSolveCoupling;
  if (s == "check") return ParameterPolicy::CheckOnly;
  throw std::runtime_error("unknown policy: " + s);
}

/// Machine-readable record of one certified sector solution,
/// schema_version "1". Round-trips losslessly at the value level.
struct SolutionDocument {
  std::string schema_version = "1";
  ModelSector sector;
  DerivedQuantities derived;
  std::vector<double> roots;
  std::map<std::string, double> constraint_residuals;
  bool certified = false;
  std::vector<std::string> diagnostics;

  static SolutionDocument from_solution(const SectorSolution& s) {
    SolutionDocument d;
    d.sector = s.sector;
    d.derived = s.derived;
    d.roots = s.bethe.roots;
    d.constraint_residuals = s.constraint_residuals;
    d.certified = s.certified;
    d.diagnostics = s.diagnostics;
    return d;
  }
};

inline Json to_json(const SolutionDocument& d) {
  Json j;
  j["schema_version"] = d.schema_version;
  Json sec;
  sec["kind"] = kind_name(d.sector.kind);
  sec["q"] = d.sector.q;
  sec["n"] = d.sector.n;
  sec["mu"] = d.sector.mu;
  if (d.sector.kind == ModelKind::Dirac) {
    sec["kappa"] = d.sector.kappa;
    sec["c_q"] = d.sector.c_q;
    sec["z_delta"] = d.sector.z_delta;
  } else {
    sec["ell"] = d.sector.ell;
    sec["z_s"] = d.sector.z_s;
    sec["z_v"] = d.sector.z_v;
  }
  if (d.sector.beta) sec["beta"] = *d.sector.beta;
  sec["policy"] = policy_name(d.sector.policy);
  j["sector"] = std::move(sec);
  Json der;
  der["energy"] = d.derived.energy;
  if (d.sector.kind == ModelKind::Dirac) {
    der["gamma"] = d.derived.gamma;
    der["sigma_or_xi"] = d.derived.sigma_or_xi;
  } else {
    der["sigma_or_xi"] = d.derived.sigma_or_xi;
    der["lambda1"] = d.derived.lambda1;
    der["lambda2"] = d.derived.lambda2;
  }
  j["derived"] = std::move(der);
  j["roots"] = d.roots;
  j["constraint_residuals"] = d.constraint_residuals;
  j["certified"] = d.certified;
  j["diagnostics"] = d.diagnostics;
  return j;
}

inline SolutionDocument document_from_json(const Json& j) {
  SolutionDocument d;
  d.schema_version = j.at("schema_version").get<std::string>();
  if (d.schema_version != "1") throw std::runtime_error("unsupported schema_version: " + d.schema_version);
  const Json& sec = j.at("sector");
  d.sector.kind = kind_from_name(sec.at("kind").get<std::string>());
  d.sector.q = sec.at("q").get<int>();
  d.sector.n = sec.at("n").get<int>();
  d.sector.mu = sec.at("mu").get<double>();
  if (d.sector.kind == ModelKind::Dirac) {
    d.sector.kappa = sec.at("kappa").get<int>();
    d.sector.c_q = sec.at("c_q").get<double>();
    d.sector.z_delta = sec.at("z_delta").get<double>();
  } else {
    d.sector.ell = sec.at("ell").get<int>();
    d.sector.z_s = sec.at("z_s").get<double>();
    d.sector.z_v = sec.at("z_v").get<double>();
  }
  if (sec.contains("beta")) d.sector.beta = sec.at("beta").get<double>();
  d.sector.policy = policy_from_name(sec.at("policy").get<std::string>());
  const Json& der = j.at("derived");
  d.derived.energy = der.at("energy").get<double>();
  if (d.sector.kind == ModelKind::Dirac) {
    d.derived.gamma = der.at("gamma").get<double>();
  } else {
    d.derived.lambda1 = der.at("lambda1").get<double>();
    d.derived.lambda2 = der.at("lambda2").get<double>();
  }
  d.derived.sigma_or_xi = der.at("sigma_or_xi").get<double>();
  d.roots = j.at("roots").get<std::vector<double>>();
  d.constraint_residuals = j.at("constraint_residuals").get<std::map<std::string, double>>();
  d.certified = j.at("certified").get<bool>();
  d.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  return d;
}

struct VerifyReport {
  bool certified = false;
  double closure_residual_norm = 0.0;
  double bethe_residual_norm = 0.0;
  double derived_consistency = 0.0;  // worst deviation of the E/decay/coupling identities
  double acceptance_threshold = 0.0;
  std::map<std::string, double> constraint_residuals;
};

/// Re-runs the closure and Bethe oracles and the constraint evaluations on a
/// stored document, from scratch. The stored derived quantities must also be
/// mutually consistent with the sector (the ODE itself depends only on the
/// decay rate and couplings, so tampering with E alone would otherwise pass).
inline VerifyReport verify_document(const SolutionDocument& d, double accept_tol = 1e-10) {
  if (!d.sector.beta) throw std::runtime_error("document has no beta");
  VerifyReport rep;
  SectorSolution sol;
  sol.sector = d.sector;
  sol.derived = d.derived;
  sol.bethe.n = d.sector.n;
  sol.bethe.roots = d.roots;
  const QesOde ode = build_ode(sol.sector, sol.derived);
  const Poly S = Poly::from_roots(d.roots);
  rep.closure_residual_norm = closure_residual_norm(ode, S);
  rep.bethe_residual_norm = detail::norm_inf(bethe_residuals(ode.P, ode.Q, d.roots));
  rep.acceptance_threshold = accept_tol * closure_scale(ode, S);

  const double mu = d.sector.mu, e = d.derived.energy, s = d.derived.sigma_or_xi;
  double dc = 0.0;
  if (d.sector.kind == ModelKind::Dirac) {
    dc = std::max(dc, std::abs(d.derived.gamma - (mu - e + d.sector.c_q)));
    dc = std::max(dc, std::abs(s * s - (mu + e) * d.derived.gamma));
  } else {
    dc = std::max(dc, std::abs(s * s - (mu * mu - e * e)));
    dc = std::max(dc, std::abs(d.derived.lambda1 - 2.0 * (mu * d.sector.z_s + e * d.sector.z_v)));
    dc = std::max(dc, std::abs(d.derived.lambda2 - (d.sector.z_s * d.sector.z_s - d.sector.z_v * d.sector.z_v)));
  }
  rep.derived_consistency = dc;
  const double dscale = 1.0 + mu * mu + std::abs(e) + s * s;
  rep.certified = rep.closure_residual_norm <= rep.acceptance_threshold &&
                  rep.bethe_residual_norm <= rep.acceptance_threshold && s > 0.0 &&
                  dc <= accept_tol * dscale;
  rep.constraint_residuals = constraint_residuals(sol);
  return rep;
}

}  // namespace qesrel
