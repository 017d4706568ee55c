// qesrel: quasi-exact bound-state solver for Dirac and Klein-Gordon
// equations with soft-core Coulomb potentials.
//
// Subcommands: solve, verify, wavefunction, scan, algebra.
// Exit codes: 0 success, 1 verification failure, 2 usage error, 3 no solution.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qesrel/json_doc.hpp"
#include "qesrel/models.hpp"
#include "qesrel/sl2.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNoSolution = 3;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + out_path);
  f << text;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("QESREL_SEED")) return std::strtoull(env, nullptr, 10);
  return 42;
}

struct SectorFlags {
  std::string model;
  int q = 1;
  int n = 1;
  std::optional<int> kappa, ell;
  double mu = 1.0;
  std::optional<double> c_q, z_delta, z_s, z_v, beta;
  std::string policy = "solve-beta";
  bool allow_any_kappa = false;
};

void add_sector_flags(CLI::App* cmd, SectorFlags& f) {
  cmd->add_option("--model", f.model, "model: dirac or kg")->required()->check(CLI::IsMember({"dirac", "kg"}));
  cmd->add_option("--q", f.q, "potential power parameter")->required()->check(CLI::IsMember({1, 2}));
  cmd->add_option("--n", f.n, "polynomial degree / excitation index")->required();
  cmd->add_option("--kappa", f.kappa, "Dirac spin-orbit number");
  cmd->add_option("--ell", f.ell, "Klein-Gordon orbital number");
  cmd->add_option("--mu", f.mu, "mass (natural units)")->required();
  cmd->add_option("--c", f.c_q, "Dirac pseudospin constant (default 0)");
  cmd->add_option("--z-delta", f.z_delta, "Dirac coupling Z_v - Z_s");
  cmd->add_option("--zs", f.z_s, "Klein-Gordon scalar coupling");
  cmd->add_option("--zv", f.z_v, "Klein-Gordon vector coupling");
  cmd->add_option("--beta", f.beta, "cut-off parameter");
  cmd->add_option("--policy", f.policy, "solve-beta | solve-coupling | check")
      ->check(CLI::IsMember({"solve-beta", "solve-coupling", "check"}));
  cmd->add_flag("--allow-any-kappa", f.allow_any_kappa, "admit kappa < 1 (irregular at the origin)");
}

qesrel::ModelSector sector_from_flags(const SectorFlags& f) {
  qesrel::ModelSector s;
  s.kind = qesrel::kind_from_name(f.model);
  s.q = f.q;
  s.n = f.n;
  s.mu = f.mu;
  s.policy = qesrel::policy_from_name(f.policy);
  s.allow_any_kappa = f.allow_any_kappa;
  const bool solve_coupling = s.policy == qesrel::ParameterPolicy::GivenBetaSolveCoupling;
  if (s.kind == qesrel::ModelKind::Dirac) {
    if (f.ell || f.z_s || f.z_v)
      throw qesrel::ContractViolation("--ell/--zs/--zv are Klein-Gordon flags, not valid with --model dirac");
    if (!f.kappa) throw qesrel::ContractViolation("--kappa is required for --model dirac");
    s.kappa = *f.kappa;
    s.c_q = f.c_q.value_or(0.0);
    if (solve_coupling) {
      if (f.z_delta) throw qesrel::ContractViolation("--z-delta conflicts with --policy solve-coupling");
    } else {
      if (!f.z_delta) throw qesrel::ContractViolation("--z-delta is required for this policy");
      s.z_delta = *f.z_delta;
    }
  } else {
    if (f.kappa || f.c_q || f.z_delta)
      throw qesrel::ContractViolation("--kappa/--c/--z-delta are Dirac flags, not valid with --model kg");
    if (!f.ell) throw qesrel::ContractViolation("--ell is required for --model kg");
    s.ell = *f.ell;
    if (solve_coupling) {
      if (f.z_s || f.z_v) throw qesrel::ContractViolation("--zs/--zv conflict with --policy solve-coupling");
    } else {
      if (!f.z_s || !f.z_v) throw qesrel::ContractViolation("--zs and --zv are required for this policy");
      s.z_s = *f.z_s;
      s.z_v = *f.z_v;
    }
  }
  s.beta = f.beta;
  s.validate();
  return s;
}

std::string solutions_to_json_text(const std::vector<qesrel::SectorSolution>& sols,
                                   const std::vector<std::string>& diagnostics) {
  std::vector<qesrel::Json> docs;
  for (const auto& s : sols) {
    auto d = qesrel::SolutionDocument::from_solution(s);
    d.diagnostics = diagnostics;
    docs.push_back(qesrel::to_json(d));
  }
  if (docs.size() == 1) return docs.front().dump(2) + "\n";
  qesrel::Json arr = qesrel::Json::array();
  for (auto& d : docs) arr.push_back(std::move(d));
  return arr.dump(2) + "\n";
}

const char* kSolveCsvHeader =
    "model,q,n,kappa,ell,mu,c_q,z_delta,z_s,z_v,policy,energy,beta,w,lambda1,lambda2,certified,"
    "bethe_residual,closure_residual,roots\n";

std::string solution_csv_row(const qesrel::SectorSolution& s) {
  const auto& sec = s.sector;
  const bool dirac = sec.kind == qesrel::ModelKind::Dirac;
  std::ostringstream row;
  row << qesrel::kind_name(sec.kind) << ',' << sec.q << ',' << sec.n << ',';
  row << (dirac ? std::to_string(sec.kappa) : "") << ',' << (dirac ? "" : std::to_string(sec.ell)) << ',';
  row << fmt(sec.mu) << ',' << (dirac ? fmt(sec.c_q) : "") << ',' << (dirac ? fmt(sec.z_delta) : "") << ',';
  row << (dirac ? "" : fmt(sec.z_s)) << ',' << (dirac ? "" : fmt(sec.z_v)) << ',';
  row << qesrel::policy_name(sec.policy) << ',';
  row << fmt(s.derived.energy) << ',' << fmt(sec.beta.value()) << ','
      << fmt(s.derived.sigma_or_xi * sec.beta.value()) << ',';
  row << (dirac ? "" : fmt(s.derived.lambda1)) << ',' << (dirac ? "" : fmt(s.derived.lambda2)) << ',';
  row << (s.certified ? "true" : "false") << ',';
  row << fmt(s.bethe.bethe_residual_norm) << ',' << fmt(s.bethe.closure_residual_norm) << ',';
  std::string roots;
  for (std::size_t i = 0; i < s.bethe.roots.size(); ++i) {
    if (i) roots += ';';
    roots += fmt(s.bethe.roots[i]);
  }
  row << csv_quote(roots) << '\n';
  return row.str();
}

int cmd_solve(const SectorFlags& flags, const std::optional<std::uint64_t>& seed, const std::string& format,
              const std::string& out_path) {
  const auto sector = sector_from_flags(flags);
  qesrel::SearchConfig cfg;
  cfg.seed = resolve_seed(seed);
  auto result = qesrel::solve_sector(sector, cfg);
  if (result.solutions.empty()) {
    for (const auto& d : result.diagnostics) std::cerr << "diagnostic: " << d << '\n';
    std::cerr << "no certified solution found\n";
    return kExitNoSolution;
  }
  std::string text;
  if (format == "csv") {
    text = kSolveCsvHeader;
    for (const auto& s : result.solutions) text += solution_csv_row(s);
  } else {
    text = solutions_to_json_text(result.solutions, result.diagnostics);
  }
  write_output(text, out_path);
  return kExitOk;
}

std::vector<qesrel::SolutionDocument> load_documents(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  qesrel::Json j = qesrel::Json::parse(f);
  std::vector<qesrel::SolutionDocument> docs;
  if (j.is_array()) {
    for (const auto& item : j) docs.push_back(qesrel::document_from_json(item));
  } else {
    docs.push_back(qesrel::document_from_json(j));
  }
  if (docs.empty()) throw std::runtime_error("empty document: " + path);
  return docs;
}

int cmd_verify(const std::string& path) {
  std::vector<qesrel::SolutionDocument> docs;
  try {
    docs = load_documents(path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  bool all_ok = true;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto rep = qesrel::verify_document(docs[i]);
    const bool ok = rep.certified && docs[i].certified;
    all_ok = all_ok && ok;
    std::printf("document %zu: certified: %s, closure_residual %.1e, bethe_residual %.1e (threshold %.1e)\n",
                i, ok ? "true" : "false", rep.closure_residual_norm, rep.bethe_residual_norm,
                rep.acceptance_threshold);
    for (const auto& [name, value] : rep.constraint_residuals)
      std::printf("  %s = %.17g\n", name.c_str(), value);
  }
  return all_ok ? kExitOk : kExitVerifyFailed;
}

int cmd_wavefunction(const std::string& path, double r_max, int points, bool normalize,
                     const std::string& out_path) {
  if (points < 2) {
    std::cerr << "error: --points must be >= 2\n";
    return kExitUsage;
  }
  if (r_max <= 0.0) {
    std::cerr << "error: --r-max must be positive\n";
    return kExitUsage;
  }
  std::vector<qesrel::SolutionDocument> docs;
  try {
    docs = load_documents(path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const auto& d = docs.front();
  qesrel::SectorSolution sol;
  sol.sector = d.sector;
  sol.derived = d.derived;
  sol.bethe.roots = d.roots;
  sol.bethe.n = d.sector.n;
  sol.certified = d.certified;
  const auto w = qesrel::wavefunction(sol);
  const auto sample = qesrel::sample_wavefunction(w, r_max, points, normalize);
  std::string text = sample.has_upper ? "r,G,F\n" : "r,phi\n";
  for (std::size_t i = 0; i < sample.r.size(); ++i) {
    text += fmt(sample.r[i]);
    text += ',';
    text += fmt(sample.value[i]);
    if (sample.has_upper) {
      text += ',';
      text += fmt(sample.upper[i]);
    }
    text += '\n';
  }
  write_output(text, out_path);
  return kExitOk;
}

struct Range {
  int lo = 0, hi = -1;
};

Range parse_range(const std::string& s) {
  Range r;
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      r.lo = r.hi = std::stoi(s);
    } else {
      r.lo = std::stoi(s.substr(0, dots));
      r.hi = std::stoi(s.substr(dots + 2));
    }
  } catch (const std::exception&) {
    throw qesrel::ContractViolation("bad range: " + s);
  }
  return r;
}

int cmd_scan(const SectorFlags& flags, const std::string& n_range, const std::string& ang_range,
             const std::optional<std::uint64_t>& seed, const std::string& out_path) {
  const Range nr = parse_range(n_range);
  const Range ar = parse_range(ang_range);
  if (nr.lo > nr.hi || ar.lo > ar.hi) {
    std::cerr << "error: empty scan range\n";
    return kExitUsage;
  }
  qesrel::SearchConfig cfg;
  cfg.seed = resolve_seed(seed);
  std::string text =
      "model,q,n,kappa,ell,mu,c_q,z_delta,z_s,z_v,policy,found,solutions,energy,beta,w,lambda1,lambda2,"
      "bethe_residual,closure_residual\n";
  for (int n = nr.lo; n <= nr.hi; ++n) {
    for (int ang = ar.lo; ang <= ar.hi; ++ang) {
      SectorFlags f = flags;
      f.n = n;
      if (f.model == "dirac") {
        f.kappa = ang;
      } else {
        f.ell = ang;
      }
      const qesrel::ModelSector sector = sector_from_flags(f);
      auto result = qesrel::solve_sector(sector, cfg);
      const bool dirac = sector.kind == qesrel::ModelKind::Dirac;
      std::ostringstream row;
      row << qesrel::kind_name(sector.kind) << ',' << sector.q << ',' << n << ',';
      row << (dirac ? std::to_string(ang) : "") << ',' << (dirac ? "" : std::to_string(ang)) << ',';
      row << fmt(sector.mu) << ',' << (dirac ? fmt(sector.c_q) : "") << ',';
      row << (dirac ? fmt(sector.z_delta) : "") << ',';
      row << (dirac ? "" : fmt(sector.z_s)) << ',' << (dirac ? "" : fmt(sector.z_v)) << ',';
      row << qesrel::policy_name(sector.policy) << ',';
      if (result.solutions.empty()) {
        row << "false,0,,,,,,,\n";
      } else {
        const auto& s = result.solutions.front();
        row << "true," << result.solutions.size() << ',' << fmt(s.derived.energy) << ','
            << fmt(s.sector.beta.value()) << ',' << fmt(s.derived.sigma_or_xi * s.sector.beta.value()) << ',';
        row << (dirac ? "" : fmt(s.derived.lambda1)) << ',' << (dirac ? "" : fmt(s.derived.lambda2)) << ',';
        row << fmt(s.bethe.bethe_residual_norm) << ',' << fmt(s.bethe.closure_residual_norm) << '\n';
      }
      text += row.str();
    }
  }
  write_output(text, out_path);
  return kExitOk;
}

int cmd_algebra(const SectorFlags& flags, const std::optional<std::uint64_t>& seed) {
  const auto sector = sector_from_flags(flags);
  qesrel::SearchConfig cfg;
  cfg.seed = resolve_seed(seed);
  auto result = qesrel::solve_sector(sector, cfg);
  if (result.solutions.empty()) {
    for (const auto& d : result.diagnostics) std::cerr << "diagnostic: " << d << '\n';
    std::cerr << "no certified solution to analyze\n";
    return kExitNoSolution;
  }
  for (std::size_t i = 0; i < result.solutions.size(); ++i) {
    const auto& s = result.solutions[i];
    const auto ode = qesrel::build_ode(s.sector, s.derived);
    const auto rep = qesrel::qes_condition(ode);
    std::printf("solution %zu: beta = %.17g, E = %.17g\n", i, s.sector.beta.value(), s.derived.energy);
    std::printf("  sl2 condition: %s\n", rep.satisfied ? "true" : "false");
    for (const auto& v : rep.violations) std::printf("    violated: %s\n", v.c_str());
    if (!rep.satisfied) continue;
    const auto h = qesrel::assemble_H(ode);
    const auto direct = qesrel::direct_matrix(ode);
    std::printf("  max |assemble_H - direct_matrix| = %.3e\n", qesrel::max_abs_diff(h, direct));
    const auto spec = qesrel::spectrum(direct);
    std::string eigs;
    for (double e : spec.real_eigenvalues) eigs += (eigs.empty() ? "" : ", ") + fmt(e);
    std::string tail;
    if (spec.complex_pairs) tail = " + " + std::to_string(spec.complex_pairs) + " complex pair(s)";
    std::printf("  spectrum: [%s]%s\n", eigs.c_str(), tail.c_str());
    const double want = -ode.c(0);
    double best = std::numeric_limits<double>::infinity();
    for (double e : spec.real_eigenvalues) best = std::min(best, std::abs(e - want));
    std::printf("  -c0 = %.17g matched within %.3e\n", want, best);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasi-exact relativistic soft-core Coulomb solver"};
  app.require_subcommand(1);

  SectorFlags solve_flags, scan_flags, algebra_flags;
  std::optional<std::uint64_t> seed;
  std::string format = "json", out_path;

  auto* solve = app.add_subcommand("solve", "solve one sector and emit solution documents");
  add_sector_flags(solve, solve_flags);
  solve->add_option("--seed", seed, "search seed (default 42; env QESREL_SEED)");
  solve->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  solve->add_option("--out", out_path, "output file (default stdout)");

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "re-certify a stored solution document");
  verify->add_option("path", verify_path, "solution document")->required();

  std::string wf_path, wf_out;
  double wf_rmax = 0.0;
  int wf_points = 0;
  bool wf_normalize = false;
  auto* wf = app.add_subcommand("wavefunction", "sample a stored solution's radial wavefunction as CSV");
  wf->add_option("--solution", wf_path, "solution document")->required();
  auto* rmax_opt = wf->add_option("--r-max", wf_rmax, "sample up to this radius (default 30/decay_rate)");
  wf->add_option("--points", wf_points, "number of grid points")->required();
  wf->add_flag("--normalize", wf_normalize, "normalize the sampled probability density to 1");
  wf->add_option("--out", wf_out, "output file (default stdout)");

  // scan takes --n and --kappa/--ell as ranges ("1..4" or "2")
  std::string scan_n, scan_kappa, scan_ell, scan_out;
  auto* scan = app.add_subcommand("scan", "tabulate sectors over quantum-number ranges as CSV");
  scan->add_option("--model", scan_flags.model, "model: dirac or kg")
      ->required()
      ->check(CLI::IsMember({"dirac", "kg"}));
  scan->add_option("--q", scan_flags.q, "potential power parameter")->required()->check(CLI::IsMember({1, 2}));
  scan->add_option("--n", scan_n, "n range, e.g. 1..4")->required();
  scan->add_option("--kappa", scan_kappa, "Dirac kappa range, e.g. 1..3");
  scan->add_option("--ell", scan_ell, "Klein-Gordon ell range, e.g. 0..2");
  scan->add_option("--mu", scan_flags.mu, "mass (natural units)")->required();
  scan->add_option("--c", scan_flags.c_q, "Dirac pseudospin constant (default 0)");
  scan->add_option("--z-delta", scan_flags.z_delta, "Dirac coupling Z_v - Z_s");
  scan->add_option("--zs", scan_flags.z_s, "Klein-Gordon scalar coupling");
  scan->add_option("--zv", scan_flags.z_v, "Klein-Gordon vector coupling");
  scan->add_option("--beta", scan_flags.beta, "cut-off parameter");
  scan->add_option("--policy", scan_flags.policy, "solve-beta | solve-coupling | check")
      ->check(CLI::IsMember({"solve-beta", "solve-coupling", "check"}));
  scan->add_flag("--allow-any-kappa", scan_flags.allow_any_kappa, "admit kappa < 1");
  scan->add_option("--seed", seed, "search seed");
  scan->add_option("--out", scan_out, "output file (default stdout)");

  auto* algebra = app.add_subcommand("algebra", "hidden sl(2) structure report for a solved sector");
  add_sector_flags(algebra, algebra_flags);
  algebra->add_option("--seed", seed, "search seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_flags, seed, format, out_path);
    if (verify->parsed()) return cmd_verify(verify_path);
    if (wf->parsed()) {
      if (rmax_opt->count() == 0) {
        // default r_max from the stored decay rate
        auto docs = load_documents(wf_path);
        wf_rmax = 30.0 / docs.front().derived.sigma_or_xi;
      }
      return cmd_wavefunction(wf_path, wf_rmax, wf_points, wf_normalize, wf_out);
    }
    if (scan->parsed()) {
      const std::string ang = scan_flags.model == "dirac" ? scan_kappa : scan_ell;
      if (ang.empty()) {
        std::cerr << "error: scan needs --kappa (dirac) or --ell (kg)\n";
        return kExitUsage;
      }
      if (scan_flags.model == "dirac" && !scan_ell.empty()) {
        std::cerr << "error: --ell is not valid with --model dirac\n";
        return kExitUsage;
      }
      if (scan_flags.model == "kg" && !scan_kappa.empty()) {
        std::cerr << "error: --kappa is not valid with --model kg\n";
        return kExitUsage;
      }
      return cmd_scan(scan_flags, scan_n, ang, seed, scan_out);
    }
    if (algebra->parsed()) return cmd_algebra(algebra_flags, seed);
  } catch (const qesrel::ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
