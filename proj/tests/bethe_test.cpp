#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "qesrel/bethe.hpp"

using qesrel::Poly;
using qesrel::QesOde;

namespace {

// Dirac q=1 polynomials in t
Poly dirac_q1_P(double beta) { return Poly{{0.0, -beta, 1.0}}; }
Poly dirac_q1_Q(double sigma, double kappa, double beta) {
  return Poly{{0.0, 2.0 * (kappa + sigma * beta), -2.0 * sigma}};
}

// KG q=1 polynomials in t
Poly kg_q1_P(double beta) { return Poly{{0.0, 0.0, -beta, 1.0}}; }
Poly kg_q1_Q(double xi, double nu, double beta) {
  return Poly{{0.0, 0.0, 2.0 * (nu + xi * beta), -2.0 * xi}};
}

}  // namespace

TEST_CASE("r_from_roots") {
  SECTION("n = 0 gives zero R for any P, Q") {
    const auto r = qesrel::r_from_roots(Poly{{1, 2, 3, 4}}, Poly{{4, 3, 2, 1}}, 0, {});
    CHECK(r.c2 == 0.0);
    CHECK(r.c1 == 0.0);
    CHECK(r.c0 == 0.0);
  }
  SECTION("Dirac q=1, n=1, root at 0: c1 = 2 sigma, c0 = -2(kappa + sigma beta)") {
    const double sigma = 1.5, kappa = 2.0, beta = 0.7;
    const std::vector<double> roots{0.0};
    const auto r = qesrel::r_from_roots(dirac_q1_P(beta), dirac_q1_Q(sigma, kappa, beta), 1, roots);
    CHECK(r.c2 == 0.0);
    CHECK(r.c1 == Catch::Approx(2.0 * sigma).epsilon(1e-14));
    CHECK(r.c0 == Catch::Approx(-2.0 * (kappa + sigma * beta)).epsilon(1e-14));
  }
  SECTION("KG q=1, n=1, root at 0: c2 = 2 xi, c1 = -2(nu + xi beta), c0 = 0") {
    const double xi = 0.8, nu = 1.0, beta = 1.25;
    const std::vector<double> roots{0.0};
    const auto r = qesrel::r_from_roots(kg_q1_P(beta), kg_q1_Q(xi, nu, beta), 1, roots);
    CHECK(r.c2 == Catch::Approx(2.0 * xi).epsilon(1e-14));
    CHECK(r.c1 == Catch::Approx(-2.0 * (nu + xi * beta)).epsilon(1e-14));
    CHECK(r.c0 == 0.0);
  }
  SECTION("length mismatch is a contract violation") {
    const std::vector<double> roots{0.0, 1.0};
    CHECK_THROWS_AS(qesrel::r_from_roots(Poly{{0, 1}}, Poly{{1}}, 1, roots), qesrel::ContractViolation);
  }
  SECTION("permutation invariance") {
    const Poly P{{0.5, -1.0, 0.25, 1.0}};
    const Poly Q{{1.0, 2.0, -3.0, 0.5}};
    const std::vector<double> a{0.3, -1.2, 2.5};
    const std::vector<double> b{2.5, 0.3, -1.2};
    const auto ra = qesrel::r_from_roots(P, Q, 3, a);
    const auto rb = qesrel::r_from_roots(P, Q, 3, b);
    CHECK(ra.c2 == rb.c2);
    CHECK(ra.c1 == Catch::Approx(rb.c1).epsilon(1e-15));
    CHECK(ra.c0 == Catch::Approx(rb.c0).epsilon(1e-15));
  }
}

TEST_CASE("bethe_residuals") {
  SECTION("n = 1 reduces to Q(t1)") {
    const Poly P{{1, 0, 2}};
    const Poly Q{{-3, 1, 0, 2}};
    const std::vector<double> roots{1.7};
    const auto res = qesrel::bethe_residuals(P, Q, roots);
    REQUIRE(res.size() == 1);
    CHECK(res[0] == Catch::Approx(qesrel::eval(Q, 1.7)).epsilon(1e-15));
  }
  SECTION("Dirac q=1 root at t=0 sits on a zero of P and still evaluates") {
    const std::vector<double> roots{0.0};
    const auto res = qesrel::bethe_residuals(dirac_q1_P(1.0), dirac_q1_Q(1.0, 1.0, 1.0), roots);
    REQUIRE(res.size() == 1);
    CHECK(res[0] == 0.0);
  }
  SECTION("Dirac q=2 n=1: every root of the cubic Q zeroes the residual") {
    const double sigma = 1.0, kappa = 1.0, beta = 2.0;
    const Poly P{{0.0, -beta * beta, 0.0, 1.0}};
    const Poly Q{{beta * beta, 2.0 * sigma * beta * beta, 2.0 * kappa, -2.0 * sigma}};
    for (double t1 : qesrel::roots_real_upto_cubic(Q)) {
      const std::vector<double> roots{t1};
      const auto res = qesrel::bethe_residuals(P, Q, roots);
      CHECK(std::abs(res[0]) <= 1e-10 * (1.0 + Q.max_abs_coeff()));
    }
  }
  SECTION("KG q=1 n=2: roots {0, e} with xi e^2 - (1+nu+xi beta) e + beta = 0") {
    const double xi = 0.6, nu = 1.0, beta = 2.0;
    const double w = xi * beta;
    // larger root of the quadratic, in the physical t coordinate
    const auto us = qesrel::roots_real_upto_cubic(Poly{{w, -(1.0 + nu + w), 1.0}});
    REQUIRE(us.size() == 2);
    for (double u : us) {
      const double e = u / xi;
      CHECK(std::abs(xi * e * e - (1.0 + nu + xi * beta) * e + beta) <= 1e-12 * (1.0 + e * e));
      const std::vector<double> roots{0.0, e};
      const auto res = qesrel::bethe_residuals(kg_q1_P(beta), kg_q1_Q(xi, nu, beta), roots);
      for (double v : res) CHECK(std::abs(v) <= 1e-10 * (1.0 + std::abs(e)));
    }
  }
  SECTION("coincident roots name the offending pair") {
    const std::vector<double> roots{1.0, 1.0 + 1e-12};
    CHECK_THROWS_WITH(qesrel::bethe_residuals(Poly{{0, 1}}, Poly{{1}}, roots),
                      Catch::Matchers::ContainsSubstring("0") && Catch::Matchers::ContainsSubstring("1"));
  }
}

TEST_CASE("closure_residual") {
  SECTION("KG q=1 fixture: S = t solves the ODE exactly") {
    const double xi = 0.8, nu = 1.0, beta = 1.25, lam1 = 3.2, lam2 = 0.0;
    const QesOde ode(kg_q1_P(beta), kg_q1_Q(xi, nu, beta),
                     Poly{{lam2 * beta, -(lam1 * beta + lam2), lam1 - 2.0 * xi * nu}}, 1);
    const Poly S{{0.0, 1.0}};
    CHECK(qesrel::closure_residual(ode, S).is_zero());
    CHECK(qesrel::closure_certifies(ode, S));
  }
  SECTION("a generic non-solution fails loudly") {
    const QesOde ode(Poly{{0, -1, 1}}, Poly{{0, 4, -2}}, Poly{{-4, 2}}, 1);
    const Poly S{{0.3, 1.0}};  // root shifted off the true one
    const Poly res = qesrel::closure_residual(ode, S);
    CHECK(res.max_abs_coeff() > 1e-6 * qesrel::closure_scale(ode, S));
    CHECK_FALSE(qesrel::closure_certifies(ode, S));
  }
  SECTION("n = 0 with R = 0: residual vanishes for S = 1") {
    const QesOde ode(Poly{{0, -1, 1}}, Poly{{0, 4, -2}}, Poly::zero(), 0);
    CHECK(qesrel::closure_residual(ode, Poly::constant(1.0)).is_zero());
  }
}

TEST_CASE("solve_bethe on fixed coefficient polynomials") {
  SECTION("Dirac q=1 (sigma=kappa=beta=1), n=1: root sets {0} and {2}") {
    const auto result = qesrel::solve_bethe(dirac_q1_P(1.0), dirac_q1_Q(1.0, 1.0, 1.0), 1);
    REQUIRE(result.solutions.size() == 2);
    CHECK(result.solutions[0].roots[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(result.solutions[1].roots[0] == Catch::Approx(2.0).margin(1e-12));
  }
  SECTION("Dirac q=2 (sigma=1, kappa=1, beta=2), n=1: the three real cubic roots") {
    const Poly P{{0.0, -4.0, 0.0, 1.0}};
    const Poly Q{{4.0, 8.0, 2.0, -2.0}};
    const auto result = qesrel::solve_bethe(P, Q, 1);
    const auto want = qesrel::roots_real_upto_cubic(Q);
    REQUIRE(result.solutions.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(result.solutions[i].roots[0] == Catch::Approx(want[i]).margin(1e-9));
  }
  SECTION("KG q=1 n=2 at the certified sector parameters finds {0, e}") {
    const double xi = 0.6, nu = 1.0;
    const double w = (3.0 - std::sqrt(3.0)) / 2.0;
    const double beta = w / xi;
    const double e = (1.0 + 2.0 * nu - nu * w) / xi;
    const auto result = qesrel::solve_bethe(kg_q1_P(beta), kg_q1_Q(xi, nu, beta), 2);
    bool found = false;
    for (const auto& s : result.solutions) {
      if (std::abs(s.roots[0]) <= 1e-9 && std::abs(s.roots[1] - e) <= 1e-9 * (1.0 + e)) found = true;
    }
    CHECK(found);
  }
  SECTION("every returned solution is closure-certified") {
    const auto result = qesrel::solve_bethe(dirac_q1_P(1.0), dirac_q1_Q(1.0, 2.0, 1.0), 2);
    CHECK(!result.solutions.empty());
    for (const auto& s : result.solutions) {
      CHECK(s.closure_residual_norm <= s.acceptance_threshold);
      CHECK(s.bethe_residual_norm <= s.acceptance_threshold);
      CHECK(std::is_sorted(s.roots.begin(), s.roots.end()));
    }
  }
  SECTION("deterministic for a fixed seed") {
    qesrel::SearchConfig cfg;
    cfg.seed = 1234;
    const auto a = qesrel::solve_bethe(dirac_q1_P(1.0), dirac_q1_Q(1.0, 1.0, 1.0), 2, cfg);
    const auto b = qesrel::solve_bethe(dirac_q1_P(1.0), dirac_q1_Q(1.0, 1.0, 1.0), 2, cfg);
    REQUIRE(a.solutions.size() == b.solutions.size());
    for (std::size_t i = 0; i < a.solutions.size(); ++i)
      CHECK(a.solutions[i].roots == b.solutions[i].roots);
  }
}

namespace {

// Exactly-constructed instance: pick P and distinct roots, interpolate Q
// through the values the Bethe equations demand, then R follows from the
// root set. The closure residual of S must vanish identically.
struct ExactInstance {
  Poly P, Q, S;
  std::vector<double> roots;
  int n;
};

ExactInstance make_exact_instance(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> cc(-2.0, 2.0);
  std::uniform_real_distribution<double> rr(-3.0, 3.0);
  ExactInstance inst;
  inst.n = n;
  std::vector<double> pc(4);
  for (double& v : pc) v = cc(rng);
  if (pc[3] == 0.0) pc[3] = 1.0;
  inst.P = Poly(pc);
  while (static_cast<int>(inst.roots.size()) < n) {
    const double r = rr(rng);
    bool ok = true;
    for (double t : inst.roots)
      if (std::abs(t - r) < 0.35) ok = false;
    if (ok) inst.roots.push_back(r);
  }
  std::sort(inst.roots.begin(), inst.roots.end());
  inst.S = Poly::from_roots(inst.roots);

  // Q(t_i) = -2 P(t_i) sum_{j != i} 1/(t_i - t_j), Lagrange-interpolated,
  // plus a random multiple of S when degree allows
  Poly q = Poly::zero();
  for (int i = 0; i < n; ++i) {
    double target = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) target += 1.0 / (inst.roots[i] - inst.roots[j]);
    target *= -2.0 * qesrel::eval(inst.P, inst.roots[i]);
    Poly basis = Poly::constant(1.0);
    double denom = 1.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      basis = qesrel::mul(basis, Poly{{-inst.roots[j], 1.0}});
      denom *= inst.roots[i] - inst.roots[j];
    }
    q = qesrel::add(q, qesrel::scale(basis, target / denom));
  }
  if (n <= 3) {
    std::vector<double> extra(static_cast<std::size_t>(3 - n) + 1);
    for (double& v : extra) v = cc(rng);
    q = qesrel::add(q, qesrel::mul(inst.S, Poly(extra)));
  }
  inst.Q = q;
  return inst;
}

}  // namespace

TEST_CASE("Bethe <-> closure equivalence on 100 exactly-constructed instances") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> nn(1, 4);
  for (int it = 0; it < 100; ++it) {
    const auto inst = make_exact_instance(rng, nn(rng));
    const auto bres = qesrel::bethe_residuals(inst.P, inst.Q, inst.roots);
    const double bscale = qesrel::detail::bethe_residual_scale(inst.P, inst.Q, inst.roots);
    for (double v : bres) CHECK(std::abs(v) <= 1e-10 * bscale);

    const auto induced = qesrel::r_from_roots(inst.P, inst.Q, inst.n, inst.roots);
    const QesOde ode(inst.P, inst.Q, induced.to_poly(), inst.n);
    CHECK(qesrel::closure_certifies(ode, inst.S));

    // perturbing one root must break both oracles together
    auto bad = inst.roots;
    bad[0] += 0.05;
    const auto bad_res = qesrel::bethe_residuals(inst.P, inst.Q, bad);
    double bmax = 0.0;
    for (double v : bad_res) bmax = std::max(bmax, std::abs(v));
    const Poly bad_S = Poly::from_roots(bad);
    const auto bad_induced = qesrel::r_from_roots(inst.P, inst.Q, inst.n, bad);
    const QesOde bad_ode(inst.P, inst.Q, bad_induced.to_poly(), inst.n);
    const bool bethe_ok = bmax <= 1e-10 * bscale;
    const bool closure_ok = qesrel::closure_certifies(bad_ode, bad_S);
    CHECK(bethe_ok == closure_ok);
  }
}
