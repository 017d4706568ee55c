#include <catch2/catch_amalgamated.hpp>

#include "qesrel/families.hpp"

using qesrel::ScaledCase;
using qesrel::ScaledSolution;

namespace {

const ScaledCase kAllCases[] = {ScaledCase::DiracQ1, ScaledCase::DiracQ2, ScaledCase::KleinGordonQ1,
                                ScaledCase::KleinGordonQ2};

void check_agreement(const ScaledSolution& a, const ScaledSolution& b, double tol) {
  REQUIRE(a.roots.size() == b.roots.size());
  for (std::size_t i = 0; i < a.roots.size(); ++i)
    CHECK(std::abs(a.roots[i] - b.roots[i]) <= tol * (1.0 + std::abs(b.roots[i])));
  CHECK(std::abs(a.w - b.w) <= tol * (1.0 + b.w));
  CHECK(std::abs(a.lambda2 - b.lambda2) <= tol * (1.0 + std::abs(b.lambda2)));
}

}  // namespace

TEST_CASE("scaled ODE coefficients match the q=2 fixture") {
  // sigma = 1, kappa = 1, beta = 2 in physical variables is w = 2 scaled
  const auto ode = qesrel::scaled_ode(ScaledCase::DiracQ2, 1.0, 1, 2.0);
  CHECK(ode.P == qesrel::Poly{{0, -4, 0, 1}});
  CHECK(ode.Q == qesrel::Poly{{4, 8, 2, -2}});
  CHECK(ode.R == qesrel::Poly{{-4, -4, 2}});
  const auto kg = qesrel::scaled_ode(ScaledCase::KleinGordonQ2, 1.0, 1, 2.0, 4.0);
  CHECK(kg.P == ode.P);
  CHECK(kg.Q == ode.Q);
  CHECK(kg.R == ode.R);  // lambda2 = w^2 makes the two q=2 operators coincide
}

TEST_CASE("stage-1 system shapes: square except the overdetermined Dirac q=2") {
  for (int n : {1, 2, 3}) {
    CHECK(qesrel::stage1_equations(ScaledCase::DiracQ1, n) == qesrel::stage1_unknowns(ScaledCase::DiracQ1, n));
    CHECK(qesrel::stage1_equations(ScaledCase::KleinGordonQ1, n) ==
          qesrel::stage1_unknowns(ScaledCase::KleinGordonQ1, n));
    CHECK(qesrel::stage1_equations(ScaledCase::KleinGordonQ2, n) ==
          qesrel::stage1_unknowns(ScaledCase::KleinGordonQ2, n));
    CHECK(qesrel::stage1_equations(ScaledCase::DiracQ2, n) ==
          qesrel::stage1_unknowns(ScaledCase::DiracQ2, n) + 1);
    // and the residual vector really has that many entries
    qesrel::detail::Vec x(static_cast<std::size_t>(qesrel::stage1_unknowns(ScaledCase::DiracQ2, n)), 0.5);
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = 0.3 * (i + 1);
    qesrel::detail::Vec f;
    REQUIRE(qesrel::detail::stage1_residuals(ScaledCase::DiracQ2, 1.0, n, x, f));
    CHECK(static_cast<int>(f.size()) == qesrel::stage1_equations(ScaledCase::DiracQ2, n));
  }
}

TEST_CASE("eliminate_small_n closed forms") {
  SECTION("Dirac q=1, n=1: root 0 and w = 1 for every kappa") {
    for (double kappa : {1.0, 2.0, 3.0, 4.0}) {
      const auto sols = qesrel::eliminate_small_n(ScaledCase::DiracQ1, kappa, 1);
      REQUIRE(sols.size() == 1);
      CHECK(sols[0].roots[0] == 0.0);
      CHECK(sols[0].w == Catch::Approx(1.0).epsilon(1e-14));
    }
  }
  SECTION("Dirac q=2, n=1: scaled root -1, w^2 = 2(kappa+1)") {
    for (double kappa : {1.0, 2.0, 3.0, 4.0}) {
      const auto sols = qesrel::eliminate_small_n(ScaledCase::DiracQ2, kappa, 1);
      REQUIRE(sols.size() == 1);
      CHECK(sols[0].roots[0] == Catch::Approx(-1.0).epsilon(1e-13));
      CHECK(sols[0].w * sols[0].w == Catch::Approx(2.0 * (kappa + 1.0)).epsilon(1e-13));
    }
  }
  SECTION("KG q=2, n=1: scaled root -1, lambda2 = 2(nu+1), w^2 = 2(nu+1)") {
    for (double nu : {1.0, 2.0, 3.0}) {
      const auto sols = qesrel::eliminate_small_n(ScaledCase::KleinGordonQ2, nu, 1);
      REQUIRE(sols.size() == 1);
      CHECK(sols[0].roots[0] == Catch::Approx(-1.0).epsilon(1e-13));
      CHECK(sols[0].lambda2 == Catch::Approx(2.0 * (nu + 1.0)).epsilon(1e-13));
      CHECK(sols[0].w * sols[0].w == Catch::Approx(2.0 * (nu + 1.0)).epsilon(1e-13));
    }
  }
  SECTION("KG q=1, n=1: root 0, w = 1, lambda2 = 0") {
    const auto sols = qesrel::eliminate_small_n(ScaledCase::KleinGordonQ1, 2.0, 1);
    REQUIRE(sols.size() == 1);
    CHECK(sols[0].roots[0] == 0.0);
    CHECK(sols[0].w == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(sols[0].lambda2 == 0.0);
  }
  SECTION("n=2 q=1 solutions satisfy the derived w-quadratic and keep a zero root") {
    for (auto c : {ScaledCase::DiracQ1, ScaledCase::KleinGordonQ1}) {
      const double m = 1.0;
      const auto sols = qesrel::eliminate_small_n(c, m, 2);
      REQUIRE(sols.size() == 2);
      for (const auto& s : sols) {
        CHECK(std::abs((m + 1.0) * s.w * s.w - 3.0 * (m + 1.0) * s.w + (2.0 * m + 1.0)) <= 1e-12);
        CHECK(s.roots[0] == 0.0);
        CHECK(s.closure_norm <= 1e-12);
      }
      CHECK(sols[0].w == Catch::Approx((3.0 - std::sqrt(3.0)) / 2.0).epsilon(1e-13));
      CHECK(sols[1].w == Catch::Approx((3.0 + std::sqrt(3.0)) / 2.0).epsilon(1e-13));
    }
  }
  SECTION("every eliminated record is closure-consistent") {
    for (auto c : kAllCases)
      for (double m : {1.0, 2.0, 3.0})
        for (int n : {1, 2})
          for (const auto& s : qesrel::eliminate_small_n(c, m, n)) {
            const auto ode = qesrel::scaled_ode(c, m, n, s.w, s.lambda2);
            const auto S = qesrel::Poly::from_roots(s.roots);
            CHECK(qesrel::closure_certifies(ode, S));
          }
  }
  SECTION("n outside {1,2} is a contract violation") {
    CHECK_THROWS_AS(qesrel::eliminate_small_n(ScaledCase::DiracQ1, 1.0, 3), qesrel::ContractViolation);
    CHECK_THROWS_AS(qesrel::eliminate_small_n(ScaledCase::DiracQ1, 1.0, 0), qesrel::ContractViolation);
  }
}

TEST_CASE("multi-start family solver agrees with exact elimination for n <= 2") {
  for (auto c : kAllCases) {
    for (double m : {1.0, 2.0, 3.0}) {
      for (int n : {1, 2}) {
        CAPTURE(qesrel::scaled_case_name(c), m, n);
        const auto oracle = qesrel::eliminate_small_n(c, m, n);
        const auto solved = qesrel::solve_scaled_family(c, m, n);
        REQUIRE(solved.size() == oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) check_agreement(solved[i], oracle[i], 1e-9);
      }
    }
  }
}

TEST_CASE("Dirac q=2 overdetermined system accepts only tiny full residuals") {
  for (double kappa : {1.0, 2.0, 3.0, 4.0}) {
    const auto solved = qesrel::solve_scaled_family(ScaledCase::DiracQ2, kappa, 1);
    REQUIRE(solved.size() == 1);
    CHECK(solved[0].residual_norm < 1e-10);
    CHECK(solved[0].roots[0] == Catch::Approx(-1.0).margin(1e-10));
  }
}

TEST_CASE("scaling covariance: physical parameterizations map to one scaled system") {
  // u = s t, w = s beta is invariant under s -> c s, beta -> beta/c, t -> t/c
  const double s0 = 0.8, beta0 = 1.25;
  const std::vector<double> t0{0.0, 2.9};
  for (double c : {0.5, 2.0, 10.0}) {
    const double s1 = c * s0, beta1 = beta0 / c;
    std::vector<double> x0, x1;
    for (double t : t0) x0.push_back(s0 * t);
    for (double t : t0) x1.push_back(s1 * (t / c));
    x0.push_back(s0 * beta0);
    x1.push_back(s1 * beta1);
    x0.push_back(0.37);  // lambda2 rides along unchanged
    x1.push_back(0.37);
    REQUIRE(x0.size() == x1.size());
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(x0[i] == Catch::Approx(x1[i]).epsilon(1e-14));
    qesrel::detail::Vec f0, f1;
    REQUIRE(qesrel::detail::stage1_residuals(ScaledCase::KleinGordonQ1, 1.0, 2, x0, f0));
    REQUIRE(qesrel::detail::stage1_residuals(ScaledCase::KleinGordonQ1, 1.0, 2, x1, f1));
    REQUIRE(f0.size() == f1.size());
    for (std::size_t i = 0; i < f0.size(); ++i) CHECK(f0[i] == Catch::Approx(f1[i]).margin(1e-12));
  }
}

TEST_CASE("family solver is deterministic for a fixed seed") {
  qesrel::SearchConfig cfg;
  cfg.seed = 99;
  const auto a = qesrel::solve_scaled_family(ScaledCase::KleinGordonQ1, 2.0, 2, cfg);
  const auto b = qesrel::solve_scaled_family(ScaledCase::KleinGordonQ1, 2.0, 2, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].roots == b[i].roots);
    CHECK(a[i].w == b[i].w);
    CHECK(a[i].lambda2 == b[i].lambda2);
  }
}
