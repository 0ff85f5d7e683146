#include <cmath>

#include "doctest.h"
#include "robctl/appxa.hpp"

using namespace robctl;

namespace {

McConfig small_mc(Index paths = 2000, int steps = 100) {
  McConfig mc;
  mc.n_paths = paths;
  mc.n_steps = steps;
  mc.seed = 7;
  return mc;
}

}  // namespace

TEST_SUITE("appxa") {
  TEST_CASE("global window matches the independent oracle") {
    HestonParamsd p;
    p.kappa = 6;
    const SuperSolutionSpec s{-1, 2, 1};
    const auto w = global_b_window(s, p);
    CHECK(w.first == doctest::Approx(0.40478952428).epsilon(1e-10));
    CHECK(w.second == doctest::Approx(41.99713426437).epsilon(1e-10));
    CHECK(delta1(s, p) > 0);
  }

  TEST_CASE("non-ambiguity window and largest k") {
    const HestonParamsd p;
    const auto w = nonambiguity_b_window(2, p);
    CHECK(w.first == doctest::Approx(1.8573849885890446).epsilon(1e-13));
    CHECK(w.second == doctest::Approx(86.142615011410955).epsilon(1e-13));
    HestonParamsd q = p;
    q.Kphi = 0;
    q.Kpi = 1;
    CHECK(max_k({2, 44, 0}, q) == doctest::Approx(55.5).epsilon(1e-13));
    CHECK(max_k({2, 200, 0}, q) == 0.0);
  }

  TEST_CASE("window errors") {
    HestonParamsd p;
    p.kappa = 1;
    CHECK_THROWS_AS(global_b_window({-1, 2, 0}, p), std::invalid_argument);
    p.kappa = 3;  // window exists but excludes sigma b = 0.5
    CHECK_THROWS_AS(verify_global({-1, 2, 1}, p, 0, 1, 0.04, small_mc()), std::invalid_argument);
    p.kappa = 6;
    CHECK_THROWS_AS(global_b_window({-1, 2, -1}, p), std::invalid_argument);
    CHECK_THROWS_AS(global_b_window({-1, 2, 1e4}, p), std::invalid_argument);
    HestonParamsd q;
    q.kappa = 0.1;
    q.pbar = 0.4;
    CHECK_THROWS_AS(nonambiguity_b_window(2, q), std::invalid_argument);
    HestonParamsd r;
    r.kappa = 6;
    CHECK_THROWS_AS(verify_global({-1, 200, 1}, r, 0, 1, 0.04, small_mc()), std::invalid_argument);
    CHECK_THROWS_AS(verify_nonambiguity(HestonParamsd{}, 2, 1.0, 0, 1, 0.04, small_mc()),
                    std::invalid_argument);
  }

  TEST_CASE("value-space family") {
    const HestonParamsd p;
    const auto s = value_space_family(p);
    CHECK(s.varrho == -1.0);
    CHECK(s.b == 2.0);
    CHECK(s.k == 0.0);
    CHECK(s.gbar2(0.0) == 2.0);
    CHECK(s.gbar1(0.0, p) == 1.0);
    CHECK(s.wbar(0.1, 2.0, 0.04, p) == doctest::Approx(s.gbar1(0.1, p) * 0.5 * std::exp(s.gbar2(0.1) * 0.04)));
  }

  TEST_CASE("worst-case controls against a dense search") {
    const HestonParamsd p;
    for (double varrho : {-1.0, 0.5, 2.0})
      for (double g : {0.0, 1.0, 2.0}) {
        const double rc = std::sqrt(1 - p.rho * p.rho);
        auto f = [&](double pi) {
          const double a1 = varrho * pi + p.sigma * p.rho * g, a2 = p.sigma * rc * g;
          // inner phi search on the sphere, independent of the closed direction
          double best = -INFINITY;
          for (int k = 0; k < 3600; ++k) {
            const double ang = 2 * M_PI * k / 3600;
            best = std::max(best, p.Kphi * (a1 * std::cos(ang) + a2 * std::sin(ang)));
          }
          return 0.5 * varrho * (varrho - 1) * pi * pi + (p.sigma * p.rho * varrho * g + varrho * p.mu2) * pi + best;
        };
        double brute = -INFINITY;
        for (int i = 0; i <= 4000; ++i) brute = std::max(brute, f(-p.Kpi + 2 * p.Kpi * i / 4000));
        const WorstCase w = worst_case_controls(varrho, g, p);
        CHECK(f(w.pi) == doctest::Approx(brute).epsilon(1e-4));
        CHECK(std::hypot(w.phi1_hat, w.phi2_hat) == doctest::Approx(p.Kphi));
      }
  }

  TEST_CASE("local estimate at the slab end is deterministic") {
    const HestonParamsd p;
    const SuperSolutionSpec s = value_space_family(p);
    const double dt = local_step(p, s.varrho, s.b);
    const auto r = verify_local(s, p, dt, 1.5, 0.04, small_mc(200, 10));
    REQUIRE(r.checks.size() == 2);
    CHECK(r.checks[0].estimate == s.wbar(dt, 1.5, 0.04, p));
    CHECK(r.checks[0].std_error == 0.0);
    CHECK(r.passed());
    CHECK_THROWS_AS(verify_local(s, p, dt * 1.01, 1, 0.04, small_mc()), std::invalid_argument);
  }

  TEST_CASE("local estimate in the noiseless limit") {
    // Kpi = Kphi = 0 and a tiny vol: P follows the CIR mean path and X = x e^{mu0 s}.
    HestonParamsd p;
    p.Kpi = 0;
    p.Kphi = 0;
    p.sigma = 1e-5;
    const SuperSolutionSpec s{-1, 2, 0};
    const double dt = local_step(p, s.varrho, s.b);
    const double x = 1.3, v = 0.1;
    auto P = [&](double t) { return p.pbar + (v - p.pbar) * std::exp(-p.kappa * t); };
    auto w = [&](double t) { return s.wbar(t, x * std::exp(p.mu0 * t), P(t), p); };
    const int n = 20000;
    const double U = std::sqrt(dt);
    double integral = 0, sup = -INFINITY;
    for (int i = 0; i <= n; ++i) {
      const double u = U * i / n, wt = i == 0 || i == n ? 1 : (i % 2 ? 4 : 2);
      integral += wt * 2 * P(u * u) * w(u * u);
      sup = std::max(sup, w(u * u));
    }
    integral *= U / (3 * n);
    const auto r = verify_local(s, p, 0, x, v, small_mc(200, 4000));
    CHECK(r.checks[0].estimate == doctest::Approx(sup + integral).epsilon(2e-4));
    CHECK(r.checks[0].std_error < 1e-6);
  }

  TEST_CASE("local estimate ignores x when varrho = 0") {
    const HestonParamsd p;
    const SuperSolutionSpec s{0, 2, 0};
    const auto a = verify_local(s, p, 0, 1, 0.04, small_mc(500, 50));
    const auto b = verify_local(s, p, 0, 7, 0.04, small_mc(500, 50));
    CHECK(a.checks[0].estimate == b.checks[0].estimate);
    CHECK(a.checks[0].std_error == b.checks[0].std_error);
  }

  TEST_CASE("local estimate holds at the reference point") {
    const HestonParamsd p;
    const auto r = verify_local(value_space_family(p), p, 0, 1, 0.04, small_mc());
    CHECK(r.passed());
    CHECK(r.checks[0].ratio() < 1);
  }

  TEST_CASE("exponential moment") {
    HestonParamsd p;
    auto r = verify_exp_moment(p, 0, 0.04, small_mc());
    CHECK(r.passed());
    CHECK(r.checks[0].estimate > 1);
    p.Kphi = 0;
    r = verify_exp_moment(p, 0, 0.04, small_mc(500, 20));
    CHECK(r.checks[0].estimate == 1.0);
    CHECK(r.checks[0].std_error == 0.0);
    CHECK_THROWS_AS(verify_exp_moment(p, novikov_step(p), 0.04, small_mc()), std::invalid_argument);
  }

  TEST_CASE("global estimate") {
    HestonParamsd p;
    p.kappa = 6;
    auto r = verify_global({-1, 2, 1}, p, 0, 1, 0.04, small_mc());
    CHECK(r.checks.size() == 2);
    CHECK(r.passed());
    r = verify_global({-1, 2, 0}, p, 0, 1, 0.04, small_mc());
    CHECK(r.checks.size() == 1);
    // varrho = 0, b = 0: the moment is identically one
    r = verify_global({0, 0, 0}, p, 0, 1, 0.04, small_mc(500, 20));
    CHECK(r.checks[0].estimate == 1.0);
    CHECK(r.checks[0].std_error == 0.0);
    CHECK(r.checks[0].bound == 5.0);
  }

  TEST_CASE("non-ambiguity estimate") {
    const HestonParamsd p;
    const auto r = verify_nonambiguity(p, 2, 44, 0, 1, 0.04, small_mc());
    CHECK(r.passed());
  }

  TEST_CASE("supersolution sign") {
    const HestonParamsd p;
    const auto r = supersolution_sign(value_space_family(p), p, 50, 50, 101);
    CHECK(r.passed());
    CHECK(r.gbar2_floor);
    CHECK(r.argmax_s > 0);
    CHECK(r.argmax_s <= r.dt);
    CHECK_FALSE(supersolution_sign({-1, 0.5, 0}, p, 10, 10, 11).gbar2_floor);
  }

  TEST_CASE("empty report does not pass") {
    BoundReport r;
    CHECK_FALSE(r.passed());
  }
}
