#include <algorithm>
#include <cmath>
#include <string>

#include "doctest.h"
#include "robctl/params.hpp"
#include "robctl/rng.hpp"

using namespace robctl;

namespace {
bool has_failure(const ValidationReport& r, const std::string& name) {
  for (const auto& f : r.failures())
    if (f.rfind(name, 0) == 0) return true;
  return false;
}
}  // namespace

TEST_SUITE("params") {
  TEST_CASE("merton a1 at the reference set") {
    // 40-digit evaluation: 0.0358333...
    CHECK(derive_merton_coeffs(MertonParamsd{}).a1 == doctest::Approx(0.035833333333333333).epsilon(1e-15));
  }

  TEST_CASE("merton a1 without excess return") {
    MertonParamsd p;
    p.mu1 = p.mu0;
    CHECK(derive_merton_coeffs(p).a1 ==
          doctest::Approx(p.delta / p.gamma - (1 - p.gamma) * p.mu0 / p.gamma).epsilon(1e-15));
  }

  TEST_CASE("gamma equal to one is rejected") {
    MertonParamsd p;
    p.gamma = 1;
    CHECK_THROWS_AS(derive_merton_coeffs(p), std::invalid_argument);
    const auto r = validate(p);
    CHECK(r.fatal);
    CHECK_FALSE(r.ok());
    HestonParamsd h;
    h.gamma = 1;
    CHECK(validate(h).fatal);
  }

  TEST_CASE("heston coefficients at the reference set") {
    const auto c = derive_heston_coeffs(HestonParamsd{});
    CHECK(c.a6 == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
    CHECK(c.a4 == doctest::Approx(0.052083333333333333).epsilon(1e-15));
    CHECK(c.a5 == doctest::Approx(-2.8333333333333333).epsilon(1e-15));
    CHECK(c.a2 == doctest::Approx(54.634285119171594700).epsilon(1e-14));
    CHECK(c.a3 == doctest::Approx(-0.23428511917159469981).epsilon(1e-14));
    CHECK(c.a2 > 0);
    CHECK(c.a3 < 0);
    CHECK(c.regime == RiccatiCase::GammaAboveOne);
    CHECK(c.abar1 == doctest::Approx(2.7990381056766580).epsilon(1e-15));
    CHECK(c.abar2 == doctest::Approx(15.0).epsilon(1e-15));
  }

  TEST_CASE("riccati roots solve the quadratic") {
    int tested = 0;
    for (std::uint64_t i = 0; i < 2000; ++i) {
      HestonParamsd p;
      auto u = [&](double lo, double hi, std::uint32_t k) { return lo + (hi - lo) * uniform01(99, k, i); };
      p.gamma = u(0.2, 4, 0);
      p.theta = u(0.2, 4, 1);
      p.sigma = u(0.05, 0.8, 2);
      p.rho = u(-0.95, 0.95, 3);
      p.mu2 = u(-2, 2, 4);
      p.kappa = u(1, 8, 5);
      p.pbar = p.sigma * p.sigma / p.kappa;  // Feller with room
      if (std::abs(1 - p.gamma) < 0.05 || std::abs(1 - p.gamma - p.theta) < 0.05) continue;
      RiccatiCoeffsd c;
      try {
        c = derive_heston_coeffs(p);
      } catch (const std::domain_error&) {
        continue;  // complex roots
      }
      // absolute 1e-12 once the terms are O(1); large roots carry rounding of order |a4| x^2 eps
      for (long double x : {c.a2, c.a3}) {
        const long double a4 = c.a4, a5 = c.a5, a6 = c.a6;
        const long double scale = std::max({1.0L, std::abs(a4 * x * x), std::abs(a5 * x), std::abs(a6)});
        CHECK(double(std::abs(a4 * x * x + a5 * x + a6)) < 1e-12 * double(scale));
      }
      ++tested;
    }
    CHECK(tested > 1000);
  }

  TEST_CASE("a4 vanishes when gamma + theta = 1") {
    HestonParamsd p;
    p.gamma = 0.5;
    p.theta = 0.5;
    const auto c = derive_heston_coeffs(p);
    CHECK(c.a4 == 0.0);
    CHECK(c.regime == RiccatiCase::SumEqualsOne);
  }

  TEST_CASE("regime signs") {
    HestonParamsd p;
    p.gamma = 0.5;
    auto c = derive_heston_coeffs(p);
    CHECK(c.regime == RiccatiCase::GammaBelowOneSumAbove);
    CHECK(c.a4 < 0);
    CHECK(c.a6 > 0);
    p.theta = 0.2;
    p.gamma = 0.3;
    c = derive_heston_coeffs(p);
    CHECK(c.regime == RiccatiCase::SumBelowOne);
    CHECK(c.a4 > 0);
    CHECK(c.a6 > 0);
  }

  TEST_CASE("feller violation") {
    HestonParamsd p;
    p.kappa = 0.1;
    const auto r = validate(p);
    CHECK_FALSE(r.ok());
    CHECK(has_failure(r, "feller"));
    CHECK_THROWS_AS(derive_heston_coeffs(p), std::invalid_argument);
  }

  TEST_CASE("reference sets validate") {
    CHECK(validate(MertonParamsd{}).ok());
    CHECK(validate(HestonParamsd{}).ok());
  }

  TEST_CASE("insufficient bounds are reported") {
    MertonParamsd m;
    m.K4 = 0.2;  // below |phi*| = 0.278
    CHECK_FALSE(validate(m).ok());
    HestonParamsd h;
    h.Kpi = 0.1;
    CHECK_FALSE(validate(h).ok());
  }

  TEST_CASE("local and novikov steps") {
    const HestonParamsd p;
    CHECK(local_step(p, -1.0, 2.0) == doctest::Approx(0.0063383332322854151).epsilon(1e-14));
    CHECK(novikov_step(p) == 1.0 / 64);
    // Kphi = 0 drops the 1/Kphi^2 term
    HestonParamsd q = p;
    q.Kphi = 0;
    CHECK(novikov_step(q) == doctest::Approx(std::min({1 / std::pow(q.sigma * q.sigma, 2), 1.0 / 64,
                                                       std::log(2.0) / (q.kappa * q.pbar)})));
    CHECK(local_step(p, -1.0, 2.0) <= 2.0 / 64);
  }

  TEST_CASE("local step is nonincreasing in sigma, Kpi, Kphi and |varrho|") {
    const HestonParamsd base;
    const double b = 2;
    auto scan = [&](auto set) {
      double prev = INFINITY;
      for (double s = 0.5; s <= 3.0; s += 0.25) {
        HestonParamsd p = base;
        double vr = -1;
        set(p, vr, s);
        const double dt = local_step(p, vr, b);
        CHECK(dt <= prev);
        prev = dt;
      }
    };
    scan([](HestonParamsd& p, double&, double s) { p.sigma = 0.25 * s; });
    scan([](HestonParamsd& p, double&, double s) { p.Kpi = 1.5 * s; });
    scan([](HestonParamsd& p, double&, double s) { p.Kphi = 1.5 * s; });
    scan([](HestonParamsd&, double& vr, double s) { vr = -s; });
  }

  TEST_CASE("local step in b: nonincreasing once the b/64 cap is slack") {
    const HestonParamsd p;
    double prev = INFINITY;
    for (double b = 4; b <= 40; b += 2) {  // first term binds here
      const double dt = local_step(p, -1.0, b);
      CHECK(dt < b / 64);
      CHECK(dt <= prev);
      prev = dt;
    }
    // with the cap binding, dt = b/64 grows with b
    CHECK(local_step(p, -1.0, 0.1) == doctest::Approx(0.1 / 64));
  }

  TEST_CASE("slab count") {
    const auto c = derive_heston_coeffs(HestonParamsd{});
    // 1/dt + 1 + 90000 * 1 * 1.5^4 e / 1
    const double n = 1 / c.dt_local + 1 + 90000 * std::pow(1.5, 4) * std::exp(1.0);
    CHECK(c.slab_count == std::int64_t(std::ceil(n)));
  }
}
