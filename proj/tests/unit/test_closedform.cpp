#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "doctest.h"
#include "robctl/closedform.hpp"
#include "robctl/rng.hpp"

using namespace robctl;
using mp50 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float_50::backend_type,
                                           boost::multiprecision::et_off>;

TEST_SUITE("closedform") {
  TEST_CASE("merton reference values") {
    const MertonClosedForm<double> m(MertonParamsd{});
    // 40-digit oracle
    CHECK(m.g1(0) == doctest::Approx(1.9470965147598101896).epsilon(1e-15));
    CHECK(m.value(0, 1) == doctest::Approx(-3.7911848377897997396).epsilon(1e-15));
    CHECK(m.pi_star() == doctest::Approx(0.055555555555555556).epsilon(1e-15));
    CHECK(m.phi_star() == doctest::Approx(-0.27777777777777778).epsilon(1e-15));
    CHECK(m.g1(1) == 1.0);
    CHECK(m.strategy(0, 2).c == doctest::Approx(2 / m.g1(0)));
  }

  TEST_CASE("g1 linear branch") {
    CHECK(g1(0.25, 1.0, 0.0) == doctest::Approx(1.75).epsilon(1e-15));
    // both branches against the exact expression in 50 digits
    for (double a : {0.99e-8, 1.01e-8, -0.5e-8, 3e-9}) {
      const mp50 A(a), exact = exp(-A) - expm1(-A) / A;
      CHECK(std::abs(g1(0.0, 1.0, a) - exact.convert_to<double>()) < 1e-15);
    }
    CHECK(g1(0.0, 2.0, 1e-9) == doctest::Approx(3.0).epsilon(1e-8));
  }

  TEST_CASE("heston reference values") {
    const HestonClosedForm<double> h(HestonParamsd{});
    CHECK(h.g3(0) == doctest::Approx(-0.22078317395251965851).epsilon(1e-14));
    CHECK(h.g2(0) == doctest::Approx(0.96192166745796950134).epsilon(1e-14));
    CHECK(h.g3(0.5) == doctest::Approx(-0.17797230911309935556).epsilon(1e-14));
    CHECK(h.g2(0.5) == doctest::Approx(0.98357245078272395989).epsilon(1e-14));
    CHECK(h.value(0, 1, 0.04) == doctest::Approx(-0.95346402378207585364).epsilon(1e-14));
    CHECK(h.g3(1) == 0.0);
    CHECK(h.g2(1) == 1.0);
  }

  TEST_CASE("g3 integral matches quadrature in every regime") {
    for (auto [g, th] : {std::pair{2.0, 1.0}, {0.5, 1.0}, {0.5, 0.5}, {0.3, 0.2}}) {
      HestonParamsd p;
      p.gamma = g;
      p.theta = th;
      const HestonClosedForm<double> h(p);
      const double q = integrate_adaptive<double>([&](double r) { return h.g3(r); }, 0.0, 1.0, 1e-13);
      CHECK(h.g3_integral(0) == doctest::Approx(q).epsilon(1e-10));
    }
  }

  TEST_CASE("g3 stays between zero and its attracting level") {
    for (auto [g, th] : {std::pair{2.0, 1.0}, {0.5, 1.0}, {0.5, 0.5}, {0.3, 0.2}}) {
      HestonParamsd p;
      p.gamma = g;
      p.theta = th;
      const HestonClosedForm<double> h(p);
      const auto& c = h.coeffs();
      for (int i = 0; i < 100; ++i) {
        const double v = h.g3(i / 100.0);
        switch (c.regime) {
          case RiccatiCase::GammaAboveOne:
            CHECK(v <= 0.0);
            CHECK(v > c.a3);
            break;
          case RiccatiCase::SumEqualsOne:
            // a5 = -kappa here: the level is -a6/a5 = a6/kappa > 0
            CHECK(c.a5 == -p.kappa);
            CHECK(v >= 0.0);
            CHECK(v < c.a6 / p.kappa);
            break;
          default:
            CHECK(v >= 0.0);
        }
      }
    }
  }

  TEST_CASE("residuals in 50-digit arithmetic") {
    const MertonClosedForm<mp50> m(MertonParamsd{}.cast<mp50>());
    const HestonClosedForm<mp50> h(HestonParamsd{}.cast<mp50>());
    for (double t : {0.0, 0.3, 0.9}) {
      for (double x : {0.5, 2.0}) {
        const auto r = m.residual(mp50(t), mp50(x), 3);
        CHECK(std::abs(r.pde_residual / r.value) < 1e-40);
        CHECK(std::abs(r.foc_pi) < 1e-40);
        CHECK(std::abs(r.foc_phi1) < 1e-40);
        CHECK(std::abs(r.foc_c) < 1e-40);
        for (double v : {0.01, 0.2}) {
          const auto s = h.residual(mp50(t), mp50(x), mp50(v), 3);
          CHECK(std::abs(s.pde_residual / s.value) < 1e-40);
          CHECK(std::abs(s.foc_pi) < 1e-40);
          CHECK(std::abs(s.foc_phi1) < 1e-40);
          CHECK(std::abs(s.foc_phi2) < 1e-40);
        }
      }
    }
  }

  TEST_CASE("saddle gaps are nonnegative over the admissible boxes") {
    const MertonClosedForm<double> m(MertonParamsd{});
    const HestonClosedForm<double> h(HestonParamsd{});
    for (double t : {0.0, 0.5}) {
      const auto r = m.residual(t, 1.0, 41);
      CHECK(r.saddle_gap_pi >= -1e-12);
      CHECK(r.saddle_gap_phi >= -1e-12);
      const auto s = h.residual(t, 1.0, 0.04, 41);
      CHECK(s.saddle_gap_pi >= -1e-12);
      CHECK(s.saddle_gap_phi >= -1e-12);
    }
  }

  TEST_CASE("frak identities") {
    for (std::uint64_t i = 0; i < 200; ++i) {
      HestonParams<long double> p;
      auto u = [&](double lo, double hi, std::uint32_t k) { return (long double)(lo + (hi - lo) * uniform01(5, k, i)); };
      p.gamma = u(1.1, 4, 0);
      p.theta = u(0.1, 4, 1);
      p.sigma = u(0.05, 1, 2);
      p.rho = u(-0.99, 0.99, 3);
      p.mu2 = u(-3, 3, 4);
      const long double g = p.gamma, sum = p.gamma + p.theta, s = p.sigma, r = p.rho;
      const long double a4 = s * s * (1 - sum) / (2 * (1 - g) * sum) * (r * r + (1 - r * r) * sum);
      const long double a5 = s * r * p.mu2 / sum * (1 - sum) - p.kappa;
      const long double a6 = (1 - g) * p.mu2 * p.mu2 / (2 * sum);
      CHECK(double(frak_F1(p)) == doctest::Approx(double(a4 - s * s / 2)).epsilon(1e-12));
      CHECK(double(frak_F2(p)) == doctest::Approx(double(a5 + p.kappa)).epsilon(1e-12));
      CHECK(double(frak_F3(p)) == doctest::Approx(double(a6)).epsilon(1e-12));
    }
  }

  TEST_CASE("F at the optimum collapses to the Riccati right side") {
    const HestonParamsd p;
    const HestonClosedForm<double> h(p);
    for (double t : {0.0, 0.4, 0.8}) {
      const double g = h.g3(t);
      const double F = hamiltonian_F(h.pi_star_at(g), h.phi1_hat_at(g), h.phi2_hat_at(g), g, p);
      CHECK(F == doctest::Approx(frak_F1(p) * g * g + frak_F2(p) * g + frak_F3(p)).epsilon(1e-12));
    }
  }

  TEST_CASE("strategy bounds hold") {
    const HestonParamsd p;
    const HestonClosedForm<double> h(p);
    const double pb = pi_bound(p, h.coeffs()), fb = phi_hat_bound(p, h.coeffs());
    for (int i = 0; i <= 100; ++i) {
      const double g = h.g3(i / 100.0);
      CHECK(std::abs(h.pi_star_at(g)) <= pb);
      CHECK(std::hypot(h.phi1_hat_at(g), h.phi2_hat_at(g)) <= fb);
    }
  }

  TEST_CASE("domain errors") {
    const MertonClosedForm<double> m(MertonParamsd{});
    CHECK_THROWS(m.value(0, -1));
    CHECK_THROWS(m.g1(1.5));
    const HestonClosedForm<double> h(HestonParamsd{});
    CHECK_THROWS(h.value(0, 1, -0.1));
  }
}
