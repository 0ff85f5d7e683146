#include <cmath>

#include "doctest.h"
#include "robctl/closedform.hpp"
#include "robctl/hjbi.hpp"

using namespace robctl;

namespace {

// sup over pi, inf over phi on dense grids; phi searched in polar coordinates
double brute_saddle(const InnerSaddle& s) {
  double best = -INFINITY;
  for (int i = 0; i <= 400; ++i) {
    const double pi = -s.Kpi + 2 * s.Kpi * i / 400.0;
    const double ax = s.a1 * pi + s.a0, ay = s.a2;
    double worst = INFINITY;
    for (int r = 0; r <= 200; ++r)
      for (int k = 0; k < 360; ++k) {
        const double rad = s.Kphi * r / 200.0, ang = 2 * M_PI * k / 360.0;
        const double px = rad * std::cos(ang), py = rad * std::sin(ang);
        worst = std::min(worst, ax * px + ay * py + s.beta * rad * rad);
      }
    best = std::max(best, s.q * pi * pi + s.l * pi + worst);
  }
  return best;
}

SlabSpec small_spec() {
  SlabSpec s;
  s.nt = 40;
  s.nv = 20;
  return s;
}

}  // namespace

TEST_SUITE("hjbi") {
  TEST_CASE("inner saddle against brute force") {
    const InnerSaddle cases[] = {
        {-0.3, 0.2, 0.5, 0.1, 0.3, 0.4, 1.5, 1.5},
        {-1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0},
        {-0.05, 0.3, -0.8, 0.2, 0.05, 0.01, 2.0, 0.5},
        {0.2, -0.1, 0.3, -0.4, 0.2, 2.0, 1.0, 1.0},
    };
    for (const auto& c : cases) {
      const NodeControl n = solve_inner_saddle(c);
      CHECK(std::abs(n.pi) <= c.Kpi);
      CHECK(std::hypot(n.phi1, n.phi2) <= c.Kphi * (1 + 1e-12));
      CHECK(n.value == doctest::Approx(brute_saddle(c)).epsilon(1e-3));
    }
  }

  TEST_CASE("closed form solves the reduced equation") {
    const HestonParamsd p;
    const ReducedModel m = reduce_model(p);
    const double h = 1e-4;
    for (double t : {0.1, 0.5, 0.9})
      for (double v : {0.02, 0.04, 0.2}) {
        const double V = m.closed_value(t, v);
        const double Vt = (m.closed_value(t + h, v) - m.closed_value(t - h, v)) / (2 * h);
        const double Vv = (m.closed_value(t, v + h) - m.closed_value(t, v - h)) / (2 * h);
        const double Vvv =
            (m.closed_value(t, v + h) - 2 * V + m.closed_value(t, v - h)) / (h * h);
        CHECK(std::abs(m.residual(v, V, Vt, Vv, Vvv, V, 2001)) <= 1e-5 * std::abs(V));
      }
  }

  TEST_CASE("slab widths") {
    const HestonParamsd p;
    const auto m = reduce_model(p);
    CHECK(slab_steps(m, small_spec()) == 1);
    SlabSpec wide = small_spec();
    wide.slab_width = 0.25;
    CHECK(slab_steps(m, wide) == 10);
    wide.slab_width = 0.26;
    CHECK(slab_steps(m, wide) == 10);
  }

  TEST_CASE("weighted distance of a surface to itself") {
    const auto m = reduce_model(HestonParamsd{});
    const auto s = closed_form_surface(m, small_spec());
    CHECK(weighted_distance(s, s, 0, s.nt() + 1, 0, s.nv()) == 0.0);
    CHECK(closed_form_error(s, m) == 0.0);
    CHECK((s.weight.array() > 0).all());
    const auto c = constant_surface(m, small_spec(), 0.0);
    CHECK(c.weighted_norm() == 0.0);
  }

  TEST_CASE("fixed point recovers the heston value") {
    const auto m = reduce_model(HestonParamsd{});
    const auto spec = small_spec();
    const auto r = fixed_point(spec, m, constant_surface(m, spec, 0.0));
    CHECK(r.slabs == spec.nt);
    CHECK(closed_form_error(r.surface, m) < 5e-2);
    REQUIRE_FALSE(r.history.empty());
    CHECK(r.history.back().weighted_delta <= spec.tol);
  }

  TEST_CASE("fixed point recovers the merton value") {
    const MertonParamsd p;
    const auto m = reduce_model(p);
    auto spec = small_spec();
    spec.nt = 200;
    const auto r = fixed_point(spec, m, constant_surface(m, spec, 0.0));
    const double V0 = r.surface.values(0, 0);
    CHECK(V0 == doctest::Approx(m.closed_value(0, 0)).epsilon(1e-2));
    CHECK(V0 * 1.0 == doctest::Approx(value_merton(0.0, 1.0, p)).epsilon(1e-2));
  }

  TEST_CASE("slab map contracts") {
    const auto m = reduce_model(HestonParamsd{});
    const auto spec = small_spec();
    const auto a = closed_form_surface(m, spec);
    const auto b = constant_surface(m, spec, 0.0);
    for (int slab : {0, 5, 39}) CHECK(contraction_ratio(a, b, spec, m, slab) < 0.6);
  }

  TEST_CASE("identical inputs have no ratio") {
    const auto m = reduce_model(HestonParamsd{});
    const auto spec = small_spec();
    const auto a = closed_form_surface(m, spec);
    CHECK_THROWS(contraction_ratio(a, a, spec, m, 0));
  }
}
