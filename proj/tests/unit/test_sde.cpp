#include <cmath>
#include <cstring>

#include "doctest.h"
#include "robctl/payoff.hpp"
#include "robctl/rng.hpp"
#include "robctl/sde.hpp"

using namespace robctl;

TEST_SUITE("sde") {
  TEST_CASE("philox known answers") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::generate({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  }

  TEST_CASE("normal draws have unit moments") {
    double s1 = 0, s2 = 0, c = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const auto z = normal_pair(42, 0, std::uint64_t(i), 0);
      s1 += z.z1 + z.z2;
      s2 += z.z1 * z.z1 + z.z2 * z.z2;
      c += z.z1 * z.z2;
    }
    CHECK(std::abs(s1 / (2 * n)) < 4 / std::sqrt(2.0 * n));
    CHECK(std::abs(s2 / (2 * n) - 1) < 4 * std::sqrt(2.0 / (2 * n)));
    CHECK(std::abs(c / n) < 4 / std::sqrt(double(n)));
  }

  TEST_CASE("cir mean under full truncation") {
    HestonParamsd p;
    const double v0 = 0.1;
    PathGrid g;
    g.n_steps = 200;
    g.n_paths = 40000;
    FeedbackStrategy s{constant_feedback(0), constant_feedback(0), "zero"};
    FeedbackAmbiguity a{constant_feedback(0), constant_feedback(0), "none"};
    const PathBundle b = simulate_heston(g, 1.0, v0, s, a, p);
    const Eigen::VectorXd PT = b.variance.col(g.n_steps);
    const double mean = PT.mean();
    const double se = std::sqrt((PT.array() - mean).square().sum() / (PT.size() - 1) / PT.size());
    const double exact = p.pbar + (v0 - p.pbar) * std::exp(-p.kappa * p.T);
    CHECK(std::abs(mean - exact) <= 3 * se);
    CHECK((b.variance.array() >= 0).all());
  }

  TEST_CASE("merton wealth mean with proportional controls") {
    MertonParamsd p;
    const double pi = 0.5, phi = -0.1, k = 0.05;
    PathGrid g;
    g.n_steps = 100;
    g.n_paths = 40000;
    FeedbackStrategy s{constant_feedback(pi), [k](double, const ArrayXd& x, const ArrayXd&) -> ArrayXd { return k * x; }, "prop"};
    FeedbackAmbiguity a{constant_feedback(phi), constant_feedback(0), "const"};
    for (Scheme sc : {Scheme::Euler, Scheme::Heun}) {
      SimOptions o;
      o.scheme = sc;
      const PathBundle b = simulate_merton(g, 1.0, s, a, p, o);
      const Eigen::VectorXd XT = b.wealth.col(g.n_steps);
      const double mean = XT.mean();
      const double se = std::sqrt((XT.array() - mean).square().sum() / (XT.size() - 1) / XT.size());
      const double exact = std::exp((p.mu0 + (p.mu1 - p.mu0 + p.sigma * phi) * pi - k) * p.T);
      CHECK(std::abs(mean - exact) <= 3 * se);
    }
  }

  TEST_CASE("results do not depend on the thread count") {
    const HestonParamsd p;
    PathGrid g;
    g.n_steps = 20;
    g.n_paths = 3000;
    SimOptions one, many;
    many.threads = 4;
    many.block = 256;
    one.block = 256;
    const auto a = simulate_heston(g, 1, 0.04, heston_optimal_strategy(p), heston_optimal_ambiguity(p), p, one);
    const auto b = simulate_heston(g, 1, 0.04, heston_optimal_strategy(p), heston_optimal_ambiguity(p), p, many);
    CHECK(a.wealth == b.wealth);
    CHECK(a.variance == b.variance);
  }

  TEST_CASE("paths do not depend on the block size") {
    const MertonParamsd p;
    PathGrid g;
    g.n_steps = 10;
    g.n_paths = 1000;
    SimOptions a, b;
    a.block = 64;
    b.block = 1000;
    const auto x = simulate_merton(g, 1, merton_optimal_strategy(p), merton_optimal_ambiguity(p), p, a);
    const auto y = simulate_merton(g, 1, merton_optimal_strategy(p), merton_optimal_ambiguity(p), p, b);
    CHECK(x.wealth == y.wealth);
  }

  TEST_CASE("antithetic pairs share negated normals") {
    const HestonParamsd p;
    PathGrid g;
    g.n_steps = 5;
    g.n_paths = 10;
    g.antithetic = true;
    const auto b = simulate_heston(g, 1, 0.04, heston_optimal_strategy(p), heston_optimal_ambiguity(p), p);
    for (Index i = 0; i < 10; i += 2) {
      CHECK((b.brownian1.row(i) + b.brownian1.row(i + 1)).cwiseAbs().maxCoeff() == 0.0);
      CHECK((b.brownian2.row(i) + b.brownian2.row(i + 1)).cwiseAbs().maxCoeff() == 0.0);
    }
    g.n_paths = 11;
    CHECK_THROWS_AS(g.check(1.0), std::invalid_argument);
  }

  TEST_CASE("optimal controls stay admissible") {
    const HestonParamsd p;
    PathGrid g;
    g.n_steps = 50;
    g.n_paths = 2000;
    const auto b = simulate_heston(g, 1, 0.04, heston_optimal_strategy(p), heston_optimal_ambiguity(p), p);
    CHECK(b.diagnostics.control_violations == 0);
    CHECK(b.diagnostics.max_ball_excess <= 1e-12);
  }

  TEST_CASE("grid checks") {
    PathGrid g;
    g.t1 = 2;
    CHECK_THROWS(g.check(1.0));
    CHECK_THROWS(explicit_grid({0.0, 0.5, 0.4}, 10, 1).check(1.0));
    const auto e = explicit_grid({0.0, 0.25, 1.0}, 10, 1);
    CHECK(e.steps() == 2);
    CHECK(e.node(1) == 0.25);
    CHECK(scheme_from_string("euler") == Scheme::Euler);
    CHECK_THROWS(scheme_from_string("rk4"));
  }

  TEST_CASE("non-finite controls are rejected") {
    const MertonParamsd p;
    PathGrid g;
    g.n_steps = 2;
    g.n_paths = 4;
    FeedbackStrategy s{constant_feedback(NAN), constant_feedback(0.1), "nan"};
    CHECK_THROWS_AS(simulate_merton(g, 1, s, merton_optimal_ambiguity(p), p), std::runtime_error);
  }

  TEST_CASE("path dump layout") {
    const HestonParamsd p;
    PathGrid g;
    g.n_steps = 3;
    g.n_paths = 2;
    const auto b = simulate_heston(g, 1, 0.04, heston_optimal_strategy(p), heston_optimal_ambiguity(p), p);
    const std::string d = encode_path_dump(b);
    REQUIRE(d.size() == 16 + 8 * 2 * 2 * 4);
    CHECK(d.substr(0, 4) == "RCTL");
    std::uint32_t hdr[3];
    std::memcpy(hdr, d.data() + 4, 12);
    CHECK(hdr[0] == 1);
    CHECK(hdr[1] == 2);
    CHECK(hdr[2] == 3);
    double v;
    std::memcpy(&v, d.data() + 16 + 8 * 4, 8);  // wealth(1, 0)
    CHECK(v == 1.0);
    std::memcpy(&v, d.data() + 16 + 8 * 8, 8);  // variance(0, 0)
    CHECK(v == 0.04);
  }
}

TEST_SUITE("payoff") {
  TEST_CASE("summarize") {
    ArrayXd x = ArrayXd::LinSpaced(101, 0, 100);
    const auto e = summarize(x, 3);
    CHECK(e.mean == doctest::Approx(50));
    CHECK(e.std_error == doctest::Approx(std::sqrt(858.5 / 101)));
    CHECK(e.seed == 3);
    CHECK_THROWS(summarize(ArrayXd::Zero(10), 1));
  }

  TEST_CASE("merton value is reproduced") {
    const MertonParamsd p;
    PathGrid g;
    g.n_steps = 200;
    g.n_paths = 20000;
    const auto e = estimate_J1(0, 1, merton_optimal_strategy(p), merton_optimal_ambiguity(p), merton_value(p), g, p);
    const double W = -3.7911848377897997;
    CHECK(std::abs(e.mean - W) <= 3 * e.std_error);
  }

  TEST_CASE("heston value is reproduced") {
    const HestonParamsd p;
    PathGrid g;
    g.n_steps = 200;
    g.n_paths = 20000;
    const auto e = estimate_J2(0, 1, 0.04, heston_optimal_strategy(p), heston_optimal_ambiguity(p), heston_value(p), g, p);
    const double W = -0.95346402378207585;
    CHECK(std::abs(e.mean - W) <= 3 * e.std_error);
  }

  TEST_CASE("antithetic estimates count pairs") {
    const MertonParamsd p;
    PathGrid g;
    g.n_steps = 20;
    g.n_paths = 1000;
    g.antithetic = true;
    const auto e = estimate_J1(0, 1, merton_optimal_strategy(p), merton_optimal_ambiguity(p), merton_value(p), g, p);
    CHECK(e.n_paths == 500);
  }

  TEST_CASE("grid must end at the horizon") {
    const MertonParamsd p;
    PathGrid g;
    g.t1 = 0.5;
    g.n_paths = 200;
    CHECK_THROWS_AS(estimate_J1(0, 1, merton_optimal_strategy(p), merton_optimal_ambiguity(p), merton_value(p), g, p),
                    std::invalid_argument);
  }

  TEST_CASE("saddle probe at small scale") {
    const HestonParamsd p;
    PathGrid g;
    g.n_steps = 50;
    g.n_paths = 4000;
    const auto r = saddle_probe(1.0, 0.04, p, g, default_perturbations());
    CHECK(r.entries.size() == 6);
    for (const auto& e : r.entries) CHECK_FALSE(e.skipped);
    CHECK(r.ok());
    CHECK(default_perturbations().size() == 6);
  }
}
