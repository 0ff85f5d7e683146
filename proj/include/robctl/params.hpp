#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace robctl {

// Robust investment-consumption model with constant coefficients.
// K4 bounds |pi|, |phi| and the consumption ratio c/x in [1/K4, K4].
template <typename Scalar = double>
struct MertonParams {
  Scalar mu0{0.02};
  Scalar mu1{0.08};
  Scalar sigma{0.2};
  Scalar delta{0.05};
  Scalar gamma{2};
  Scalar theta{1};
  Scalar K4{5};
  Scalar T{1};

  template <typename Other>
  MertonParams<Other> cast() const {
    return {Other(mu0), Other(mu1), Other(sigma), Other(delta),
            Other(gamma), Other(theta), Other(K4), Other(T)};
  }
};

// Heston stochastic-volatility model with a two-dimensional drift
// distortion phi constrained to |phi| <= Kphi * sqrt(P).
// K6 is the growth constant of the value function (|w| <= K6 x^{1-gamma} e^{K6 p}).
template <typename Scalar = double>
struct HestonParams {
  Scalar mu0{0.02};
  Scalar mu2{2.0};
  Scalar kappa{3.0};
  Scalar pbar{0.04};
  Scalar sigma{0.25};
  Scalar rho{-0.5};
  Scalar gamma{2};
  Scalar theta{1};
  Scalar Kpi{1.5};
  Scalar Kphi{1.5};
  Scalar T{1};
  Scalar K6{1};

  template <typename Other>
  HestonParams<Other> cast() const {
    return {Other(mu0),   Other(mu2),   Other(kappa), Other(pbar),
            Other(sigma), Other(rho),   Other(gamma), Other(theta),
            Other(Kpi),   Other(Kphi),  Other(T),     Other(K6)};
  }
};

using MertonParamsd = MertonParams<double>;
using HestonParamsd = HestonParams<double>;

// Sign regimes of the variance Riccati equation.
enum class RiccatiCase {
  GammaAboveOne,          // gamma > 1: a4 > 0, a6 < 0, a3 < 0 < a2
  GammaBelowOneSumAbove,  // gamma < 1, gamma + theta > 1: a4 < 0, a6 > 0
  SumEqualsOne,           // gamma + theta == 1: a4 == 0
  SumBelowOne             // gamma + theta < 1: a4 > 0, a6 > 0
};

inline const char* to_string(RiccatiCase c) {
  switch (c) {
    case RiccatiCase::GammaAboveOne: return "gamma>1";
    case RiccatiCase::GammaBelowOneSumAbove: return "gamma<1,gamma+theta>1";
    case RiccatiCase::SumEqualsOne: return "gamma+theta=1";
    case RiccatiCase::SumBelowOne: return "gamma+theta<1";
  }
  return "?";
}

template <typename Scalar = double>
struct RiccatiCoeffs {
  Scalar a1{0};
  Scalar a2{0};
  Scalar a3{0};
  Scalar a4{0};
  Scalar a5{0};
  Scalar a6{0};
  Scalar abar1{0};
  Scalar abar2{0};
  Scalar dt_local{0};
  Scalar dt_hat{0};
  std::int64_t slab_count{0};
  // Parameters of the supersolution family the step sizes were derived for.
  Scalar varrho{0};
  Scalar b{0};
  Scalar k{0};
  Scalar discriminant{0};
  bool double_root{false};
  RiccatiCase regime{RiccatiCase::GammaAboveOne};
};

using RiccatiCoeffsd = RiccatiCoeffs<double>;

namespace detail {
template <typename Scalar>
Scalar positive_part(const Scalar& v) {
  return v > Scalar(0) ? v : Scalar(0);
}
}  // namespace detail

template <typename Scalar>
void check_gamma(const Scalar& gamma) {
  using std::abs;
  if (!(gamma > Scalar(0))) throw std::invalid_argument("gamma must be positive");
  if (gamma == Scalar(1)) throw std::invalid_argument("gamma must differ from 1");
}

// a1 of the consumption-investment model; g1 solves g1' = a1 g1 - 1, g1(T) = 1.
template <typename Scalar>
RiccatiCoeffs<Scalar> derive_merton_coeffs(const MertonParams<Scalar>& p) {
  check_gamma(p.gamma);
  const Scalar one(1), two(2);
  const Scalar excess = p.mu1 - p.mu0;
  const Scalar robust_premium =
      excess * excess / (two * (p.theta + p.gamma * p.sigma * p.sigma));
  RiccatiCoeffs<Scalar> c;
  c.a1 = p.delta / p.gamma - (one - p.gamma) / p.gamma * (p.mu0 + robust_premium);
  return c;
}

// Local step Delta t for the supersolution family (varrho, b).
template <typename Scalar>
Scalar local_step(const HestonParams<Scalar>& p, const Scalar& varrho,
                  const Scalar& b) {
  using std::abs;
  using std::min;
  using std::sqrt;
  const Scalar ar = abs(varrho);
  const Scalar s = p.sigma;
  const Scalar inner = s * s * b * b +
                       s * (Scalar(2) * ar * p.Kpi + sqrt(Scalar(2)) * p.Kphi) * b +
                       (varrho * varrho + ar) * p.Kpi * p.Kpi +
                       abs(varrho * p.mu2) * p.Kpi + ar * p.Kphi * p.Kpi;
  const Scalar first = inner > Scalar(0) ? Scalar(1) / (inner * inner)
                                         : std::numeric_limits<Scalar>::infinity();
  return min(first, b / Scalar(64));
}

// Step on which the exponential-moment (Novikov) estimate holds.
template <typename Scalar>
Scalar novikov_step(const HestonParams<Scalar>& p) {
  using std::log;
  using std::min;
  using std::sqrt;
  const Scalar s = p.sigma;
  const Scalar lead = s * s + sqrt(Scalar(2)) * s * p.Kphi;
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  Scalar h = min(Scalar(1) / (lead * lead), Scalar(1) / Scalar(64));
  h = min(h, log(Scalar(2)) / (p.kappa * p.pbar));
  h = min(h, p.Kphi > Scalar(0) ? Scalar(1) / (p.Kphi * p.Kphi) : inf);
  return h;
}

template <typename Scalar>
RiccatiCase riccati_case(const HestonParams<Scalar>& p) {
  const Scalar sum = p.gamma + p.theta;
  if (p.gamma > Scalar(1)) return RiccatiCase::GammaAboveOne;
  if (sum > Scalar(1)) return RiccatiCase::GammaBelowOneSumAbove;
  if (sum == Scalar(1)) return RiccatiCase::SumEqualsOne;
  return RiccatiCase::SumBelowOne;
}

// Smallest slab count N with N >= T/dt + (K1+1)^2 + 300^2 |1-gamma|^2 Kphi^4 T e^T / theta^2,
// gbar1(T/N) >= 1/2 and gbar2(T/N) >= K6. K1 = 0 for the Heston generator.
template <typename Scalar>
std::int64_t heston_slab_count(const HestonParams<Scalar>& p, const Scalar& varrho,
                               const Scalar& b, const Scalar& dt_local) {
  using std::abs;
  using std::ceil;
  using std::exp;
  using std::log;
  const Scalar K1(0);
  const Scalar g = Scalar(1) - p.gamma;
  const Scalar kphi2 = p.Kphi * p.Kphi;
  Scalar n = p.T / dt_local + (K1 + Scalar(1)) * (K1 + Scalar(1)) +
             Scalar(90000) * g * g * kphi2 * kphi2 * p.T * exp(p.T) /
                 (p.theta * p.theta);
  const Scalar decay = abs(p.kappa * p.pbar * b + p.mu0 * varrho);
  if (decay > Scalar(0)) n = std::max(n, p.T * decay / log(Scalar(2)));
  if (!(b > p.K6))
    throw std::invalid_argument("slab count needs b > K6 so that gbar2(T/N) >= K6");
  const Scalar gap = b - p.K6;
  n = std::max(n, Scalar(16) * p.T / (gap * gap));
  const double nd = static_cast<double>(ceil(n));
  if (!(nd < 9.0e18)) throw std::overflow_error("slab count overflows");
  return static_cast<std::int64_t>(nd);
}

template <typename Scalar>
RiccatiCoeffs<Scalar> derive_heston_coeffs(const HestonParams<Scalar>& p,
                                           const Scalar& varrho, const Scalar& b,
                                           const Scalar& k) {
  using std::abs;
  using std::sqrt;
  check_gamma(p.gamma);
  const Scalar one(1), two(2);
  if (!(two * p.kappa * p.pbar >= p.sigma * p.sigma))
    throw std::invalid_argument("Feller condition 2 kappa pbar >= sigma^2 violated");

  RiccatiCoeffs<Scalar> c;
  c.varrho = varrho;
  c.b = b;
  c.k = k;
  c.regime = riccati_case(p);
  const Scalar g = p.gamma, th = p.theta, s = p.sigma, r = p.rho;
  const Scalar sum = g + th;
  c.a4 = s * s * (one - sum) / (two * (one - g) * sum) * (r * r + (one - r * r) * sum);
  c.a5 = s * r * p.mu2 / sum * (one - sum) - p.kappa;
  c.a6 = (one - g) * p.mu2 * p.mu2 / (two * sum);

  if (c.a4 != Scalar(0)) {
    Scalar disc = c.a5 * c.a5 - Scalar(4) * c.a4 * c.a6;
    const Scalar scale = c.a5 * c.a5 + abs(Scalar(4) * c.a4 * c.a6);
    if (disc < Scalar(0) && disc > -Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale)
      disc = Scalar(0);
    if (disc < Scalar(0))
      throw std::domain_error("negative Riccati discriminant: no real roots");
    c.discriminant = disc;
    const Scalar root = sqrt(disc);
    if (disc == Scalar(0)) {
      c.double_root = true;
      c.a2 = c.a3 = -c.a5 / (two * c.a4);
    } else {
      // Cancellation-free pair: q/a4 and a6/q.
      const Scalar q = c.a5 < Scalar(0) ? (-c.a5 + root) / two : -(c.a5 + root) / two;
      const Scalar r1 = q / c.a4;
      const Scalar r2 = q != Scalar(0) ? c.a6 / q : Scalar(0);
      if (c.a5 < Scalar(0)) {
        c.a2 = r1;
        c.a3 = r2;
      } else {
        c.a3 = r1;
        c.a2 = r2;
      }
    }
  }

  c.abar1 = abs(r * varrho) * p.Kpi + (abs(r) + sqrt(one - r * r)) * p.Kphi;
  c.abar2 = detail::positive_part(varrho * varrho - varrho) * p.Kpi * p.Kpi +
            two * abs(varrho * p.mu2) * p.Kpi + two * abs(varrho) * p.Kphi * p.Kpi;
  c.dt_local = local_step(p, varrho, b);
  c.dt_hat = novikov_step(p);
  if (b > p.K6) c.slab_count = heston_slab_count(p, varrho, b, c.dt_local);
  return c;
}

// Instantiation used by the value-function space: varrho = 1 - gamma, b = 2 K6.
template <typename Scalar>
RiccatiCoeffs<Scalar> derive_heston_coeffs(const HestonParams<Scalar>& p) {
  return derive_heston_coeffs(p, Scalar(1) - p.gamma, Scalar(2) * p.K6, Scalar(0));
}

struct Check {
  std::string name;
  bool passed{false};
  std::string detail;
};

struct ValidationReport {
  std::vector<Check> checks;
  bool fatal{false};  // a structural condition (gamma == 1, non-positive scale) failed

  bool ok() const {
    return !fatal && std::all_of(checks.begin(), checks.end(),
                                 [](const Check& c) { return c.passed; });
  }
  std::vector<std::string> failures() const;
};

// Evaluates every standing condition; never throws for parameter problems.
// n_time is the resolution of the time grid used for strategy extremes.
ValidationReport validate(const MertonParamsd& p, int n_time = 1001);
ValidationReport validate(const HestonParamsd& p, int n_time = 1001);

}  // namespace robctl
