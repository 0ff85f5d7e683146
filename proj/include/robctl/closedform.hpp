#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "robctl/params.hpp"

namespace robctl {

// Optimal controls at a state. c is the consumption rate (Merton only); for
// the Heston model phi1/phi2 are the unnormalized distortions (scale with sqrt(p)).
template <typename Scalar = double>
struct StrategyPoint {
  Scalar pi{0};
  Scalar c{0};
  Scalar phi1{0};
  Scalar phi2{0};
};

struct HjbiResidual {
  double pde_residual{0};  // L^{u*,v*} w + f(w, u*, v*)
  double foc_pi{0};
  double foc_phi1{0};
  double foc_phi2{0};
  double foc_c{0};           // consumption first-order condition (Merton only)
  double saddle_gap_pi{0};   // min over the maximizer's grid of -(L^{u,v*} w + f), scaled by 1/|w|
  double saddle_gap_phi{0};  // min over the minimizer's grid of  (L^{u*,v} w + f), scaled by 1/|w|
  double value{0};
};

namespace detail {

template <typename Scalar>
void check_time(const Scalar& t, const Scalar& T) {
  if (!(t >= Scalar(0) && t <= T)) throw std::domain_error("time outside [0, T]");
}

template <typename Scalar>
void check_positive(const Scalar& v, const char* what) {
  if (!(v > Scalar(0))) throw std::domain_error(std::string(what) + " must be positive");
}

// Adaptive Simpson on [a, b]; used where a closed-form antiderivative degenerates.
template <typename Scalar, typename F>
Scalar adaptive_simpson(const F& f, Scalar a, Scalar b, Scalar fa, Scalar fm, Scalar fb,
                        Scalar whole, Scalar tol, int depth) {
  using std::abs;
  const Scalar m = (a + b) / Scalar(2);
  const Scalar lm = (a + m) / Scalar(2), rm = (m + b) / Scalar(2);
  const Scalar flm = f(lm), frm = f(rm);
  const Scalar left = (m - a) / Scalar(6) * (fa + Scalar(4) * flm + fm);
  const Scalar right = (b - m) / Scalar(6) * (fm + Scalar(4) * frm + fb);
  const Scalar delta = left + right - whole;
  if (depth <= 0 || abs(delta) <= Scalar(15) * tol) return left + right + delta / Scalar(15);
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / Scalar(2), depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / Scalar(2), depth - 1);
}

}  // namespace detail

template <typename Scalar, typename F>
Scalar integrate_adaptive(const F& f, Scalar a, Scalar b, Scalar tol = Scalar(1e-12)) {
  if (a == b) return Scalar(0);
  const Scalar fa = f(a), fb = f(b), fm = f((a + b) / Scalar(2));
  const Scalar whole = (b - a) / Scalar(6) * (fa + Scalar(4) * fm + fb);
  return detail::adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

// g1 with g1' = a1 g1 - 1, g1(T) = 1.
template <typename Scalar>
Scalar g1(const Scalar& t, const Scalar& T, const Scalar& a1) {
  using std::abs;
  using std::exp;
  using std::expm1;
  const Scalar tau = T - t;
  if (abs(a1) < Scalar(1e-8)) {
    // Second-order expansion around the linear branch T + 1 - t.
    const Scalar tau2 = tau * tau;
    return Scalar(1) + tau - a1 * (tau + tau2 / Scalar(2)) +
           a1 * a1 * (tau2 / Scalar(2) + tau2 * tau / Scalar(6));
  }
  return exp(-a1 * tau) - expm1(-a1 * tau) / a1;
}

template <typename Scalar>
class MertonClosedForm {
 public:
  explicit MertonClosedForm(const MertonParams<Scalar>& p)
      : p_(p), c_(derive_merton_coeffs(p)) {
    detail::check_positive(p.sigma, "sigma");
    detail::check_positive(p.theta, "theta");
  }

  const MertonParams<Scalar>& params() const { return p_; }
  const RiccatiCoeffs<Scalar>& coeffs() const { return c_; }

  Scalar g1(const Scalar& t) const {
    detail::check_time(t, p_.T);
    return robctl::g1(t, p_.T, c_.a1);
  }

  // W(t, x) = g1(t)^gamma x^{1-gamma} / (1-gamma)
  Scalar value(const Scalar& t, const Scalar& x) const {
    using std::pow;
    detail::check_positive(x, "wealth");
    return pow(g1(t), p_.gamma) * pow(x, Scalar(1) - p_.gamma) / (Scalar(1) - p_.gamma);
  }

  Scalar pi_star() const {
    return (p_.mu1 - p_.mu0) / (p_.theta + p_.gamma * p_.sigma * p_.sigma);
  }
  Scalar phi_star() const {
    return p_.theta * (p_.mu0 - p_.mu1) /
           (p_.sigma * (p_.theta + p_.gamma * p_.sigma * p_.sigma));
  }
  // Optimal consumption as a fraction of wealth.
  Scalar consumption_ratio(const Scalar& t) const { return Scalar(1) / g1(t); }

  StrategyPoint<Scalar> strategy(const Scalar& t, const Scalar& x) const {
    detail::check_positive(x, "wealth");
    return {pi_star(), x / g1(t), phi_star(), Scalar(0)};
  }

  // L^{pi,c,phi} w + f1(w, c, phi) at (t, x) for the closed-form w.
  Scalar hamiltonian(const Scalar& t, const Scalar& x, const Scalar& pi, const Scalar& c,
                     const Scalar& phi) const {
    const Derivs d = derivs(t, x);
    return apply(d, x, pi, c, phi);
  }

  HjbiResidual residual(const Scalar& t, const Scalar& x, int grid = 201) const;

 private:
  struct Derivs {
    Scalar w, wt, xwx, x2wxx;
  };

  Derivs derivs(const Scalar& t, const Scalar& x) const {
    using std::pow;
    const Scalar one(1);
    const Scalar g = g1(t);
    Derivs d;
    d.w = pow(g, p_.gamma) * pow(x, one - p_.gamma) / (one - p_.gamma);
    // d/dt g1^gamma = gamma g1^{gamma-1} (a1 g1 - 1)
    d.wt = p_.gamma * (c_.a1 * g - one) / g * d.w;
    d.xwx = (one - p_.gamma) * d.w;
    d.x2wxx = -p_.gamma * (one - p_.gamma) * d.w;
    return d;
  }

  Scalar apply(const Derivs& d, const Scalar& x, const Scalar& pi, const Scalar& c,
               const Scalar& phi) const {
    using std::pow;
    const Scalar one(1), half(0.5);
    const Scalar s = p_.sigma;
    const Scalar drift = p_.mu0 + (p_.mu1 - p_.mu0 + s * phi) * pi;
    const Scalar Lw = d.wt + half * s * s * pi * pi * d.x2wxx + drift * d.xwx - c * d.xwx / x;
    const Scalar f = -p_.delta * d.w + pow(c, one - p_.gamma) / (one - p_.gamma) +
                     (one - p_.gamma) * s * s * phi * phi / (Scalar(2) * p_.theta) * d.w;
    return Lw + f;
  }

  MertonParams<Scalar> p_;
  RiccatiCoeffs<Scalar> c_;
};

// Closed-form time functions of the Heston model: g2(T) = 1, g3(T) = 0.
template <typename Scalar>
class HestonClosedForm {
 public:
  explicit HestonClosedForm(const HestonParams<Scalar>& p)
      : p_(p), c_(derive_heston_coeffs(p)) {}
  HestonClosedForm(const HestonParams<Scalar>& p, const RiccatiCoeffs<Scalar>& c)
      : p_(p), c_(c) {}

  const HestonParams<Scalar>& params() const { return p_; }
  const RiccatiCoeffs<Scalar>& coeffs() const { return c_; }

  Scalar g3(const Scalar& t) const {
    using std::exp;
    using std::expm1;
    detail::check_time(t, p_.T);
    const Scalar tau = p_.T - t;
    if (c_.a4 == Scalar(0)) {
      if (c_.a5 == Scalar(0)) return c_.a6 * tau;
      return c_.a6 / c_.a5 * expm1(c_.a5 * tau);
    }
    if (c_.a6 == Scalar(0)) return Scalar(0);
    if (c_.double_root) {
      const Scalar r = c_.a2;
      return r - r / (Scalar(1) + c_.a4 * r * tau);
    }
    // a2 - a2 (a2 - a3) / (a2 - a3 e^{a4 (a2 - a3)(t - T)}) rewritten without cancellation.
    const Scalar gap = root_gap();
    const Scalar em1 = expm1(-c_.a4 * gap * tau);
    return -c_.a2 * c_.a3 * em1 / (gap - c_.a3 * em1);
  }

  // \int_t^T g3(r) dr
  Scalar g3_integral(const Scalar& t) const {
    using std::expm1;
    using std::isfinite;
    using std::log1p;
    detail::check_time(t, p_.T);
    const Scalar tau = p_.T - t;
    Scalar out;
    if (c_.a4 == Scalar(0)) {
      if (c_.a5 == Scalar(0)) return c_.a6 * tau * tau / Scalar(2);
      out = c_.a6 / c_.a5 * (expm1(c_.a5 * tau) / c_.a5 - tau);
    } else if (c_.a6 == Scalar(0)) {
      out = Scalar(0);
    } else if (c_.double_root) {
      const Scalar r = c_.a2;
      out = r * tau - log1p(c_.a4 * r * tau) / c_.a4;
    } else {
      const Scalar gap = root_gap();
      const Scalar em1 = expm1(-c_.a4 * gap * tau);
      out = c_.a3 * tau - log1p(-c_.a3 * em1 / gap) / c_.a4;
    }
    if (!isfinite(static_cast<double>(out)))
      out = integrate_adaptive<Scalar>([this](const Scalar& r) { return g3(r); }, t, p_.T,
                                       Scalar(1e-12));
    return out;
  }

  Scalar g2(const Scalar& t) const {
    using std::exp;
    return exp(p_.mu0 * (Scalar(1) - p_.gamma) * (p_.T - t) +
               p_.kappa * p_.pbar * g3_integral(t));
  }

  // Right-hand sides of g3' = -(a4 g3^2 + a5 g3 + a6) and g2'/g2 = -(mu0 (1-gamma) + kappa pbar g3).
  Scalar g3_rate(const Scalar& g3v) const {
    return -(c_.a4 * g3v * g3v + c_.a5 * g3v + c_.a6);
  }
  Scalar g2_log_rate(const Scalar& g3v) const {
    return -(p_.mu0 * (Scalar(1) - p_.gamma) + p_.kappa * p_.pbar * g3v);
  }

  // W(t, x, v) = g2(t) e^{g3(t) v} x^{1-gamma} / (1-gamma)
  Scalar value(const Scalar& t, const Scalar& x, const Scalar& v) const {
    using std::exp;
    using std::pow;
    detail::check_positive(x, "wealth");
    if (!(v >= Scalar(0))) throw std::domain_error("variance must be non-negative");
    return g2(t) * exp(g3(t) * v) * pow(x, Scalar(1) - p_.gamma) / (Scalar(1) - p_.gamma);
  }

  Scalar pi_star_at(const Scalar& g3v) const {
    const Scalar one(1);
    const Scalar sum = p_.gamma + p_.theta;
    return (p_.sigma * p_.rho * (one - sum) * g3v + p_.mu2 * (one - p_.gamma)) /
           ((one - p_.gamma) * sum);
  }
  // Normalized distortions phi / sqrt(p).
  Scalar phi1_hat_at(const Scalar& g3v) const {
    const Scalar one(1);
    const Scalar sum = p_.gamma + p_.theta;
    return -(p_.sigma * p_.rho * g3v + p_.mu2 * (one - p_.gamma)) /
           ((one - p_.gamma) * sum) * p_.theta;
  }
  Scalar phi2_hat_at(const Scalar& g3v) const {
    using std::sqrt;
    const Scalar one(1);
    return -p_.sigma * p_.theta * g3v / (one - p_.gamma) * sqrt(one - p_.rho * p_.rho);
  }

  StrategyPoint<Scalar> strategy(const Scalar& t, const Scalar& v) const {
    using std::sqrt;
    if (!(v >= Scalar(0))) throw std::domain_error("variance must be non-negative");
    const Scalar g = g3(t);
    const Scalar sv = sqrt(v);
    return {pi_star_at(g), Scalar(0), phi1_hat_at(g) * sv, phi2_hat_at(g) * sv};
  }

  // L2^{pi,phi} w + f2(w, phi) at (t, x, v) for the closed-form w.
  Scalar hamiltonian(const Scalar& t, const Scalar& x, const Scalar& v, const Scalar& pi,
                     const Scalar& phi1, const Scalar& phi2) const {
    return apply(derivs(t, x, v), v, pi, phi1, phi2);
  }

  HjbiResidual residual(const Scalar& t, const Scalar& x, const Scalar& v, int grid = 201) const;

 private:
  struct Derivs {
    Scalar w, wt, xwx, x2wxx, wp, xwxp, wpp;
  };

  Scalar root_gap() const {
    using std::sqrt;
    // a2 - a3 = sqrt(disc) / a4
    return sqrt(c_.discriminant) / c_.a4;
  }

  Derivs derivs(const Scalar& t, const Scalar& x, const Scalar& v) const {
    const Scalar one(1);
    const Scalar g = g3(t);
    Derivs d;
    d.w = value(t, x, v);
    d.wt = (g2_log_rate(g) + g3_rate(g) * v) * d.w;
    d.xwx = (one - p_.gamma) * d.w;
    d.x2wxx = -p_.gamma * (one - p_.gamma) * d.w;
    d.wp = g * d.w;
    d.xwxp = (one - p_.gamma) * g * d.w;
    d.wpp = g * g * d.w;
    return d;
  }

  Scalar apply(const Derivs& d, const Scalar& v, const Scalar& pi, const Scalar& phi1,
               const Scalar& phi2) const {
    using std::sqrt;
    const Scalar one(1), half(0.5);
    const Scalar s = p_.sigma, r = p_.rho;
    const Scalar sv = sqrt(v);
    const Scalar Lw = d.wt + half * pi * pi * v * d.x2wxx + s * r * pi * v * d.xwxp +
                      half * s * s * v * d.wpp +
                      (p_.mu0 + (p_.mu2 * v + phi1 * sv) * pi) * d.xwx +
                      (p_.kappa * (p_.pbar - v) + (r * phi1 + sqrt(one - r * r) * phi2) * s * sv) * d.wp;
    const Scalar f = (phi1 * phi1 + phi2 * phi2) / (Scalar(2) * p_.theta) * (one - p_.gamma) * d.w;
    return Lw + f;
  }

  HestonParams<Scalar> p_;
  RiccatiCoeffs<Scalar> c_;
};

// Inner Hamiltonian of the variance Riccati reduction, in normalized controls phi/sqrt(p).
template <typename Scalar>
Scalar hamiltonian_F(const Scalar& pi, const Scalar& ph1, const Scalar& ph2, const Scalar& g3t,
                     const HestonParams<Scalar>& p) {
  using std::sqrt;
  const Scalar one(1), half(0.5);
  const Scalar g = p.gamma;
  return half * g * (g - one) * pi * pi + p.sigma * p.rho * (one - g) * g3t * pi +
         (one - g) * p.mu2 * pi + (one - g) * ph1 * pi + p.sigma * p.rho * ph1 * g3t +
         p.sigma * sqrt(one - p.rho * p.rho) * ph2 * g3t +
         (one - g) / (Scalar(2) * p.theta) * (ph1 * ph1 + ph2 * ph2);
}

// Partial derivatives of hamiltonian_F (first-order conditions (a)-(c)).
template <typename Scalar>
Scalar hamiltonian_F_pi(const Scalar& pi, const Scalar& ph1, const Scalar& g3t,
                        const HestonParams<Scalar>& p) {
  const Scalar one(1);
  const Scalar g = p.gamma;
  return -g * (one - g) * pi + p.sigma * p.rho * (one - g) * g3t + (one - g) * p.mu2 +
         (one - g) * ph1;
}
template <typename Scalar>
Scalar hamiltonian_F_phi1(const Scalar& pi, const Scalar& ph1, const Scalar& g3t,
                          const HestonParams<Scalar>& p) {
  const Scalar one(1);
  return (one - p.gamma) * pi + p.sigma * p.rho * g3t + (one - p.gamma) / p.theta * ph1;
}
template <typename Scalar>
Scalar hamiltonian_F_phi2(const Scalar& ph2, const Scalar& g3t, const HestonParams<Scalar>& p) {
  using std::sqrt;
  const Scalar one(1);
  return p.sigma * sqrt(one - p.rho * p.rho) * g3t + (one - p.gamma) / p.theta * ph2;
}

// The three collected coefficients of F(pi*, phi1*, phi2*) as polynomial in g3,
// term by term (seven, six and four summands). They reduce to a4 - sigma^2/2,
// a5 + kappa and a6.
template <typename Scalar>
Scalar frak_F1(const HestonParams<Scalar>& p) {
  const Scalar one(1), two(2);
  const Scalar g = p.gamma, th = p.theta, s2 = p.sigma * p.sigma, r2 = p.rho * p.rho;
  const Scalar sum = g + th, m = one - g - th, og = one - g;
  return -g * s2 * r2 * m * m / (two * og * sum * sum) + s2 * r2 * m / sum -
         s2 * th * r2 * m / (og * sum * sum) - s2 * th * r2 / (og * sum) -
         s2 * th * (one - r2) / og + s2 * th * r2 / (two * og * sum * sum) +
         s2 * th * (one - r2) / (two * og);
}
template <typename Scalar>
Scalar frak_F2(const HestonParams<Scalar>& p) {
  const Scalar one(1), two(2);
  const Scalar g = p.gamma, th = p.theta, srm = p.sigma * p.rho * p.mu2;
  const Scalar sum = g + th, m = one - g - th;
  return -g * srm * m / (sum * sum) + srm * (one - g) / sum + srm * m / sum -
         th * srm * (two - g - th) / (sum * sum) - th * srm / sum + th * srm / (sum * sum);
}
template <typename Scalar>
Scalar frak_F3(const HestonParams<Scalar>& p) {
  const Scalar one(1), two(2);
  const Scalar g = p.gamma, th = p.theta, m2 = p.mu2 * p.mu2;
  const Scalar sum = g + th;
  return -g * (one - g) * m2 / (two * sum * sum) + (one - g) * m2 / sum -
         (one - g) * th * m2 / (sum * sum) + (one - g) * th * m2 / (two * sum * sum);
}

// A-priori bounds on |phi*|/sqrt(p) and |pi*| valid in all four regimes.
template <typename Scalar>
Scalar phi_hat_bound(const HestonParams<Scalar>& p, const RiccatiCoeffs<Scalar>& c) {
  using std::abs;
  const Scalar one(1);
  const Scalar span = (c.a4 == Scalar(0) ? Scalar(0) : abs(c.a3)) + abs(c.a6) / p.kappa;
  const Scalar sum = p.gamma + p.theta;
  return (p.sigma * p.theta * span * (one + sum) + p.theta * abs(p.mu2 * (one - p.gamma))) /
         (abs(one - p.gamma) * sum);
}
template <typename Scalar>
Scalar pi_bound(const HestonParams<Scalar>& p, const RiccatiCoeffs<Scalar>& c) {
  using std::abs;
  const Scalar one(1);
  const Scalar span = (c.a4 == Scalar(0) ? Scalar(0) : abs(c.a3)) + abs(c.a6) / p.kappa;
  const Scalar sum = p.gamma + p.theta;
  return (p.sigma * abs(one - sum) * span + abs(p.mu2 * (one - p.gamma))) /
         (abs(one - p.gamma) * sum);
}

// ---------------------------------------------------------------------------

template <typename Scalar>
HjbiResidual MertonClosedForm<Scalar>::residual(const Scalar& t, const Scalar& x,
                                                int grid) const {
  using std::abs;
  using std::pow;
  if (!(t >= Scalar(0) && t < p_.T)) throw std::domain_error("residual needs t in [0, T)");
  detail::check_positive(x, "wealth");
  const Scalar one(1);
  const Derivs d = derivs(t, x);
  const Scalar pi = pi_star(), phi = phi_star(), c = x / g1(t);
  const Scalar aw = abs(d.w);
  const Scalar s = p_.sigma;

  HjbiResidual r;
  r.value = static_cast<double>(d.w);
  r.pde_residual = static_cast<double>(apply(d, x, pi, c, phi));
  r.foc_pi = static_cast<double>((s * s * pi * d.x2wxx + (p_.mu1 - p_.mu0 + s * phi) * d.xwx) / aw);
  r.foc_phi1 = static_cast<double>((s * pi * d.xwx + (one - p_.gamma) * s * s * phi / p_.theta * d.w) / aw);
  r.foc_c = static_cast<double>((pow(c, -p_.gamma) * x - d.xwx) / aw);

  const Scalar K = p_.K4;
  Scalar gap_u = std::numeric_limits<Scalar>::infinity();
  Scalar gap_v = std::numeric_limits<Scalar>::infinity();
  for (int i = 0; i < grid; ++i) {
    const Scalar u = -K + Scalar(2) * K * Scalar(i) / Scalar(grid - 1);
    const Scalar hv = apply(d, x, pi, c, u) / aw;
    if (hv < gap_v) gap_v = hv;
    for (int j = 0; j < grid; ++j) {
      const Scalar cj = x / K + (K * x - x / K) * Scalar(j) / Scalar(grid - 1);
      const Scalar hu = -apply(d, x, u, cj, phi) / aw;
      if (hu < gap_u) gap_u = hu;
    }
  }
  r.saddle_gap_pi = static_cast<double>(gap_u);
  r.saddle_gap_phi = static_cast<double>(gap_v);
  return r;
}

template <typename Scalar>
HjbiResidual HestonClosedForm<Scalar>::residual(const Scalar& t, const Scalar& x,
                                                const Scalar& v, int grid) const {
  using std::abs;
  using std::sqrt;
  if (!(t >= Scalar(0) && t < p_.T)) throw std::domain_error("residual needs t in [0, T)");
  detail::check_positive(x, "wealth");
  detail::check_positive(v, "variance");
  const Derivs d = derivs(t, x, v);
  const Scalar g = g3(t);
  const Scalar pi = pi_star_at(g), h1 = phi1_hat_at(g), h2 = phi2_hat_at(g);
  const Scalar sv = sqrt(v);
  const Scalar aw = abs(d.w);

  HjbiResidual r;
  r.value = static_cast<double>(d.w);
  r.pde_residual = static_cast<double>(apply(d, v, pi, h1 * sv, h2 * sv));
  r.foc_pi = static_cast<double>(hamiltonian_F_pi(pi, h1, g, p_));
  r.foc_phi1 = static_cast<double>(hamiltonian_F_phi1(pi, h1, g, p_));
  r.foc_phi2 = static_cast<double>(hamiltonian_F_phi2(h2, g, p_));

  Scalar gap_u = std::numeric_limits<Scalar>::infinity();
  Scalar gap_v = std::numeric_limits<Scalar>::infinity();
  const Scalar R = p_.Kphi * sv;
  for (int i = 0; i < grid; ++i) {
    const Scalar u = -p_.Kpi + Scalar(2) * p_.Kpi * Scalar(i) / Scalar(grid - 1);
    const Scalar hu = -apply(d, v, u, h1 * sv, h2 * sv) / aw;
    if (hu < gap_u) gap_u = hu;
    const Scalar f1 = -R + Scalar(2) * R * Scalar(i) / Scalar(grid - 1);
    for (int j = 0; j < grid; ++j) {
      const Scalar f2 = -R + Scalar(2) * R * Scalar(j) / Scalar(grid - 1);
      if (f1 * f1 + f2 * f2 > R * R) continue;
      const Scalar hv = apply(d, v, pi, f1, f2) / aw;
      if (hv < gap_v) gap_v = hv;
    }
  }
  r.saddle_gap_pi = static_cast<double>(gap_u);
  r.saddle_gap_phi = static_cast<double>(gap_v);
  return r;
}

template <typename Scalar>
Scalar value_merton(const Scalar& t, const Scalar& x, const MertonParams<Scalar>& p) {
  return MertonClosedForm<Scalar>(p).value(t, x);
}
template <typename Scalar>
Scalar value_heston(const Scalar& t, const Scalar& x, const Scalar& v,
                    const HestonParams<Scalar>& p) {
  return HestonClosedForm<Scalar>(p).value(t, x, v);
}
template <typename Scalar>
StrategyPoint<Scalar> strategy_merton(const Scalar& t, const Scalar& x,
                                      const MertonParams<Scalar>& p) {
  return MertonClosedForm<Scalar>(p).strategy(t, x);
}
template <typename Scalar>
StrategyPoint<Scalar> strategy_heston(const Scalar& t, const Scalar& v,
                                      const HestonParams<Scalar>& p) {
  return HestonClosedForm<Scalar>(p).strategy(t, v);
}

}  // namespace robctl
