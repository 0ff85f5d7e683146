#include "robctl/hjbi.hpp"

#include <cmath>
#include <stdexcept>

#include "robctl/closedform.hpp"

namespace robctl {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double ValueSurface::weighted_norm(Index r0, Index r1, Index c0, Index c1) const {
  double out = 0;
  for (Index i = r0; i < r1; ++i)
    for (Index j = c0; j < c1; ++j) out = std::max(out, std::abs(values(i, j)) / weight(i, j));
  return out;
}

double weighted_distance(const ValueSurface& a, const ValueSurface& b, Index r0, Index r1,
                         Index c0, Index c1) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
    throw std::invalid_argument("surfaces live on different grids");
  double out = 0;
  for (Index i = r0; i < r1; ++i)
    for (Index j = c0; j < c1; ++j)
      out = std::max(out, std::abs(a.values(i, j) - b.values(i, j)) / a.weight(i, j));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Inner {
  double value, f1, f2;
};

// min over |phi| <= K of a.phi + beta |phi|^2
Inner inner_min(double ax, double ay, double beta, double K) {
  const double r = std::hypot(ax, ay);
  if (beta > 0 && r <= 2 * beta * K) {
    return {-r * r / (4 * beta), -ax / (2 * beta), -ay / (2 * beta)};
  }
  if (r > 0) return {-K * r + beta * K * K, -K * ax / r, -K * ay / r};
  if (beta < 0) return {beta * K * K, K, 0};
  return {0, 0, 0};
}

}  // namespace

NodeControl solve_inner_saddle(const InnerSaddle& s, int grid) {
  auto outer = [&](double pi, Inner& in) {
    in = inner_min(s.a1 * pi + s.a0, s.a2, s.beta, s.Kphi);
    return s.q * pi * pi + s.l * pi + in.value;
  };
  auto finish = [&](double pi) {
    Inner in;
    const double v = outer(pi, in);
    return NodeControl{pi, 0, in.f1, in.f2, v};
  };

  // Stationary point of the smooth branch (inner minimizer inside the ball).
  if (s.beta > 0) {
    const double denom = -2 * s.q + s.a1 * s.a1 / (2 * s.beta);
    if (denom > 0) {
      const double pi = (s.l - s.a1 * s.a0 / (2 * s.beta)) / denom;
      const double r = std::hypot(s.a1 * pi + s.a0, s.a2);
      if (std::abs(pi) <= s.Kpi && r <= 2 * s.beta * s.Kphi) return finish(pi);
    }
  }

  auto golden = [&](double lo, double hi) {
    const double g = 0.5 * (std::sqrt(5.0) - 1);
    Inner in;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = outer(x1, in), f2 = outer(x2, in);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1 + std::abs(lo) + std::abs(hi)); ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = outer(x2, in);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = outer(x1, in);
      }
    }
    return 0.5 * (lo + hi);
  };

  double best = 0;
  if (s.q <= 0) {
    // Concave in pi: the inner value is a concave nonincreasing function of |a(pi)|.
    best = golden(-s.Kpi, s.Kpi);
  } else {
    const int n = std::max(grid, 3);
    const double h = 2 * s.Kpi / (n - 1);
    Inner in;
    double fbest = -INFINITY;
    int ib = 0;
    for (int i = 0; i < n; ++i) {
      const double f = outer(-s.Kpi + i * h, in);
      if (f > fbest) {
        fbest = f;
        ib = i;
      }
    }
    best = golden(std::max(-s.Kpi, -s.Kpi + (ib - 1) * h), std::min(s.Kpi, -s.Kpi + (ib + 1) * h));
  }
  Inner in;
  for (double e : {-s.Kpi, s.Kpi})
    if (outer(e, in) > outer(best, in)) best = e;
  return finish(best);
}

// ---------------------------------------------------------------------------

ReducedModel::ReducedModel(const MertonParamsd& p) : merton_(p) { check_gamma(p.gamma); }
ReducedModel::ReducedModel(const HestonParamsd& p) : heston_(p) { check_gamma(p.gamma); }

ReducedModel reduce_model(const MertonParamsd& p) { return ReducedModel(p); }
ReducedModel reduce_model(const HestonParamsd& p) { return ReducedModel(p); }

double ReducedModel::T() const { return heston_ ? heston_->T : merton_->T; }
double ReducedModel::gamma() const { return heston_ ? heston_->gamma : merton_->gamma; }

double ReducedModel::vmax() const {
  if (!heston_) return 0;
  const auto& p = *heston_;
  return p.pbar + 10 * p.sigma * std::sqrt(p.pbar / (2 * p.kappa));
}

NodeControl ReducedModel::optimize(double v, double V, double Vv, double J, int grid) const {
  const double gm = 1 - gamma();
  if (merton_) {
    const auto& p = *merton_;
    InnerSaddle s;
    s.q = -0.5 * p.gamma * p.sigma * p.sigma * gm * V;
    s.l = gm * V * (p.mu1 - p.mu0);
    s.a1 = gm * V * p.sigma;
    s.beta = gm * p.sigma * p.sigma * J / (2 * p.theta);
    s.Kpi = s.Kphi = p.K4;
    NodeControl c = solve_inner_saddle(s, grid);
    const double k = gm * V;
    double ch = k > 0 ? std::pow(k, -1 / p.gamma) : p.K4;
    ch = std::clamp(ch, 1 / p.K4, p.K4);
    c.c = ch;
    c.value += -k * ch + std::pow(ch, gm) / gm;
    return c;
  }
  const auto& p = *heston_;
  InnerSaddle s;
  s.q = -0.5 * p.gamma * gm * V;
  s.l = gm * (p.mu2 * V + p.sigma * p.rho * Vv);
  s.a1 = gm * V;
  s.a0 = p.sigma * p.rho * Vv;
  s.a2 = p.sigma * std::sqrt(std::max(0.0, 1 - p.rho * p.rho)) * Vv;
  s.beta = gm * J / (2 * p.theta);
  s.Kpi = p.Kpi;
  s.Kphi = p.Kphi;
  NodeControl c = solve_inner_saddle(s, grid);
  c.value *= v;
  return c;
}

double ReducedModel::residual(double v, double V, double Vt, double Vv, double Vvv, double J,
                              int grid) const {
  const double gm = 1 - gamma();
  const NodeControl c = optimize(v, V, Vv, J, grid);
  if (merton_) {
    const auto& p = *merton_;
    return Vt - p.delta * V + gm * p.mu0 * V + c.value;
  }
  const auto& p = *heston_;
  return Vt + 0.5 * p.sigma * p.sigma * v * Vvv + p.kappa * (p.pbar - v) * Vv +
         p.mu0 * gm * V + c.value;
}

double ReducedModel::closed_value(double t, double v) const {
  const double gm = 1 - gamma();
  if (merton_) return std::pow(MertonClosedForm<double>(*merton_).g1(t), merton_->gamma) / gm;
  const HestonClosedForm<double> cf(*heston_);
  return cf.g2(t) * std::exp(cf.g3(t) * v) / gm;
}

double ReducedModel::boundary_slope(double t) const {
  if (!heston_) return 0;
  return HestonClosedForm<double>(*heston_).g3(t);
}

double ReducedModel::weight(double s, double v) const {
  if (!heston_) return 1.0;
  const auto& p = *heston_;
  const double b = 2 * p.K6, varrho = 1 - p.gamma;
  const double g1 = std::exp(-std::abs(p.kappa * p.pbar * b + p.mu0 * varrho) * s);
  const double g2 = b - 4 * std::sqrt(s);
  return 2 * p.K6 * g1 * std::exp(g2 * v);
}

// ---------------------------------------------------------------------------

int slab_steps(const ReducedModel& m, const SlabSpec& spec) {
  if (spec.nt < 1) throw std::invalid_argument("nt must be positive");
  double eps = spec.slab_width;
  if (!(eps > 0)) {
    double N;
    if (m.is_heston()) {
      N = double(derive_heston_coeffs(m.heston()).slab_count);
    } else {
      const auto& p = m.merton();
      const double K1 = p.delta, g = 1 - p.gamma, k2 = p.K4 * p.K4;
      N = std::ceil((K1 + 1) * (K1 + 1) +
                    90000 * g * g * k2 * k2 * p.T * std::exp(p.T) / (p.theta * p.theta));
    }
    eps = m.T() / N;
  }
  if (eps > m.T() * (1 + 1e-12)) throw std::invalid_argument("slab width exceeds T");
  const double dt = m.T() / spec.nt;
  return int(std::clamp(std::lround(eps / dt), 1L, long(spec.nt)));
}

ValueSurface make_surface(const ReducedModel& m, const SlabSpec& spec) {
  if (m.is_heston() && spec.nv < 2) throw std::invalid_argument("nv must be at least 2");
  ValueSurface s;
  const int nt = spec.nt;
  s.times.resize(std::size_t(nt) + 1);
  for (int j = 0; j <= nt; ++j) s.times[std::size_t(j)] = j == nt ? m.T() : m.T() * j / nt;
  if (m.is_heston()) {
    s.space.resize(std::size_t(spec.nv) + 1);
    for (int i = 0; i <= spec.nv; ++i) s.space[std::size_t(i)] = m.vmax() * i / spec.nv;
  }
  const Index nc = std::max<Index>(1, Index(s.space.size()));
  s.values = MatrixXd::Zero(nt + 1, nc);
  s.weight.resize(nt + 1, nc);
  const int ms = slab_steps(m, spec);
  for (int j = 0; j <= nt; ++j) {
    const int k = j == nt ? 0 : (nt - 1 - j) / ms;  // slab index counted from T
    const int r0 = std::max(0, nt - (k + 1) * ms);
    const double sl = s.times[std::size_t(j)] - s.times[std::size_t(r0)];
    for (Index i = 0; i < nc; ++i)
      s.weight(j, i) = m.weight(sl, s.space.empty() ? 0.0 : s.space[std::size_t(i)]);
  }
  return s;
}

ValueSurface closed_form_surface(const ReducedModel& m, const SlabSpec& spec) {
  ValueSurface s = make_surface(m, spec);
  for (Index j = 0; j < s.values.rows(); ++j)
    for (Index i = 0; i < s.values.cols(); ++i)
      s.values(j, i) =
          m.closed_value(s.times[std::size_t(j)], s.space.empty() ? 0.0 : s.space[std::size_t(i)]);
  return s;
}

ValueSurface constant_surface(const ReducedModel& m, const SlabSpec& spec, double value) {
  ValueSurface s = make_surface(m, spec);
  s.values.setConstant(value);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

// Thomas algorithm: lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
VectorXd solve_tridiagonal(const VectorXd& lower, const VectorXd& diag, const VectorXd& upper,
                           const VectorXd& rhs) {
  const Index n = diag.size();
  VectorXd c(n), d(n), x(n);
  double den = diag[0];
  if (den == 0) throw std::runtime_error("singular tridiagonal system");
  c[0] = upper[0] / den;
  d[0] = rhs[0] / den;
  for (Index i = 1; i < n; ++i) {
    den = diag[i] - lower[i] * c[i - 1];
    if (den == 0 || !std::isfinite(den)) throw std::runtime_error("singular tridiagonal system");
    c[i] = i + 1 < n ? upper[i] / den : 0.0;
    d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
  }
  x[n - 1] = d[n - 1];
  for (Index i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

}  // namespace

ValueSurface solve_standard_slab(const ValueSurface& J, const SlabSpec& spec,
                                 const ReducedModel& m, Index r0, Index r1,
                                 const VectorXd& terminal,
                                 std::vector<std::vector<NodeControl>>* controls) {
  if (!(0 <= r0 && r0 < r1 && r1 <= J.nt())) throw std::invalid_argument("bad slab rows");
  if (terminal.size() != J.values.cols()) throw std::invalid_argument("terminal row size");
  ValueSurface out = J;
  out.values.row(r1) = terminal.transpose();
  const double gm = 1 - m.gamma();
  if (controls && Index(controls->size()) < J.nt() + 1) controls->resize(std::size_t(J.nt()) + 1);

  for (Index n = r1 - 1; n >= r0; --n) {
    const double t = J.times[std::size_t(n)];
    const double h = J.times[std::size_t(n) + 1] - t;
    if (!m.is_heston()) {
      const auto& p = m.merton();
      const double Vn1 = out.values(n + 1, 0), Jn = J.values(n, 0);
      const NodeControl c = m.optimize(0, Vn1, 0, Jn, spec.control_grid);
      const double B = -p.delta + gm * (p.mu0 + (p.mu1 - p.mu0 + p.sigma * c.phi1) * c.pi - c.c -
                                        0.5 * p.gamma * p.sigma * p.sigma * c.pi * c.pi);
      const double src = std::pow(c.c, gm) / gm +
                         gm * p.sigma * p.sigma * c.phi1 * c.phi1 * Jn / (2 * p.theta);
      const double den = 1 - h * B;
      if (!(den > 0)) throw std::runtime_error("time step too large for the implicit update");
      out.values(n, 0) = (Vn1 + h * src) / den;
      if (controls) (*controls)[std::size_t(n)] = {c};
      continue;
    }

    const auto& p = m.heston();
    const Index N = J.values.cols() - 1;
    const double dv = J.space[1] - J.space[0];
    const double rc = std::sqrt(std::max(0.0, 1 - p.rho * p.rho));
    const double g_next = m.boundary_slope(J.times[std::size_t(n) + 1]);
    const double g_now = m.boundary_slope(t);
    VectorXd lo = VectorXd::Zero(N + 1), di = VectorXd::Zero(N + 1), up = VectorXd::Zero(N + 1),
             rhs(N + 1);
    std::vector<NodeControl> row(std::size_t(N) + 1);
    for (Index i = 0; i <= N; ++i) {
      const double v = J.space[std::size_t(i)];
      const double V = out.values(n + 1, i);
      double Vv;
      if (i == 0)
        Vv = (out.values(n + 1, 1) - V) / dv;
      else if (i == N)
        Vv = g_next * V;
      else
        Vv = (out.values(n + 1, i + 1) - out.values(n + 1, i - 1)) / (2 * dv);
      const double Jn = J.values(n, i);
      const NodeControl c = m.optimize(v, V, Vv, Jn, spec.control_grid);
      row[std::size_t(i)] = c;

      const double A = p.kappa * (p.pbar - v) + p.sigma * v * (p.rho * c.phi1 + rc * c.phi2) +
                       p.sigma * p.rho * gm * c.pi * v;
      const double B =
          p.mu0 * gm + v * gm * (-0.5 * p.gamma * c.pi * c.pi + p.mu2 * c.pi + c.phi1 * c.pi);
      const double S = v * gm * (c.phi1 * c.phi1 + c.phi2 * c.phi2) * Jn / (2 * p.theta);
      const double d = 0.5 * p.sigma * p.sigma * v;
      rhs[i] = V + h * S;

      // Row of -h (d D2 + A D1 + B) plus identity.
      double cm = 0, c0 = 0, cp = 0;  // coefficients of V[i-1], V[i], V[i+1] in the operator
      if (i == N) {
        // ghost node V[N+1] = V[N-1] + 2 dv g V[N]
        cm = 2 * d / (dv * dv);
        c0 = -2 * d / (dv * dv) + 2 * d * g_now / dv + A * g_now + B;
      } else {
        cm = i > 0 ? d / (dv * dv) : 0;
        cp = i > 0 ? d / (dv * dv) : 0;
        c0 = i > 0 ? -2 * d / (dv * dv) + B : B;
        if (i > 0 && std::abs(A) * dv <= 2 * d) {
          cm -= A / (2 * dv);
          cp += A / (2 * dv);
        } else if (A >= 0 || i == 0) {
          cp += A / dv;
          c0 -= A / dv;
        } else {
          cm -= A / dv;
          c0 += A / dv;
        }
      }
      lo[i] = -h * cm;
      di[i] = 1 - h * c0;
      up[i] = -h * cp;
    }
    out.values.row(n) = solve_tridiagonal(lo, di, up, rhs).transpose();
    if (!out.values.row(n).allFinite()) throw std::runtime_error("non-finite slab solution");
    if (controls) (*controls)[std::size_t(n)] = std::move(row);
  }
  return out;
}

FixedPointResult fixed_point(const SlabSpec& spec, const ReducedModel& m, const ValueSurface& J0) {
  if (!(spec.tol > 0)) throw std::invalid_argument("tol must be positive");
  const Index nt = J0.nt();
  if (nt != spec.nt) throw std::invalid_argument("J0 grid does not match the slab spec");
  FixedPointResult res;
  res.slab_steps = slab_steps(m, spec);
  res.surface = J0;
  res.surface.values.row(nt).setConstant(m.terminal());
  res.controls.resize(std::size_t(nt) + 1);
  const Index nc = J0.values.cols();

  int slab = 0;
  for (Index r1 = nt; r1 > 0; r1 -= res.slab_steps, ++slab) {
    const Index r0 = std::max<Index>(0, r1 - res.slab_steps);
    const VectorXd terminal = res.surface.values.row(r1).transpose();
    ValueSurface Jk = res.surface;  // rows [r0, r1) still hold J0
    bool converged = false;
    for (int it = 1; it <= spec.max_outer_iters; ++it) {
      std::vector<std::vector<NodeControl>> ctl;
      ValueSurface W = solve_standard_slab(Jk, spec, m, r0, r1, terminal, &ctl);
      const double delta = weighted_distance(W, Jk, r0, r1, 0, nc);
      res.history.push_back({slab, it, delta});
      Jk = std::move(W);
      for (Index r = r0; r < r1; ++r) res.controls[std::size_t(r)] = ctl[std::size_t(r)];
      if (delta <= spec.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw std::runtime_error("fixed point: max_outer_iters exceeded");
    res.surface.values.middleRows(r0, r1 - r0) = Jk.values.middleRows(r0, r1 - r0);
  }
  res.slabs = slab;
  return res;
}

double contraction_ratio(const ValueSurface& J1, const ValueSurface& J2, const SlabSpec& spec,
                         const ReducedModel& m, int slab) {
  const Index nt = J1.nt();
  const int ms = slab_steps(m, spec);
  const Index r1 = nt - Index(slab) * ms;
  if (slab < 0 || r1 <= 0) throw std::invalid_argument("slab index out of range");
  const Index r0 = std::max<Index>(0, r1 - ms);
  const Index nc = J1.values.cols();
  const double den = weighted_distance(J1, J2, r0, r1, 0, nc);
  if (!(den > 0)) throw std::invalid_argument("contraction ratio needs J1 != J2 on the slab");
  VectorXd terminal(nc);
  for (Index i = 0; i < nc; ++i)
    terminal[i] = m.closed_value(J1.times[std::size_t(r1)],
                                 J1.space.empty() ? 0.0 : J1.space[std::size_t(i)]);
  const ValueSurface W1 = solve_standard_slab(J1, spec, m, r0, r1, terminal);
  const ValueSurface W2 = solve_standard_slab(J2, spec, m, r0, r1, terminal);
  return weighted_distance(W1, W2, r0, r1, 0, nc) / den;
}

double closed_form_error(const ValueSurface& s, const ReducedModel& m) {
  ValueSurface cf = s;
  for (Index j = 0; j < s.values.rows(); ++j)
    for (Index i = 0; i < s.values.cols(); ++i)
      cf.values(j, i) =
          m.closed_value(s.times[std::size_t(j)], s.space.empty() ? 0.0 : s.space[std::size_t(i)]);
  const Index nc = s.values.cols();
  const Index c0 = nc > 1 ? 1 : 0, c1 = nc > 1 ? nc - 1 : 1;
  const Index r1 = s.nt();
  return weighted_distance(cf, s, 0, r1, c0, c1) / cf.weighted_norm(0, r1, c0, c1);
}

}  // namespace robctl
