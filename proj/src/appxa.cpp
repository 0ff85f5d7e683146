#include "robctl/appxa.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "robctl/payoff.hpp"

namespace robctl {

double SuperSolutionSpec::gbar1(double s, const HestonParamsd& p) const {
  return std::exp(-std::abs(p.kappa * p.pbar * b + p.mu0 * varrho) * s);
}
double SuperSolutionSpec::gbar2(double s) const { return b - 4 * std::sqrt(s); }
double SuperSolutionSpec::wbar(double s, double x, double v, const HestonParamsd& p) const {
  return gbar1(s, p) * std::pow(x, varrho) * std::exp(gbar2(s) * v);
}

SuperSolutionSpec value_space_family(const HestonParamsd& p) {
  return {1 - p.gamma, 2 * p.K6, 0};
}

namespace {

double abar1(double varrho, const HestonParamsd& p) {
  return std::abs(p.rho * varrho) * p.Kpi +
         (std::abs(p.rho) + std::sqrt(1 - p.rho * p.rho)) * p.Kphi;
}
double abar2(double varrho, const HestonParamsd& p) {
  return std::max(varrho * varrho - varrho, 0.0) * p.Kpi * p.Kpi +
         2 * std::abs(varrho * p.mu2) * p.Kpi + 2 * std::abs(varrho) * p.Kphi * p.Kpi;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

double delta1(const SuperSolutionSpec& s, const HestonParamsd& p) {
  const double y = p.kappa / p.sigma - abar1(s.varrho, p);
  return y * y - (abar2(s.varrho, p) + 2 * s.k);
}

std::pair<double, double> global_b_window(const SuperSolutionSpec& s, const HestonParamsd& p) {
  const double y = p.kappa / p.sigma - abar1(s.varrho, p);
  if (y < std::sqrt(abar2(s.varrho, p)))
    throw std::invalid_argument("kappa/sigma < abar1 + sqrt(abar2)");
  if (s.k < 0) throw std::invalid_argument("k must be non-negative");
  const double d = delta1(s, p);
  if (d < 0) throw std::invalid_argument("k too large: 2k > (kappa/sigma - abar1)^2 - abar2");
  return {y - std::sqrt(d), y + std::sqrt(d)};
}

std::pair<double, double> nonambiguity_b_window(double varrho, const HestonParamsd& p) {
  const double y = p.kappa / p.sigma - std::abs(p.rho * varrho);
  const double a2 = std::max(varrho * varrho - varrho, 0.0) + 2 * std::abs(varrho * p.mu2);
  if (!(y > std::sqrt(a2)))
    throw std::invalid_argument("kappa/sigma must exceed |rho varrho| + sqrt(a2)");
  const double d = std::sqrt(y * y - a2);
  return {(y - d) / p.sigma, (y + d) / p.sigma};
}

double max_k(const SuperSolutionSpec& s, const HestonParamsd& p) {
  const double y = p.kappa / p.sigma - abar1(s.varrho, p);
  const double sb = p.sigma * s.b;
  return std::max(0.0, y * sb - 0.5 * sb * sb - 0.5 * abar2(s.varrho, p));
}

bool BoundReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return !checks.empty();
}

WorstCase worst_case_controls(double varrho, double g, const HestonParamsd& p, int grid) {
  const double rc = std::sqrt(std::max(0.0, 1 - p.rho * p.rho));
  const double a2 = p.sigma * rc * g;
  auto f = [&](double pi) {
    const double a1 = varrho * pi + p.sigma * p.rho * g;
    return 0.5 * varrho * (varrho - 1) * pi * pi + (p.sigma * p.rho * varrho * g + varrho * p.mu2) * pi +
           p.Kphi * std::hypot(a1, a2);
  };
  const int n = std::max(grid, 2);
  double best = -p.Kpi, fb = f(best);
  for (int i = 1; i < n; ++i) {
    const double pi = -p.Kpi + 2 * p.Kpi * i / (n - 1);
    const double v = f(pi);
    if (v > fb) {
      fb = v;
      best = pi;
    }
  }
  WorstCase w;
  w.pi = best;
  const double a1 = varrho * best + p.sigma * p.rho * g;
  const double r = std::hypot(a1, a2);
  if (r > 0) {
    w.phi1_hat = p.Kphi * a1 / r;
    w.phi2_hat = p.Kphi * a2 / r;
  } else {
    w.phi1_hat = p.Kphi;
  }
  return w;
}

namespace {

// Worst-case feedback whose ballast g may depend on time.
template <typename G>
std::pair<FeedbackStrategy, FeedbackAmbiguity> worst_feedback(double varrho, G gfun,
                                                              const HestonParamsd& p) {
  FeedbackStrategy s;
  s.pi = [=](double t, const ArrayXd& x, const ArrayXd&) -> ArrayXd {
    return ArrayXd::Constant(x.size(), worst_case_controls(varrho, gfun(t), p).pi);
  };
  s.label = "worst-case pi";
  FeedbackAmbiguity a;
  a.phi1 = [=](double t, const ArrayXd&, const ArrayXd& v) -> ArrayXd {
    return worst_case_controls(varrho, gfun(t), p).phi1_hat * v.sqrt();
  };
  a.phi2 = [=](double t, const ArrayXd&, const ArrayXd& v) -> ArrayXd {
    return worst_case_controls(varrho, gfun(t), p).phi2_hat * v.sqrt();
  };
  a.label = "worst-case phi on the Kphi sqrt(P) sphere";
  return {s, a};
}

BoundCheck one_sided(std::string label, const McEstimate& e, double bound) {
  BoundCheck c;
  c.label = std::move(label);
  c.estimate = e.mean;
  c.std_error = e.std_error;
  c.bound = bound;
  c.passed = std::isfinite(e.mean) && e.mean + 3 * e.std_error <= bound;
  return c;
}

void check_mc(const McConfig& mc) {
  if (mc.n_paths < 100) throw std::invalid_argument("n_paths must be at least 100");
  if (mc.n_steps < 1) throw std::invalid_argument("n_steps must be positive");
}

}  // namespace

BoundReport verify_local(const SuperSolutionSpec& s, const HestonParamsd& p, double t, double x,
                         double v, const McConfig& mc) {
  check_mc(mc);
  if (!(s.b > 0)) throw std::invalid_argument("b must be positive");
  const double dt = local_step(p, s.varrho, s.b);
  if (!(t >= 0 && t <= dt)) throw std::invalid_argument("t must lie in [0, dt]");
  BoundReport r;
  r.name = "local";
  r.n_paths = mc.n_paths;
  r.seed = mc.seed;
  r.note = "dt=" + num(dt) + " varrho=" + num(s.varrho) + " b=" + num(s.b);
  BoundCheck floor;
  floor.label = "gbar2(dt) >= b/2";
  floor.estimate = s.gbar2(dt);
  floor.bound = s.b / 2;
  floor.passed = s.gbar2(dt) >= s.b / 2;
  const std::string label = "E[sup wbar + int P/sqrt(s) wbar] <= 10 wbar(t,x,p)";
  if (t == dt) {  // empty interval: the left side is wbar itself
    McEstimate e;
    e.mean = s.wbar(t, x, v, p);
    e.n_paths = mc.n_paths;
    e.seed = mc.seed;
    r.checks = {one_sided(label, e, 10 * e.mean), floor};
    return r;
  }

  // Uniform in u = sqrt(s): ds/sqrt(s) = 2 du removes the singularity at s = 0.
  std::vector<double> times(std::size_t(mc.n_steps) + 1);
  const double u0 = std::sqrt(t), u1 = std::sqrt(dt);
  for (int k = 0; k <= mc.n_steps; ++k) {
    const double u = u0 + (u1 - u0) * k / mc.n_steps;
    times[std::size_t(k)] = k == mc.n_steps ? dt : u * u;
  }
  times[0] = t;
  PathGrid g = explicit_grid(times, mc.n_paths, mc.seed);
  HestonParamsd q = p;
  q.T = std::max(p.T, dt);
  g.check(q.T);

  const auto fb = worst_feedback(s.varrho, [s](double tt) { return s.gbar2(tt); }, p);
  ArrayXd out(mc.n_paths);
  parallel_blocks(mc.n_paths, mc.sim.block, mc.sim.threads, [&](Index first, Index count) {
    HestonBlock blk(g, x, v, fb.first, fb.second, q, first, count, mc.sim.scheme);
    ArrayXd sup = ArrayXd::Constant(count, -INFINITY), integral = ArrayXd::Zero(count);
    while (true) {
      const double tt = blk.t();
      const ArrayXd w = s.gbar1(tt, p) * blk.x().pow(s.varrho) * (s.gbar2(tt) * blk.p()).exp();
      sup = sup.max(w);
      if (blk.done()) break;
      const int k = blk.step();
      const double du = std::sqrt(times[std::size_t(k) + 1]) - std::sqrt(times[std::size_t(k)]);
      integral += 2 * blk.p() * w * du;
      blk.advance();
    }
    out.segment(first, count) = sup + integral;
  });

  r.checks = {one_sided(label, summarize(out, mc.seed), 10 * s.wbar(t, x, v, p)), floor};
  return r;
}

BoundReport verify_exp_moment(const HestonParamsd& p, double t, double v, const McConfig& mc) {
  check_mc(mc);
  const double hdt = novikov_step(p);
  if (!(t >= 0 && t < hdt)) throw std::invalid_argument("t must lie in [0, hat dt)");
  PathGrid g;
  g.t0 = t;
  g.t1 = hdt;
  g.n_steps = mc.n_steps;
  g.n_paths = mc.n_paths;
  g.seed = mc.seed;
  HestonParamsd q = p;
  q.T = std::max(p.T, hdt);

  // Variance drift is largest with phi on the sphere along (rho, sqrt(1-rho^2)).
  const double rc = std::sqrt(std::max(0.0, 1 - p.rho * p.rho));
  FeedbackStrategy s{constant_feedback(0.0), constant_feedback(0.0), "pi = 0"};
  FeedbackAmbiguity a;
  a.phi1 = [&p](double, const ArrayXd&, const ArrayXd& vv) -> ArrayXd {
    return p.Kphi * p.rho * vv.sqrt();
  };
  a.phi2 = [&p, rc](double, const ArrayXd&, const ArrayXd& vv) -> ArrayXd {
    return p.Kphi * rc * vv.sqrt();
  };
  a.label = "phi pushing P upward";

  ArrayXd logs(mc.n_paths);
  parallel_blocks(mc.n_paths, mc.sim.block, mc.sim.threads, [&](Index first, Index count) {
    HestonBlock blk(g, 1.0, v, s, a, q, first, count, mc.sim.scheme);
    ArrayXd integral = ArrayXd::Zero(count);
    ArrayXd prev = blk.p();
    while (!blk.done()) {
      const double h = blk.dt();
      blk.advance();
      integral += 0.5 * (prev + blk.p()) * h;
      prev = blk.p();
    }
    logs.segment(first, count) = 0.5 * p.Kphi * p.Kphi * integral;
  });

  // log-domain mean: E[e^L] = e^m E[e^{L-m}]
  const double m = logs.maxCoeff();
  const McEstimate scaled = summarize((logs - m).exp(), mc.seed);
  McEstimate e = scaled;
  e.mean = std::exp(m) * scaled.mean;
  e.std_error = std::exp(m) * scaled.std_error;

  BoundReport r;
  r.name = "expmoment";
  r.n_paths = mc.n_paths;
  r.seed = mc.seed;
  BoundCheck c = one_sided("E[exp(Kphi^2/2 int P ds)] <= 18 e^p", e, 18 * std::exp(v));
  if (!std::isfinite(e.mean)) c.label += " (overflow: log-mean " + num(m + std::log(scaled.mean)) + ")";
  r.checks.push_back(c);
  r.note = "hat dt=" + num(hdt) + " log-mean=" + num(m + std::log(scaled.mean));
  return r;
}

namespace {

struct MomentSamples {
  ArrayXd node_mean, node_se;  // per grid node: mean of y_s and SE of (y_s + k I)
  ArrayXd sup;                 // per path: max_s y_s
  ArrayXd integral;            // per path: int P y ds
};

// y_s = X_s^varrho e^{b P_s} along the paths, with node-wise statistics.
MomentSamples moment_paths(const PathGrid& g, double x, double v, double varrho, double b,
                           double k, const FeedbackStrategy& s, const FeedbackAmbiguity& a,
                           const HestonParamsd& p, const McConfig& mc) {
  const int m = g.steps();
  const Index n = g.n_paths;
  const Index block = std::max<Index>(2, mc.sim.block + mc.sim.block % 2);
  const Index nb = (n + block - 1) / block;
  // per block, per node: sum y, sum (y + kI), sum (y + kI)^2
  std::vector<Eigen::ArrayXXd> part(static_cast<std::size_t>(nb));
  MomentSamples out;
  out.sup.resize(n);
  out.integral.resize(n);
  parallel_blocks(n, block, mc.sim.threads, [&](Index first, Index count) {
    HestonBlock blk(g, x, v, s, a, p, first, count, mc.sim.scheme);
    Eigen::ArrayXXd Y(count, m + 1);
    ArrayXd integral = ArrayXd::Zero(count);
    ArrayXd f_prev;
    while (true) {
      const ArrayXd y = blk.x().pow(varrho) * (b * blk.p()).exp();
      Y.col(blk.step()) = y;
      const ArrayXd f = blk.p() * y;
      if (blk.step() > 0) integral += 0.5 * (f_prev + f) * (g.node(blk.step()) - g.node(blk.step() - 1));
      f_prev = f;
      if (blk.done()) break;
      blk.advance();
    }
    Eigen::ArrayXXd acc(3, m + 1);
    for (int j = 0; j <= m; ++j) {
      const ArrayXd z = Y.col(j) + k * integral;
      acc(0, j) = Y.col(j).sum();
      acc(1, j) = z.sum();
      acc(2, j) = z.square().sum();
    }
    part[std::size_t(first / block)] = acc;
    out.sup.segment(first, count) = Y.rowwise().maxCoeff();
    out.integral.segment(first, count) = integral;
  });
  Eigen::ArrayXXd tot = Eigen::ArrayXXd::Zero(3, m + 1);
  for (const auto& a2 : part) tot += a2;
  const double nn = double(n);
  out.node_mean = tot.row(0).transpose() / nn;
  const ArrayXd zm = tot.row(1).transpose() / nn;
  const ArrayXd var = ((tot.row(2).transpose() / nn - zm.square()) * nn / (nn - 1)).max(0.0);
  out.node_se = (var / nn).sqrt();
  return out;
}

}  // namespace

BoundReport verify_global(const SuperSolutionSpec& s, const HestonParamsd& p, double t, double x,
                          double v, const McConfig& mc) {
  check_mc(mc);
  const auto win = global_b_window(s, p);
  const double sb = p.sigma * s.b;
  if (sb < win.first || sb > win.second)
    throw std::invalid_argument("sigma b = " + num(sb) + " outside [" + num(win.first) + ", " +
                                num(win.second) + "]");
  if (!(t >= 0 && t < p.T)) throw std::invalid_argument("t must lie in [0, T)");
  PathGrid g;
  g.t0 = t;
  g.t1 = p.T;
  g.n_steps = mc.n_steps;
  g.n_paths = mc.n_paths;
  g.seed = mc.seed;

  const double bb = s.b;
  const auto fb = worst_feedback(s.varrho, [bb](double) { return bb; }, p);
  const MomentSamples ms = moment_paths(g, x, v, s.varrho, s.b, s.k, fb.first, fb.second, p, mc);

  Index arg = 0;
  ms.node_mean.maxCoeff(&arg);
  McEstimate lhs1;
  const McEstimate integral = summarize(ms.integral, mc.seed);
  lhs1.mean = ms.node_mean[arg] + s.k * integral.mean;
  lhs1.std_error = ms.node_se[arg];
  lhs1.n_paths = mc.n_paths;
  lhs1.seed = mc.seed;
  const double c = std::abs(p.kappa * p.pbar * s.b + p.mu0 * s.varrho);
  const double scale = std::exp(c * (p.T - t)) * std::pow(x, s.varrho) * std::exp(s.b * v);

  BoundReport r;
  r.name = "global";
  r.n_paths = mc.n_paths;
  r.seed = mc.seed;
  r.checks.push_back(one_sided("sup_s E[X^varrho e^{bP}] + k E[int P X^varrho e^{bP}] <= 5 e^{cT} x^varrho e^{bp}",
                               lhs1, 5 * scale));
  if (s.k > 0) {
    const double A = std::pow(std::abs(s.varrho) * p.Kpi + p.sigma * std::abs(p.rho) * s.b, 2) +
                     p.sigma * p.sigma * (1 - p.rho * p.rho) * s.b * s.b;
    r.checks.push_back(one_sided("E[sup_s X^varrho e^{bP}] <= 3 [k + A] e^{cT}/k x^varrho e^{bp}",
                                 summarize(ms.sup, mc.seed), 3 * (s.k + A) / s.k * scale));
  }
  r.note = "sigma b window [" + num(win.first) + ", " + num(win.second) + "], argmax t=" +
           num(g.node(int(arg)));
  if (s.k == 0) r.note += "; second inequality needs k > 0";
  return r;
}

BoundReport verify_nonambiguity(const HestonParamsd& p, double varrho, double b, double t,
                                double S, double v, const McConfig& mc) {
  check_mc(mc);
  const auto win = nonambiguity_b_window(varrho, p);
  if (!(b > win.first && b < win.second))
    throw std::invalid_argument("b = " + num(b) + " outside (" + num(win.first) + ", " +
                                num(win.second) + ")");
  if (!(t >= 0 && t < p.T)) throw std::invalid_argument("t must lie in [0, T)");
  // Part (2) with Kphi = 0, Kpi = 1: the stock is the wealth of pi = 1.
  HestonParamsd q = p;
  q.Kphi = 0;
  q.Kpi = 1;
  const SuperSolutionSpec s{varrho, b, 0};
  SuperSolutionSpec sk = s;
  sk.k = max_k(s, q);
  if (!(sk.k > 0)) throw std::invalid_argument("no admissible k > 0 for this b");

  PathGrid g;
  g.t0 = t;
  g.t1 = p.T;
  g.n_steps = mc.n_steps;
  g.n_paths = mc.n_paths;
  g.seed = mc.seed;
  FeedbackStrategy st{constant_feedback(1.0), constant_feedback(0.0), "pi = 1 (stock)"};
  FeedbackAmbiguity am{constant_feedback(0.0), constant_feedback(0.0), "no ambiguity"};
  const MomentSamples ms = moment_paths(g, S, v, varrho, b, 0.0, st, am, q, mc);

  const double c = std::abs(p.kappa * p.pbar * b + p.mu0 * varrho);
  const double ec = std::exp(c * (p.T - t));
  const double A = std::pow(std::abs(varrho) + p.sigma * std::abs(p.rho) * b, 2) +
                   p.sigma * p.sigma * (1 - p.rho * p.rho) * b * b;
  const double C = 3 * (1 + A / sk.k) * ec + 5 * ec / sk.k;

  BoundReport r;
  r.name = "nonambiguity";
  r.n_paths = mc.n_paths;
  r.seed = mc.seed;
  r.checks.push_back(one_sided("E[sup S^varrho e^{bP} + int P S^varrho e^{bP}] <= C S^varrho e^{bp}",
                               summarize(ms.sup + ms.integral, mc.seed),
                               C * std::pow(S, varrho) * std::exp(b * v)));
  r.note = "b window (" + num(win.first) + ", " + num(win.second) + "), k=" + num(sk.k) +
           ", C=" + num(C);
  return r;
}

SignReport supersolution_sign(const SuperSolutionSpec& s, const HestonParamsd& p, int ns, int np,
                              int npi) {
  SignReport r;
  r.dt = local_step(p, s.varrho, s.b);
  r.gbar2_floor = s.gbar2(r.dt) >= s.b / 2;
  r.max_value = -INFINITY;
  const double pmax = p.pbar + 10 * p.sigma * std::sqrt(p.pbar / (2 * p.kappa));
  const double rc = std::sqrt(std::max(0.0, 1 - p.rho * p.rho));
  const double c = std::abs(p.kappa * p.pbar * s.b + p.mu0 * s.varrho);
  const double vr = s.varrho;
  for (int i = 1; i <= ns; ++i) {
    const double ss = r.dt * i / ns;
    const double g = s.gbar2(ss), rs = std::sqrt(ss);
    const double head = -c + p.mu0 * vr + p.kappa * p.pbar * g;
    double best = -INFINITY;
    for (int j = 0; j < npi; ++j) {
      const double pi = -p.Kpi + 2 * p.Kpi * j / std::max(1, npi - 1);
      const double a1 = vr * pi + p.sigma * p.rho * g, a2 = p.sigma * rc * g;
      const double br = -2 / rs + 0.5 * vr * (vr - 1) * pi * pi + p.sigma * p.rho * vr * g * pi +
                        vr * p.mu2 * pi + 0.5 * p.sigma * p.sigma * g * g - p.kappa * g + 1 / rs +
                        p.Kphi * std::hypot(a1, a2);
      best = std::max(best, br);
    }
    for (int j = 1; j <= np; ++j) {
      const double pp = pmax * j / np;
      const double val = head + pp * best;
      if (val > r.max_value) {
        r.max_value = val;
        r.argmax_s = ss;
        r.argmax_p = pp;
      }
    }
  }
  return r;
}

}  // namespace robctl
