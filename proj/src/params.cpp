#include "robctl/params.hpp"

#include <cmath>
#include <sstream>

#include "robctl/closedform.hpp"

namespace robctl {

std::vector<std::string> ValidationReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.passed) out.push_back(c.name + (c.detail.empty() ? "" : ": " + c.detail));
  return out;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void add(ValidationReport& r, std::string name, bool ok, std::string detail = {},
         bool fatal = false) {
  if (!ok && fatal) r.fatal = true;
  r.checks.push_back({std::move(name), ok, std::move(detail)});
}

void positive(ValidationReport& r, const char* name, double v) {
  add(r, std::string(name) + ">0", v > 0 && std::isfinite(v), name + std::string("=") + fmt(v),
      true);
}

}  // namespace

ValidationReport validate(const MertonParamsd& p, int n_time) {
  ValidationReport r;
  add(r, "gamma>0,gamma!=1", p.gamma > 0 && p.gamma != 1, "gamma=" + fmt(p.gamma), true);
  positive(r, "sigma", p.sigma);
  positive(r, "theta", p.theta);
  positive(r, "delta", p.delta);
  positive(r, "K4", p.K4);
  positive(r, "T", p.T);
  add(r, "mu finite", std::isfinite(p.mu0) && std::isfinite(p.mu1), {}, true);
  if (r.fatal) return r;

  const MertonClosedForm<double> cf(p);
  const int n = std::max(n_time, 2);
  double gmin = INFINITY, gmax = 0;
  for (int i = 0; i < n; ++i) {
    const double g = cf.g1(p.T * i / (n - 1));
    gmin = std::min(gmin, g);
    gmax = std::max(gmax, g);
  }
  const double pi = std::abs(cf.pi_star()), phi = std::abs(cf.phi_star());
  add(r, "K4>=|pi*|", p.K4 >= pi, "|pi*|=" + fmt(pi));
  add(r, "K4>=|phi*|", p.K4 >= phi, "|phi*|=" + fmt(phi));
  add(r, "K4>=max c*/x", p.K4 >= 1.0 / gmin, "max c*/x=" + fmt(1.0 / gmin));
  add(r, "1/K4<=min c*/x", p.K4 >= gmax, "min c*/x=" + fmt(1.0 / gmax));
  return r;
}

ValidationReport validate(const HestonParamsd& p, int n_time) {
  ValidationReport r;
  add(r, "gamma>0,gamma!=1", p.gamma > 0 && p.gamma != 1, "gamma=" + fmt(p.gamma), true);
  positive(r, "kappa", p.kappa);
  positive(r, "pbar", p.pbar);
  positive(r, "sigma", p.sigma);
  positive(r, "theta", p.theta);
  positive(r, "Kpi", p.Kpi);
  positive(r, "Kphi", p.Kphi);
  positive(r, "T", p.T);
  positive(r, "K6", p.K6);
  add(r, "|rho|<=1", std::abs(p.rho) <= 1, "rho=" + fmt(p.rho), true);
  add(r, "mu finite", std::isfinite(p.mu0) && std::isfinite(p.mu2), {}, true);
  if (r.fatal) return r;

  const double feller = 2 * p.kappa * p.pbar, s2 = p.sigma * p.sigma;
  add(r, "feller", feller >= s2, "2 kappa pbar=" + fmt(feller) + " sigma^2=" + fmt(s2));
  const double kreq =
      std::max(s2 / (2 * p.pbar), 2 * p.sigma * std::abs(p.mu2) / (p.gamma + p.theta));
  add(r, "kappa condition", p.kappa >= kreq, "kappa=" + fmt(p.kappa) + " required=" + fmt(kreq));

  RiccatiCoeffsd c;
  try {
    // Feller is reported above; the coefficients themselves do not depend on it.
    HestonParamsd q = p;
    q.pbar = std::max(p.pbar, s2 / (2 * p.kappa));
    c = derive_heston_coeffs(q, 1 - p.gamma, 2 * p.K6, 0.0);
    add(r, "riccati discriminant>=0", true, "disc=" + fmt(c.discriminant));
  } catch (const std::exception& e) {
    add(r, "riccati discriminant>=0", false, e.what());
    return r;
  }

  const HestonClosedForm<double> cf(p, c);
  const int n = std::max(n_time, 2);
  double pimax = 0, phimax = 0;
  for (int i = 0; i < n; ++i) {
    const double g = cf.g3(p.T * i / (n - 1));
    pimax = std::max(pimax, std::abs(cf.pi_star_at(g)));
    phimax = std::max(phimax, std::hypot(cf.phi1_hat_at(g), cf.phi2_hat_at(g)));
  }
  add(r, "Kpi>=|pi*|", p.Kpi >= pimax, "max|pi*|=" + fmt(pimax));
  add(r, "Kphi>=|phi*|/sqrt(p)", p.Kphi >= phimax, "max|phi*|/sqrt(p)=" + fmt(phimax));
  return r;
}

}  // namespace robctl
