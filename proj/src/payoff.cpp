#include "robctl/payoff.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "robctl/closedform.hpp"

namespace robctl {

McEstimate summarize(const ArrayXd& samples, std::uint64_t seed) {
  const Index n = samples.size();
  if (n < 100) throw std::invalid_argument("estimates need at least 100 observations");
  double sum = 0;
  for (Index i = 0; i < n; ++i) sum += samples[i];
  const double mean = sum / double(n);
  double ss = 0;
  for (Index i = 0; i < n; ++i) ss += (samples[i] - mean) * (samples[i] - mean);
  return {mean, std::sqrt(ss / double(n - 1) / double(n)), n, seed};
}

ValueCallback zero_value() {
  return {[](double, const ArrayXd& x, const ArrayXd&) { return ArrayXd::Zero(x.size()).eval(); },
          "zero"};
}

ValueCallback merton_value(const MertonParamsd& p) {
  auto cf = std::make_shared<MertonClosedForm<double>>(p);
  const double g = p.gamma;
  return {[cf, g](double t, const ArrayXd& x, const ArrayXd&) -> ArrayXd {
            return std::pow(cf->g1(t), g) * x.pow(1 - g) / (1 - g);
          },
          "merton closed form"};
}

ValueCallback heston_value(const HestonParamsd& p) {
  auto cf = std::make_shared<HestonClosedForm<double>>(p);
  const double g = p.gamma;
  return {[cf, g](double t, const ArrayXd& x, const ArrayXd& v) -> ArrayXd {
            return cf->g2(t) * (cf->g3(t) * v).exp() * x.pow(1 - g) / (1 - g);
          },
          "heston closed form"};
}

namespace {

void check_horizon(const PathGrid& g, double T) {
  g.check(T);
  if (std::abs(g.node(g.steps()) - T) > 1e-12 * std::max(1.0, T))
    throw std::invalid_argument("payoff grid must end at the horizon T");
}

ArrayXd eval_value(const ValueCallback& w, double t, const ArrayXd& x, const ArrayXd& p) {
  ArrayXd out = w.evaluator(t, x, p);
  if (out.size() != x.size() || !out.allFinite()) {
    std::ostringstream os;
    os << "value callback '" << w.label << "' returned non-finite values at t=" << t;
    throw std::runtime_error(os.str());
  }
  return out;
}

ArrayXd pair_average(const ArrayXd& v, bool antithetic) {
  if (!antithetic) return v;
  const Index n = v.size() / 2;
  ArrayXd out(n);
  for (Index i = 0; i < n; ++i) out[i] = 0.5 * (v[2 * i] + v[2 * i + 1]);
  return out;
}

// Integrates running(b) over the block's grid and adds terminal(b).
template <typename Block, typename Running, typename Terminal>
ArrayXd integrate_block(Block& b, Scheme scheme, Running&& running, Terminal&& terminal) {
  ArrayXd acc = ArrayXd::Zero(b.x().size());
  ArrayXd f = running(b);
  while (!b.done()) {
    const double h = b.dt();
    b.advance();
    ArrayXd fn = running(b);
    if (scheme == Scheme::Heun)
      acc += 0.5 * (f + fn) * h;
    else
      acc += f * h;
    f = std::move(fn);
  }
  return acc + terminal(b);
}

}  // namespace

ArrayXd sample_J1(double x, const FeedbackStrategy& s, const FeedbackAmbiguity& a,
                  const ValueCallback& w, const PathGrid& g, const MertonParamsd& p,
                  const SimOptions& opt) {
  check_horizon(g, p.T);
  const double t = g.node(0), gm = 1 - p.gamma;
  const double ent = gm * p.sigma * p.sigma / (2 * p.theta);
  ArrayXd out(g.n_paths);
  parallel_blocks(g.n_paths, opt.block, opt.threads, [&](Index first, Index count) {
    MertonBlock b(g, x, s, a, p, first, count, opt.scheme);
    auto running = [&](const MertonBlock& blk) -> ArrayXd {
      const ArrayXd zero = ArrayXd::Zero(count);
      const double disc = std::exp(-p.delta * (blk.t() - t));
      return disc * (blk.c().pow(gm) / gm +
                     ent * blk.phi().square() * eval_value(w, blk.t(), blk.x(), zero));
    };
    auto terminal = [&](const MertonBlock& blk) -> ArrayXd {
      return std::exp(-p.delta * (p.T - t)) * blk.x().pow(gm) / gm;
    };
    out.segment(first, count) = integrate_block(b, opt.scheme, running, terminal);
  });
  return pair_average(out, g.antithetic);
}

ArrayXd sample_J2(double x, double v, const FeedbackStrategy& s, const FeedbackAmbiguity& a,
                  const ValueCallback& w, const PathGrid& g, const HestonParamsd& p,
                  const SimOptions& opt) {
  check_horizon(g, p.T);
  const double gm = 1 - p.gamma;
  const double ent = gm / (2 * p.theta);
  ArrayXd out(g.n_paths);
  parallel_blocks(g.n_paths, opt.block, opt.threads, [&](Index first, Index count) {
    HestonBlock b(g, x, v, s, a, p, first, count, opt.scheme);
    auto running = [&](const HestonBlock& blk) -> ArrayXd {
      return ent * (blk.phi1().square() + blk.phi2().square()) *
             eval_value(w, blk.t(), blk.x(), blk.p());
    };
    auto terminal = [&](const HestonBlock& blk) -> ArrayXd { return blk.x().pow(gm) / gm; };
    out.segment(first, count) = integrate_block(b, opt.scheme, running, terminal);
  });
  return pair_average(out, g.antithetic);
}

McEstimate estimate_J1(double t, double x, const FeedbackStrategy& s, const FeedbackAmbiguity& a,
                       const ValueCallback& w, const PathGrid& g, const MertonParamsd& p,
                       const SimOptions& opt) {
  if (std::abs(t - g.node(0)) > 1e-12) throw std::invalid_argument("grid must start at t");
  return summarize(sample_J1(x, s, a, w, g, p, opt), g.seed);
}

McEstimate estimate_J2(double t, double x, double v, const FeedbackStrategy& s,
                       const FeedbackAmbiguity& a, const ValueCallback& w, const PathGrid& g,
                       const HestonParamsd& p, const SimOptions& opt) {
  if (std::abs(t - g.node(0)) > 1e-12) throw std::invalid_argument("grid must start at t");
  return summarize(sample_J2(x, v, s, a, w, g, p, opt), g.seed);
}

bool SaddleReport::ok() const {
  for (const auto& e : entries)
    if (!e.skipped && e.violation) return false;
  return true;
}

std::vector<Perturbation> default_perturbations() {
  return {{-0.2, 1.0}, {0.1, 1.0}, {0.2, 1.0}, {0.0, 0.0}, {0.0, 0.5}, {0.0, 1.5}};
}

namespace {

FeedbackStrategy shift_pi(const FeedbackStrategy& s, double dpi) {
  FeedbackStrategy out = s;
  const Feedback base = s.pi;
  out.pi = [base, dpi](double t, const ArrayXd& x, const ArrayXd& p) -> ArrayXd {
    return base(t, x, p) + dpi;
  };
  std::ostringstream os;
  os << s.label << " shifted by " << dpi;
  out.label = os.str();
  return out;
}

FeedbackAmbiguity scale_phi(const FeedbackAmbiguity& a, double k) {
  FeedbackAmbiguity out = a;
  const Feedback f1 = a.phi1, f2 = a.phi2;
  out.phi1 = [f1, k](double t, const ArrayXd& x, const ArrayXd& p) -> ArrayXd {
    return k * f1(t, x, p);
  };
  out.phi2 = [f2, k](double t, const ArrayXd& x, const ArrayXd& p) -> ArrayXd {
    return k * f2(t, x, p);
  };
  std::ostringstream os;
  os << a.label << " scaled by " << k;
  out.label = os.str();
  return out;
}

// admissible(dpi, scale) -> empty string if admissible, else the reason.
template <typename Sampler, typename Admissible>
SaddleReport probe(const std::vector<Perturbation>& perts, const PathGrid& g,
                   const FeedbackStrategy& s, const FeedbackAmbiguity& a, Sampler&& sample,
                   Admissible&& admissible) {
  SaddleReport rep;
  const ArrayXd base = sample(s, a);
  rep.baseline = summarize(base, g.seed);
  rep.max_pi_side = rep.baseline.mean;
  rep.min_phi_side = rep.baseline.mean;
  auto run = [&](SaddleEntry e, const FeedbackStrategy& ss, const FeedbackAmbiguity& aa) {
    e.note = admissible(e.dpi, e.phi_scale);
    if (!e.note.empty()) {
      e.skipped = true;
      rep.entries.push_back(e);
      return;
    }
    const ArrayXd val = sample(ss, aa);
    e.estimate = summarize(val, g.seed);
    const McEstimate d = summarize(val - base, g.seed);
    e.diff = d.mean;
    e.se_diff = d.std_error;
    if (e.kind == "pi") {
      e.violation = e.diff > 3 * e.se_diff;
      rep.max_pi_side = std::max(rep.max_pi_side, e.estimate.mean);
    } else {
      e.violation = e.diff < -3 * e.se_diff;
      rep.min_phi_side = std::min(rep.min_phi_side, e.estimate.mean);
    }
    rep.entries.push_back(e);
  };
  for (const auto& pt : perts) {
    if (pt.dpi == 0 && pt.phi_scale == 1) {
      SaddleEntry e;
      e.kind = "identity";
      e.estimate = rep.baseline;
      rep.entries.push_back(e);
      continue;
    }
    if (pt.dpi != 0) {
      SaddleEntry e;
      e.kind = "pi";
      e.dpi = pt.dpi;
      run(e, shift_pi(s, pt.dpi), a);
    }
    if (pt.phi_scale != 1) {
      SaddleEntry e;
      e.kind = "phi";
      e.phi_scale = pt.phi_scale;
      run(e, s, scale_phi(a, pt.phi_scale));
    }
  }
  return rep;
}

}  // namespace

SaddleReport saddle_probe(double x, const MertonParamsd& p, const PathGrid& g,
                          const std::vector<Perturbation>& perturbations, const SimOptions& opt) {
  const MertonClosedForm<double> cf(p);
  const auto s = merton_optimal_strategy(p);
  const auto a = merton_optimal_ambiguity(p);
  const auto w = merton_value(p);
  auto sample = [&](const FeedbackStrategy& ss, const FeedbackAmbiguity& aa) {
    return sample_J1(x, ss, aa, w, g, p, opt);
  };
  auto admissible = [&](double dpi, double k) -> std::string {
    if (std::abs(cf.pi_star() + dpi) > p.K4) return "pi leaves [-K4, K4]";
    if (std::abs(k * cf.phi_star()) > p.K4) return "phi leaves [-K4, K4]";
    return {};
  };
  SaddleReport rep = probe(perturbations, g, s, a, sample, admissible);
  rep.closed_form = cf.value(g.node(0), x);
  return rep;
}

SaddleReport saddle_probe(double x, double v, const HestonParamsd& p, const PathGrid& g,
                          const std::vector<Perturbation>& perturbations, const SimOptions& opt) {
  const HestonClosedForm<double> cf(p);
  const auto s = heston_optimal_strategy(p);
  const auto a = heston_optimal_ambiguity(p);
  const auto w = heston_value(p);
  auto sample = [&](const FeedbackStrategy& ss, const FeedbackAmbiguity& aa) {
    return sample_J2(x, v, ss, aa, w, g, p, opt);
  };
  auto admissible = [&](double dpi, double k) -> std::string {
    for (int i = 0; i <= g.steps(); ++i) {
      const double g3 = cf.g3(g.node(i));
      if (std::abs(cf.pi_star_at(g3) + dpi) > p.Kpi) return "pi leaves [-Kpi, Kpi]";
      if (std::abs(k) * std::hypot(cf.phi1_hat_at(g3), cf.phi2_hat_at(g3)) > p.Kphi)
        return "phi leaves the Kphi sqrt(P) ball";
    }
    return {};
  };
  SaddleReport rep = probe(perturbations, g, s, a, sample, admissible);
  rep.closed_form = cf.value(g.node(0), x, v);
  return rep;
}

}  // namespace robctl
