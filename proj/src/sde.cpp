#include "robctl/sde.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "robctl/closedform.hpp"
#include "robctl/rng.hpp"

namespace robctl {

Feedback constant_feedback(double value) {
  return [value](double, const ArrayXd& x, const ArrayXd&) {
    return ArrayXd::Constant(x.size(), value);
  };
}

FeedbackStrategy merton_optimal_strategy(const MertonParamsd& p) {
  auto cf = std::make_shared<MertonClosedForm<double>>(p);
  FeedbackStrategy s;
  s.pi = constant_feedback(cf->pi_star());
  s.c = [cf](double t, const ArrayXd& x, const ArrayXd&) -> ArrayXd {
    return x / cf->g1(t);
  };
  s.label = "merton optimal (pi*, c*)";
  return s;
}

FeedbackAmbiguity merton_optimal_ambiguity(const MertonParamsd& p) {
  const MertonClosedForm<double> cf(p);
  return {constant_feedback(cf.phi_star()), constant_feedback(0.0), "merton optimal phi*"};
}

FeedbackStrategy heston_optimal_strategy(const HestonParamsd& p) {
  auto cf = std::make_shared<HestonClosedForm<double>>(p);
  FeedbackStrategy s;
  s.pi = [cf](double t, const ArrayXd& x, const ArrayXd&) -> ArrayXd {
    return ArrayXd::Constant(x.size(), cf->pi_star_at(cf->g3(t)));
  };
  s.c = constant_feedback(0.0);
  s.label = "heston optimal pi*";
  return s;
}

FeedbackAmbiguity heston_optimal_ambiguity(const HestonParamsd& p) {
  auto cf = std::make_shared<HestonClosedForm<double>>(p);
  FeedbackAmbiguity a;
  a.phi1 = [cf](double t, const ArrayXd&, const ArrayXd& v) -> ArrayXd {
    return cf->phi1_hat_at(cf->g3(t)) * v.sqrt();
  };
  a.phi2 = [cf](double t, const ArrayXd&, const ArrayXd& v) -> ArrayXd {
    return cf->phi2_hat_at(cf->g3(t)) * v.sqrt();
  };
  a.label = "heston optimal (phi1*, phi2*)";
  return a;
}

const char* to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "heun"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "euler") return Scheme::Euler;
  if (s == "heun") return Scheme::Heun;
  throw std::invalid_argument("unknown scheme '" + s + "' (euler|heun)");
}

double PathGrid::node(int k) const {
  if (!times.empty()) return times[std::size_t(k)];
  if (k == n_steps) return t1;
  return t0 + (t1 - t0) * double(k) / double(n_steps);
}

std::vector<double> PathGrid::nodes() const {
  std::vector<double> out(std::size_t(steps()) + 1);
  for (int k = 0; k <= steps(); ++k) out[std::size_t(k)] = node(k);
  return out;
}

void PathGrid::check(double T) const {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be positive");
  if (antithetic && n_paths % 2) throw std::invalid_argument("antithetic needs an even n_paths");
  if (times.empty()) {
    if (n_steps < 1) throw std::invalid_argument("n_steps must be positive");
    if (!(t0 >= 0 && t0 < t1 && t1 <= T * (1 + 1e-12)))
      throw std::invalid_argument("grid needs 0 <= t0 < t1 <= T");
  } else {
    if (times.size() < 2) throw std::invalid_argument("explicit grid needs two nodes");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw std::invalid_argument("grid nodes must increase");
    if (!(times.front() >= 0 && times.back() <= T * (1 + 1e-12)))
      throw std::invalid_argument("grid nodes outside [0, T]");
  }
}

PathGrid explicit_grid(std::vector<double> times, Index n_paths, std::uint64_t seed) {
  PathGrid g;
  g.t0 = times.front();
  g.t1 = times.back();
  g.n_steps = int(times.size()) - 1;
  g.n_paths = n_paths;
  g.seed = seed;
  g.times = std::move(times);
  return g;
}

namespace {

void draw(const PathGrid& g, Index first, int step, ArrayXd& z1, ArrayXd* z2) {
  for (Index j = 0; j < z1.size(); ++j) {
    const Index i = first + j;
    const std::uint64_t path = g.antithetic ? std::uint64_t(i / 2) : std::uint64_t(i);
    const double sign = (g.antithetic && (i % 2)) ? -1.0 : 1.0;
    const NormalPair n = normal_pair(g.seed, 0, path, std::uint32_t(step));
    z1[j] = sign * n.z1;
    if (z2) (*z2)[j] = sign * n.z2;
  }
}

void require_finite(const ArrayXd& a, const char* what) {
  if (!a.allFinite()) throw std::runtime_error(std::string("non-finite ") + what);
}

ArrayXd call(const Feedback& f, double t, const ArrayXd& x, const ArrayXd& p, const char* what) {
  if (!f) return ArrayXd::Zero(x.size());
  ArrayXd out = f(t, x, p);
  if (out.size() != x.size()) throw std::runtime_error(std::string(what) + ": wrong size");
  require_finite(out, what);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

MertonBlock::MertonBlock(const PathGrid& g, double x0, const FeedbackStrategy& s,
                         const FeedbackAmbiguity& a, const MertonParamsd& p, Index first,
                         Index count, Scheme scheme)
    : grid_(g), s_(s), a_(a), p_(p), first_(first), scheme_(scheme) {
  if (!(x0 > 0)) throw std::invalid_argument("x0 must be positive");
  x_ = ArrayXd::Constant(count, x0);
  zero_ = ArrayXd::Zero(count);
  z_ = ArrayXd::Zero(count);
  eval_controls();
}

void MertonBlock::eval_controls() {
  const double t = grid_.node(k_);
  pi_ = call(s_.pi, t, x_, zero_, "pi");
  c_ = call(s_.c, t, x_, zero_, "c");
  phi_ = call(a_.phi1, t, x_, zero_, "phi");
  const double K = p_.K4, tol = 1e-12;
  for (Index j = 0; j < x_.size(); ++j) {
    const bool bad = std::abs(pi_[j]) > K * (1 + tol) || std::abs(phi_[j]) > K * (1 + tol) ||
                     c_[j] < x_[j] / K * (1 - tol) || c_[j] > K * x_[j] * (1 + tol);
    diag_.control_violations += bad;
  }
}

ArrayXd MertonBlock::log_drift(const ArrayXd& x, const ArrayXd& pi, const ArrayXd& c,
                               const ArrayXd& phi) const {
  const double s = p_.sigma;
  return p_.mu0 + (p_.mu1 - p_.mu0 + s * phi) * pi - c / x - 0.5 * s * s * pi.square();
}

void MertonBlock::advance() {
  if (done()) throw std::logic_error("advance past terminal node");
  const double h = dt(), sh = std::sqrt(h);
  draw(grid_, first_, k_, z_, nullptr);
  const ArrayXd diff = p_.sigma * pi_ * sh * z_;
  ArrayXd drift = log_drift(x_, pi_, c_, phi_);
  if (scheme_ == Scheme::Heun) {
    const ArrayXd xp = x_ * (drift * h + diff).exp();
    const double tn = grid_.node(k_ + 1);
    const ArrayXd pin = call(s_.pi, tn, xp, zero_, "pi");
    const ArrayXd cn = call(s_.c, tn, xp, zero_, "c");
    const ArrayXd phn = call(a_.phi1, tn, xp, zero_, "phi");
    drift = 0.5 * (drift + log_drift(xp, pin, cn, phn));
  }
  x_ *= (drift * h + diff).exp();
  require_finite(x_, "wealth");
  diag_.total_steps += x_.size();
  ++k_;
  eval_controls();
}

// ---------------------------------------------------------------------------

HestonBlock::HestonBlock(const PathGrid& g, double x0, double v0, const FeedbackStrategy& s,
                         const FeedbackAmbiguity& a, const HestonParamsd& p, Index first,
                         Index count, Scheme scheme)
    : grid_(g), s_(s), a_(a), p_(p), first_(first), scheme_(scheme) {
  if (!(x0 > 0)) throw std::invalid_argument("x0 must be positive");
  if (!(v0 >= 0)) throw std::invalid_argument("v0 must be non-negative");
  x_ = ArrayXd::Constant(count, x0);
  praw_ = ArrayXd::Constant(count, v0);
  pplus_ = praw_;
  z1_ = ArrayXd::Zero(count);
  z2_ = ArrayXd::Zero(count);
  eval_controls();
}

void HestonBlock::eval_controls() {
  const double t = grid_.node(k_);
  pi_ = call(s_.pi, t, x_, pplus_, "pi");
  phi1_ = call(a_.phi1, t, x_, pplus_, "phi1");
  phi2_ = call(a_.phi2, t, x_, pplus_, "phi2");
  const double tol = 1e-12;
  for (Index j = 0; j < x_.size(); ++j) {
    const double excess = std::hypot(phi1_[j], phi2_[j]) - p_.Kphi * std::sqrt(pplus_[j]);
    diag_.max_ball_excess = std::max(diag_.max_ball_excess, excess);
    const bool bad = std::abs(pi_[j]) > p_.Kpi * (1 + tol) || excess > tol * (1 + p_.Kphi);
    diag_.control_violations += bad;
  }
}

void HestonBlock::advance() {
  if (done()) throw std::logic_error("advance past terminal node");
  const double h = dt(), sh = std::sqrt(h);
  const double r = p_.rho, rc = std::sqrt(std::max(0.0, 1 - r * r)), s = p_.sigma;
  draw(grid_, first_, k_, z1_, &z2_);

  const ArrayXd sq = pplus_.sqrt();
  const ArrayXd vdrift = p_.kappa * (p_.pbar - pplus_) + (r * phi1_ + rc * phi2_) * s * sq;
  praw_ += vdrift * h + s * sq * sh * (r * z1_ + rc * z2_);
  for (Index j = 0; j < praw_.size(); ++j) diag_.truncation_steps += praw_[j] < 0;
  const ArrayXd pnext = praw_.max(0.0);

  const ArrayXd diff = pi_ * sq * sh * z1_;
  ArrayXd drift = p_.mu0 + (p_.mu2 * pplus_ + phi1_ * sq) * pi_ - 0.5 * pi_.square() * pplus_;
  if (scheme_ == Scheme::Heun) {
    const ArrayXd xp = x_ * (drift * h + diff).exp();
    const double tn = grid_.node(k_ + 1);
    const ArrayXd pin = call(s_.pi, tn, xp, pnext, "pi");
    const ArrayXd f1n = call(a_.phi1, tn, xp, pnext, "phi1");
    drift = 0.5 * (drift + p_.mu0 + (p_.mu2 * pnext + f1n * pnext.sqrt()) * pin -
                   0.5 * pin.square() * pnext);
  }
  x_ *= (drift * h + diff).exp();
  require_finite(x_, "wealth");
  require_finite(praw_, "variance");
  pplus_ = pnext;
  diag_.total_steps += x_.size();
  ++k_;
  eval_controls();
}

// ---------------------------------------------------------------------------

void parallel_blocks(Index n, Index block, int threads,
                     const std::function<void(Index, Index)>& fn) {
  if (block < 2) block = 2;
  block += block % 2;  // keeps antithetic pairs inside one block
  const Index nblocks = (n + block - 1) / block;
  const int nt = int(std::max<Index>(1, std::min<Index>(threads < 1 ? 1 : threads, nblocks)));
  std::atomic<Index> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const Index b = next.fetch_add(1);
      if (b >= nblocks) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (err) return;
      }
      try {
        const Index first = b * block;
        fn(first, std::min(block, n - first));
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);
}

namespace {

void merge(SimDiagnostics& into, const SimDiagnostics& d) {
  into.control_violations += d.control_violations;
  into.truncation_steps += d.truncation_steps;
  into.total_steps += d.total_steps;
  into.max_ball_excess = std::max(into.max_ball_excess, d.max_ball_excess);
}

template <typename Block, typename Store>
SimDiagnostics run_blocks(const PathGrid& g, const SimOptions& opt, Store&& store,
                          const std::function<Block(Index, Index)>& make) {
  const Index block = std::max<Index>(2, opt.block + opt.block % 2);
  const Index nblocks = (g.n_paths + block - 1) / block;
  std::vector<SimDiagnostics> diags(static_cast<std::size_t>(nblocks));
  parallel_blocks(g.n_paths, block, opt.threads, [&](Index first, Index count) {
    Block b = make(first, count);
    while (true) {
      store(b, first, count);
      if (b.done()) break;
      b.advance();
    }
    diags[std::size_t(first / block)] = b.diagnostics();
  });
  SimDiagnostics out;
  for (const auto& d : diags) merge(out, d);
  return out;
}

}  // namespace

PathBundle simulate_merton(const PathGrid& g, double x0, const FeedbackStrategy& s,
                           const FeedbackAmbiguity& a, const MertonParamsd& p,
                           const SimOptions& opt) {
  g.check(p.T);
  PathBundle out;
  out.grid = g;
  out.controls_applied = s.label + "; " + a.label + "; scheme " + to_string(opt.scheme);
  const Index n = g.n_paths;
  const int m = g.steps();
  if (opt.store) {
    out.wealth.resize(n, m + 1);
    out.brownian1.resize(n, m);
    out.pi.resize(n, m);
    out.c.resize(n, m);
    out.phi1.resize(n, m);
  }
  auto store = [&](const MertonBlock& b, Index first, Index count) {
    if (!opt.store) return;
    const int k = b.step();
    out.wealth.col(k).segment(first, count) = b.x().matrix();
    if (k > 0) {
      const double h = g.node(k) - g.node(k - 1);
      out.brownian1.col(k - 1).segment(first, count) = (std::sqrt(h) * b.z()).matrix();
    }
    if (k < m) {
      out.pi.col(k).segment(first, count) = b.pi().matrix();
      out.c.col(k).segment(first, count) = b.c().matrix();
      out.phi1.col(k).segment(first, count) = b.phi().matrix();
    }
  };
  out.diagnostics = run_blocks<MertonBlock>(g, opt, store, [&](Index first, Index count) {
    return MertonBlock(g, x0, s, a, p, first, count, opt.scheme);
  });
  return out;
}

PathBundle simulate_heston(const PathGrid& g, double x0, double v0, const FeedbackStrategy& s,
                           const FeedbackAmbiguity& a, const HestonParamsd& p,
                           const SimOptions& opt) {
  g.check(p.T);
  PathBundle out;
  out.grid = g;
  out.controls_applied = s.label + "; " + a.label + "; scheme " + to_string(opt.scheme);
  const Index n = g.n_paths;
  const int m = g.steps();
  if (opt.store) {
    out.wealth.resize(n, m + 1);
    out.variance.resize(n, m + 1);
    out.brownian1.resize(n, m);
    out.brownian2.resize(n, m);
    out.pi.resize(n, m);
    out.phi1.resize(n, m);
    out.phi2.resize(n, m);
  }
  auto store = [&](const HestonBlock& b, Index first, Index count) {
    if (!opt.store) return;
    const int k = b.step();
    out.wealth.col(k).segment(first, count) = b.x().matrix();
    out.variance.col(k).segment(first, count) = b.p().matrix();
    if (k > 0) {
      const double sh = std::sqrt(g.node(k) - g.node(k - 1));
      out.brownian1.col(k - 1).segment(first, count) = (sh * b.z1()).matrix();
      out.brownian2.col(k - 1).segment(first, count) = (sh * b.z2()).matrix();
    }
    if (k < m) {
      out.pi.col(k).segment(first, count) = b.pi().matrix();
      out.phi1.col(k).segment(first, count) = b.phi1().matrix();
      out.phi2.col(k).segment(first, count) = b.phi2().matrix();
    }
  };
  out.diagnostics = run_blocks<HestonBlock>(g, opt, store, [&](Index first, Index count) {
    return HestonBlock(g, x0, v0, s, a, p, first, count, opt.scheme);
  });
  return out;
}

namespace {
void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(char((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& s, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  for (int i = 0; i < 8; ++i) s.push_back(char((v >> (8 * i)) & 0xFF));
}
void put_matrix(std::string& s, const MatrixXd& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_f64(s, m(i, j));
}
}  // namespace

std::string encode_path_dump(const PathBundle& b) {
  if (b.wealth.size() == 0) throw std::invalid_argument("bundle has no stored trajectories");
  std::string s = "RCTL";
  put_u32(s, 1);
  put_u32(s, std::uint32_t(b.wealth.rows()));
  put_u32(s, std::uint32_t(b.wealth.cols() - 1));
  s.reserve(s.size() + 8 * std::size_t(b.wealth.size() + b.variance.size()));
  put_matrix(s, b.wealth);
  put_matrix(s, b.variance);
  return s;
}

}  // namespace robctl
