#include "robctl/cli.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "robctl/acceptance.hpp"
#include "robctl/appxa.hpp"
#include "robctl/closedform.hpp"
#include "robctl/config.hpp"
#include "robctl/hjbi.hpp"
#include "robctl/payoff.hpp"
#include "robctl/rng.hpp"

#ifndef ROBCTL_VERSION
#define ROBCTL_VERSION "0.0.0"
#endif

namespace robctl {

using nlohmann::json;

const char* version() { return ROBCTL_VERSION; }

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RCTL_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno || *end || env[0] == '-')
      throw ConfigError("bad RCTL_SEED", {std::string("RCTL_SEED: not an unsigned integer: ") + env});
    return v;
  }
  return 42;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Context {
  const Scenario& s;
  std::uint64_t seed;
  std::string sha;
  std::string model;
  std::vector<std::string> extra_hashes;  // contraction pair files

  json meta() const {
    json m;
    m["command"] = s.command;
    m["config_sha256"] = sha;
    m["seed"] = seed;
    m["version"] = version();
    if (!model.empty()) m["model"] = model;
    if (!extra_hashes.empty()) m["input_sha256"] = extra_hashes;
    return m;
  }
  std::string csv_header() const {
    std::string h = "# robctl " + std::string(version()) + " command=" + s.command +
                    " config_sha256=" + sha + " seed=" + std::to_string(seed) + "\n";
    for (const auto& e : extra_hashes) h += "# input_sha256=" + e + "\n";
    return h;
  }
};

struct Output {
  std::string body;
  int code{kOk};
  std::vector<std::pair<std::string, std::string>> sidecars;  // (suffix, bytes)
};

std::string wrap_json(const Context& c, json result) {
  json j;
  j["meta"] = c.meta();
  j["result"] = std::move(result);
  return j.dump(2) + "\n";
}

void require_format(const Scenario& s, std::initializer_list<const char*> ok) {
  for (const char* f : ok)
    if (s.format == f) return;
  throw ConfigError("unsupported output format", {"out: \"" + s.format + "\" not available for " + s.command});
}

void require_valid(const ModelConfig& cfg, bool structural_only) {
  const ValidationReport r = std::visit([](const auto& p) { return validate(p); }, cfg);
  if (structural_only ? r.fatal : !r.ok()) throw ConfigError("config fails validation", r.failures());
}

json validation_json(const ModelConfig& cfg) {
  const ValidationReport r = std::visit([](const auto& p) { return validate(p); }, cfg);
  json a = json::array();
  for (const auto& c : r.checks) a.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return a;
}

double initial_v(const Scenario& s, const HestonParamsd& p) { return s.v0 ? *s.v0 : p.pbar; }

PathGrid mc_grid(const Scenario& s, const Context& c, double T) {
  if (s.paths < 100) throw ConfigError("too few paths", {"paths: at least 100 required"});
  if (s.steps < 1) throw ConfigError("bad steps", {"steps: must be positive"});
  PathGrid g;
  g.t0 = s.t0;
  g.t1 = T;
  g.n_steps = s.steps;
  g.n_paths = s.paths;
  g.seed = c.seed;
  g.antithetic = s.antithetic;
  g.check(T);
  return g;
}

SimOptions sim_options(const Scenario& s) {
  SimOptions o;
  o.threads = s.threads;
  o.store = false;
  o.scheme = scheme_from_string(s.scheme);
  return o;
}

// ---------------------------------------------------------------- closed-form

struct GridSpec {
  std::vector<double> t, x, p;
};

GridSpec parse_grid(const std::string& spec, double T, double pdefault) {
  GridSpec g;
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ',');) parts.push_back(tok);
  if (parts.empty()) throw ConfigError("bad grid", {"grid: empty"});
  double t0, t1;
  int nt;
  char c1, c2, extra;
  std::istringstream head(parts[0]);
  if (!(head >> t0 >> c1 >> t1 >> c2 >> nt) || c1 != ':' || c2 != ':' || (head >> extra))
    throw ConfigError("bad grid", {"grid: expected t0:t1:nt, got \"" + parts[0] + "\""});
  if (nt < 1 || !(t0 >= 0) || !(t1 <= T) || !(t0 <= t1))
    throw ConfigError("bad grid", {"grid: need 0 <= t0 <= t1 <= T and nt >= 1"});
  for (int i = 0; i < nt; ++i) g.t.push_back(nt == 1 ? t0 : t0 + (t1 - t0) * i / (nt - 1));
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const std::string& tok = parts[i];
    if (tok.size() < 2 || (tok[0] != 'x' && tok[0] != 'p'))
      throw ConfigError("bad grid", {"grid: state tokens look like x1.5 or p0.04, got \"" + tok + "\""});
    char* end = nullptr;
    const double v = std::strtod(tok.c_str() + 1, &end);
    if (*end || !std::isfinite(v)) throw ConfigError("bad grid", {"grid: bad number in \"" + tok + "\""});
    (tok[0] == 'x' ? g.x : g.p).push_back(v);
  }
  if (g.x.empty()) g.x.push_back(1.0);
  if (g.p.empty()) g.p.push_back(pdefault);
  for (double x : g.x)
    if (!(x > 0)) throw ConfigError("bad grid", {"grid: wealth must be positive"});
  for (double p : g.p)
    if (!(p >= 0)) throw ConfigError("bad grid", {"grid: variance must be non-negative"});
  return g;
}

// d/dt g3 by fourth-order differences (one-sided near the ends of [0, T]).
double g3_derivative(const HestonClosedForm<double>& h, double t) {
  const double T = h.params().T, e = 1e-3 * T;
  auto f = [&](double s) { return h.g3(s); };
  if (t - 2 * e >= 0 && t + 2 * e <= T)
    return (f(t - 2 * e) - 8 * f(t - e) + 8 * f(t + e) - f(t + 2 * e)) / (12 * e);
  const double d = t + 4 * e <= T ? e : -e;
  return (-25 * f(t) + 48 * f(t + d) - 36 * f(t + 2 * d) + 16 * f(t + 3 * d) - 3 * f(t + 4 * d)) /
         (12 * d);
}

Output cmd_closed_form(const Context& c, const ModelConfig& cfg) {
  require_format(c.s, {"json", "csv"});
  require_valid(cfg, false);
  const bool heston = std::holds_alternative<HestonParamsd>(cfg);
  const double T = std::visit([](const auto& p) { return p.T; }, cfg);
  const GridSpec g = parse_grid(c.s.grid, T, heston ? std::get<HestonParamsd>(cfg).pbar : 0.0);

  json rows = json::array();
  json coeffs, curve = json::array();
  std::ostringstream csv;
  csv << c.csv_header() << "t,x,p,W,pi_star,c_star,phi1_star,phi2_star,pde_residual\n";
  auto emit = [&](double t, double x, double p, double W, const StrategyPoint<double>& u, double res) {
    rows.push_back({{"t", t}, {"x", x}, {"p", p}, {"W", W}, {"pi_star", u.pi}, {"c_star", u.c},
                    {"phi1_star", u.phi1}, {"phi2_star", u.phi2}, {"pde_residual", res}});
    csv << num(t) << ',' << num(x) << ',' << num(p) << ',' << num(W) << ',' << num(u.pi) << ','
        << num(u.c) << ',' << num(u.phi1) << ',' << num(u.phi2) << ',' << num(res) << '\n';
  };
  if (!heston) {
    const MertonClosedForm<double> m(std::get<MertonParamsd>(cfg));
    coeffs = {{"a1", m.coeffs().a1}};
    for (double t : g.t)
      for (double x : g.x) {
        const auto u = m.strategy(t, x);
        emit(t, x, 0.0, m.value(t, x), u, m.hamiltonian(t, x, u.pi, u.c, u.phi1));
      }
  } else {
    const HestonClosedForm<double> h(std::get<HestonParamsd>(cfg));
    const auto& k = h.coeffs();
    coeffs = {{"a2", k.a2}, {"a3", k.a3}, {"a4", k.a4}, {"a5", k.a5}, {"a6", k.a6},
              {"abar1", k.abar1}, {"abar2", k.abar2}, {"dt_local", k.dt_local},
              {"dt_hat", k.dt_hat}, {"slab_count", k.slab_count}, {"regime", to_string(k.regime)}};
    for (double t : g.t) {
      const double g3 = h.g3(t);
      curve.push_back({{"t", t}, {"g3", g3}, {"riccati_residual", g3_derivative(h, t) - h.g3_rate(g3)}});
      for (double x : g.x)
        for (double p : g.p) {
          const auto u = h.strategy(t, p);
          emit(t, x, p, h.value(t, x, p), u, h.hamiltonian(t, x, p, u.pi, u.phi1, u.phi2));
        }
    }
  }
  Output o;
  if (c.s.format == "csv") {
    o.body = csv.str();
  } else {
    json r;
    r["coeffs"] = coeffs;
    r["rows"] = rows;
    if (heston) r["g3_curve"] = curve;
    r["validation"] = validation_json(cfg);
    o.body = wrap_json(c, r);
  }
  return o;
}

// ------------------------------------------------------------------- simulate

json dump_sidecar(const Context& c, const PathBundle& b) {
  json j;
  j["meta"] = c.meta();
  j["format"] = {{"magic", "RCTL"}, {"version", 1}, {"header_bytes", 16}, {"endianness", "little"},
                 {"layout", "row-major f64 wealth[n_paths][n_steps+1] then variance (Heston)"}};
  j["grid"] = {{"t0", b.grid.t0}, {"t1", b.grid.t1}, {"n_steps", b.grid.steps()},
               {"n_paths", b.grid.n_paths}, {"antithetic", b.grid.antithetic}, {"seed", b.grid.seed}};
  j["controls"] = b.controls_applied;
  j["has_variance"] = b.variance.size() > 0;
  return j;
}

Output cmd_simulate(const Context& c, const ModelConfig& cfg) {
  require_format(c.s, {"json"});
  require_valid(cfg, false);
  const SimOptions opt = sim_options(c.s);
  json r;
  McEstimate e;
  double W;
  Output o;
  if (auto* mp = std::get_if<MertonParamsd>(&cfg)) {
    const PathGrid g = mc_grid(c.s, c, mp->T);
    W = MertonClosedForm<double>(*mp).value(c.s.t0, c.s.x0);
    e = estimate_J1(c.s.t0, c.s.x0, merton_optimal_strategy(*mp), merton_optimal_ambiguity(*mp),
                    merton_value(*mp), g, *mp, opt);
    if (!c.s.dump.empty()) {
      SimOptions so = opt;
      so.store = true;
      const PathBundle b = simulate_merton(g, c.s.x0, merton_optimal_strategy(*mp),
                                           merton_optimal_ambiguity(*mp), *mp, so);
      o.sidecars = {{"dump", encode_path_dump(b)}, {"sidecar", dump_sidecar(c, b).dump(2) + "\n"}};
    }
  } else {
    const auto& hp = std::get<HestonParamsd>(cfg);
    const PathGrid g = mc_grid(c.s, c, hp.T);
    const double v0 = initial_v(c.s, hp);
    W = HestonClosedForm<double>(hp).value(c.s.t0, c.s.x0, v0);
    e = estimate_J2(c.s.t0, c.s.x0, v0, heston_optimal_strategy(hp), heston_optimal_ambiguity(hp),
                    heston_value(hp), g, hp, opt);
    r["v0"] = v0;
    if (!c.s.dump.empty()) {
      SimOptions so = opt;
      so.store = true;
      const PathBundle b = simulate_heston(g, c.s.x0, v0, heston_optimal_strategy(hp),
                                           heston_optimal_ambiguity(hp), hp, so);
      o.sidecars = {{"dump", encode_path_dump(b)}, {"sidecar", dump_sidecar(c, b).dump(2) + "\n"}};
    }
  }
  const double z = (e.mean - W) / e.std_error;
  r["t0"] = c.s.t0;
  r["x0"] = c.s.x0;
  r["estimate"] = e.mean;
  r["std_error"] = e.std_error;
  r["closed_form"] = W;
  r["z_score"] = z;
  r["se_relative"] = e.std_error / std::abs(W);
  r["n_paths"] = c.s.paths;
  r["n_observations"] = e.n_paths;
  r["n_steps"] = c.s.steps;
  r["scheme"] = c.s.scheme;
  r["antithetic"] = c.s.antithetic;
  r["within_3se"] = std::abs(z) <= 3;
  o.body = wrap_json(c, r);
  if (!(std::abs(z) <= 3)) o.code = kAcceptance;
  return o;
}

// --------------------------------------------------------------------- saddle

json saddle_json(const SaddleReport& rep) {
  json r;
  r["baseline"] = {{"J", rep.baseline.mean}, {"SE", rep.baseline.std_error}, {"n_paths", rep.baseline.n_paths}};
  r["closed_form"] = rep.closed_form;
  json es = json::array();
  for (const auto& e : rep.entries)
    es.push_back({{"kind", e.kind}, {"dpi", e.dpi}, {"dphi", e.phi_scale}, {"skipped", e.skipped},
                  {"note", e.note}, {"J", e.estimate.mean}, {"SE", e.estimate.std_error},
                  {"diff", e.diff}, {"se_diff", e.se_diff}, {"violation", e.violation}});
  r["entries"] = es;
  r["max_pi_side"] = rep.max_pi_side;
  r["min_phi_side"] = rep.min_phi_side;
  r["passed"] = rep.ok();
  return r;
}

Output cmd_saddle(const Context& c, const ModelConfig& cfg) {
  require_format(c.s, {"json", "csv"});
  require_valid(cfg, false);
  const SimOptions opt = sim_options(c.s);
  SaddleReport rep;
  if (auto* mp = std::get_if<MertonParamsd>(&cfg)) {
    if (c.s.t0 != 0) throw ConfigError("saddle starts at t = 0", {"t0: must be 0 for saddle"});
    rep = saddle_probe(c.s.x0, *mp, mc_grid(c.s, c, mp->T), default_perturbations(), opt);
  } else {
    const auto& hp = std::get<HestonParamsd>(cfg);
    if (c.s.t0 != 0) throw ConfigError("saddle starts at t = 0", {"t0: must be 0 for saddle"});
    rep = saddle_probe(c.s.x0, initial_v(c.s, hp), hp, mc_grid(c.s, c, hp.T),
                       default_perturbations(), opt);
  }
  Output o;
  const json r = saddle_json(rep);
  if (c.s.format == "csv") {
    json wrapped;
    wrapped["meta"] = c.meta();
    wrapped["result"] = r;
    o.body = emit_plot_data(wrapped, "saddle");
  } else {
    o.body = wrap_json(c, r);
  }
  if (!rep.ok()) o.code = kAcceptance;
  return o;
}

// ---------------------------------------------------------------- fixed-point

SlabSpec slab_spec(const Scenario& s) {
  if (s.nt < 2) throw ConfigError("bad grid", {"nt: at least 2"});
  if (s.nv < 3) throw ConfigError("bad grid", {"nv: at least 3"});
  if (!(s.tol > 0)) throw ConfigError("bad tol", {"tol: must be positive"});
  if (s.max_iters < 1) throw ConfigError("bad max-iters", {"max-iters: must be positive"});
  SlabSpec sp;
  sp.nt = s.nt;
  sp.nv = s.nv;
  sp.tol = s.tol;
  sp.max_outer_iters = s.max_iters;
  return sp;
}

ReducedModel reduced(const ModelConfig& cfg) {
  return std::visit([](const auto& p) { return reduce_model(p); }, cfg);
}

json surface_json(const ValueSurface& v) {
  json rows = json::array();
  for (Index i = 0; i < v.values.rows(); ++i) {
    std::vector<double> r(std::size_t(v.values.cols()));
    for (Index j = 0; j < v.values.cols(); ++j) r[std::size_t(j)] = v.values(i, j);
    rows.push_back(r);
  }
  return {{"times", v.times}, {"space", v.space}, {"values", rows}};
}

Output cmd_fixed_point(const Context& c, const ModelConfig& cfg) {
  require_format(c.s, {"json", "csv"});
  require_valid(cfg, false);
  const SlabSpec sp = slab_spec(c.s);
  const ReducedModel m = reduced(cfg);
  ValueSurface J0;
  if (c.s.j0 == "zero")
    J0 = constant_surface(m, sp, 0.0);
  else if (c.s.j0 == "closed")
    J0 = closed_form_surface(m, sp);
  else
    throw ConfigError("bad j0", {"j0: expected zero or closed"});
  const FixedPointResult fp = fixed_point(sp, m, J0);
  const double err = closed_form_error(fp.surface, m);
  const ValueSurface cf = closed_form_surface(m, sp);

  Output o;
  if (c.s.format == "csv") {
    std::ostringstream surf, hist;
    surf << c.csv_header() << "t,v,V,V_closed_form,weight\n";
    for (Index i = 0; i < fp.surface.values.rows(); ++i)
      for (Index j = 0; j < fp.surface.values.cols(); ++j)
        surf << num(fp.surface.times[std::size_t(i)]) << ','
             << num(fp.surface.space.empty() ? 0.0 : fp.surface.space[std::size_t(j)]) << ','
             << num(fp.surface.values(i, j)) << ',' << num(cf.values(i, j)) << ','
             << num(fp.surface.weight(i, j)) << '\n';
    hist << c.csv_header() << "slab,iter,weighted_delta\n";
    for (const auto& h : fp.history) hist << h.slab << ',' << h.iter << ',' << num(h.weighted_delta) << '\n';
    if (c.s.output.empty()) {
      o.body = hist.str() + "\n" + surf.str();
    } else {
      o.body = surf.str();
      o.sidecars = {{"history", hist.str()}};
    }
    return o;
  }
  json r;
  json hist = json::array();
  for (const auto& h : fp.history)
    hist.push_back({{"slab", h.slab}, {"iter", h.iter}, {"weighted_delta", h.weighted_delta}});
  r["history"] = hist;
  r["slab_steps"] = fp.slab_steps;
  r["slabs"] = fp.slabs;
  r["nt"] = sp.nt;
  r["nv"] = fp.surface.nv();
  r["tol"] = sp.tol;
  r["j0"] = c.s.j0;
  r["closed_form_error"] = err;
  r["surface"] = surface_json(fp.surface);
  o.body = wrap_json(c, r);
  return o;
}

// ---------------------------------------------------------------- contraction

// Direction files: {"kind":"closed_form"} | {"kind":"constant","value":v} |
// {"kind":"random","seed":n,"amplitude":a} | {"kind":"surface","values":[[...],...]}
ValueSurface direction_surface(const json& j, const ReducedModel& m, const SlabSpec& sp,
                               const std::string& name) {
  auto bad = [&](const std::string& why) { return ConfigError("bad direction file", {name + ": " + why}); };
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw bad("needs a string \"kind\"");
  const std::string kind = j["kind"];
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = it.key() == "kind";
      for (const char* k : keys) ok = ok || it.key() == k;
      if (!ok) throw bad("unknown key " + it.key());
    }
  };
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw bad(std::string(key) + " must be a number");
    return j[key].get<double>();
  };
  if (kind == "closed_form") {
    allow({});
    return closed_form_surface(m, sp);
  }
  if (kind == "constant") {
    allow({"value"});
    return constant_surface(m, sp, number("value"));
  }
  if (kind == "random") {
    allow({"seed", "amplitude"});
    if (!j.contains("seed") || !j["seed"].is_number_unsigned()) throw bad("seed must be an unsigned integer");
    const std::uint64_t seed = j["seed"];
    const double amp = number("amplitude");
    ValueSurface v = closed_form_surface(m, sp);
    for (Index i = 0; i < v.values.rows(); ++i)
      for (Index k = 0; k < v.values.cols(); ++k)
        v.values(i, k) += amp * v.weight(i, k) *
                          (2 * uniform01(seed, 7, std::uint64_t(i * v.values.cols() + k)) - 1);
    return v;
  }
  if (kind == "surface") {
    allow({"values"});
    ValueSurface v = make_surface(m, sp);
    const json& rows = j["values"];
    if (!rows.is_array() || Index(rows.size()) != v.values.rows()) throw bad("values needs nt+1 rows");
    for (Index i = 0; i < v.values.rows(); ++i) {
      const json& r = rows[std::size_t(i)];
      if (!r.is_array() || Index(r.size()) != v.values.cols()) throw bad("row length mismatch");
      for (Index k = 0; k < v.values.cols(); ++k) {
        if (!r[std::size_t(k)].is_number()) throw bad("non-numeric value");
        v.values(i, k) = r[std::size_t(k)];
      }
    }
    return v;
  }
  throw bad("unknown kind " + kind);
}

Output cmd_contraction(Context& c, const ModelConfig& cfg) {
  require_format(c.s, {"json"});
  require_valid(cfg, false);
  if (c.s.pair.size() != 2) throw ConfigError("contraction needs two files", {"pair: expected a.json b.json"});
  const SlabSpec sp = slab_spec(c.s);
  const ReducedModel m = reduced(cfg);
  std::vector<ValueSurface> dirs;
  for (const auto& f : c.s.pair) {
    const std::string raw = read_file(f);
    c.extra_hashes.push_back(sha256_hex(raw));
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ConfigError("bad direction file", {f + ": " + e.what()});
    }
    dirs.push_back(direction_surface(j, m, sp, f));
  }
  const int steps = slab_steps(m, sp);
  const int slabs = (sp.nt + steps - 1) / steps;
  if (c.s.slab < 0 || c.s.slab >= slabs)
    throw ConfigError("bad slab", {"slab: must lie in [0, " + std::to_string(slabs) + ")"});
  const double ratio = contraction_ratio(dirs[0], dirs[1], sp, m, c.s.slab);
  json r;
  r["ratio"] = ratio;
  r["slab"] = c.s.slab;
  r["slab_steps"] = steps;
  r["slabs"] = slabs;
  r["threshold"] = 0.6;
  r["passed"] = ratio <= 0.6;
  Output o;
  o.body = wrap_json(c, r);
  if (!(ratio <= 0.6)) o.code = kAcceptance;
  return o;
}

// -------------------------------------------------------------------- moments

json bound_json(const BoundReport& b) {
  json checks = json::array();
  for (const auto& k : b.checks)
    checks.push_back({{"label", k.label}, {"estimate", k.estimate}, {"std_error", k.std_error},
                      {"bound", k.bound}, {"ratio", k.ratio()}, {"margin", k.margin()},
                      {"passed", k.passed}});
  return {{"name", b.name}, {"passed", b.passed()}, {"n_paths", b.n_paths}, {"seed", b.seed},
          {"note", b.note}, {"checks", checks}};
}

Output cmd_moments(const Context& c, const ModelConfig& cfg) {
  require_format(c.s, {"json"});
  require_valid(cfg, true);
  const auto* hp = std::get_if<HestonParamsd>(&cfg);
  if (!hp) throw ConfigError("moments needs a heston config", {"model: expected heston"});
  McConfig mc;
  if (c.s.paths < 100) throw ConfigError("too few paths", {"paths: at least 100 required"});
  mc.n_paths = c.s.paths;
  mc.n_steps = c.s.steps;
  mc.seed = c.seed;
  mc.sim = sim_options(c.s);
  const double v0 = initial_v(c.s, *hp);
  SuperSolutionSpec spec = value_space_family(*hp);
  if (c.s.varrho) spec.varrho = *c.s.varrho;
  if (c.s.b) spec.b = *c.s.b;
  if (c.s.k) spec.k = *c.s.k;

  json r;
  bool passed;
  const std::string& w = c.s.which;
  if (w == "local" || w == "expmoment" || w == "global" || w == "nonambiguity") {
    BoundReport b;
    if (w == "local")
      b = verify_local(spec, *hp, c.s.t0, c.s.x0, v0, mc);
    else if (w == "expmoment")
      b = verify_exp_moment(*hp, c.s.t0, v0, mc);
    else if (w == "global")
      b = verify_global(spec, *hp, c.s.t0, c.s.x0, v0, mc);
    else {
      const double vr = c.s.varrho ? *c.s.varrho : 2.0;
      double bb;
      if (c.s.b) {
        bb = *c.s.b;
      } else {
        const auto win = nonambiguity_b_window(vr, *hp);
        bb = std::round(0.5 * (win.first + win.second));
      }
      b = verify_nonambiguity(*hp, vr, bb, c.s.t0, c.s.x0, v0, mc);
      r["varrho"] = vr;
      r["b"] = bb;
    }
    r.update(bound_json(b));
    passed = b.passed();
  } else if (w == "sign") {
    const SignReport sr = supersolution_sign(spec, *hp);
    r = {{"name", "sign"}, {"max_value", sr.max_value}, {"argmax_s", sr.argmax_s},
         {"argmax_p", sr.argmax_p}, {"dt", sr.dt}, {"gbar2_floor", sr.gbar2_floor},
         {"passed", sr.passed()}};
    passed = sr.passed() && sr.gbar2_floor;
  } else {
    throw ConfigError("bad --which", {"which: expected local, expmoment, global, nonambiguity or sign"});
  }
  if (w != "nonambiguity" && w != "expmoment") {
    r["varrho"] = spec.varrho;
    r["b"] = spec.b;
    r["k"] = spec.k;
  }
  r["t0"] = c.s.t0;
  r["v0"] = v0;
  Output o;
  o.body = wrap_json(c, r);
  if (!passed) o.code = kAcceptance;
  return o;
}

// --------------------------------------------------------------------- report

Output cmd_report(const Context& c) {
  require_format(c.s, {"json"});
  AcceptanceOptions ao;
  ao.paths = c.s.paths;
  ao.steps = c.s.steps;
  ao.seed = c.seed;
  ao.threads = c.s.threads;
  ao.nt = c.s.nt;
  ao.nv = c.s.nv;
  bool all = true;
  json crit = json::array();
  for (const auto& k : run_acceptance(ao)) {
    all = all && k.passed;
    crit.push_back({{"id", k.id}, {"name", k.name}, {"passed", k.passed}, {"summary", k.summary},
                    {"detail", k.detail}});
  }
  json r;
  r["configs"] = {json::parse(reference_config_text("merton")), json::parse(reference_config_text("heston"))};
  r["criteria"] = crit;
  r["passed"] = all;
  Output o;
  o.body = wrap_json(c, r);
  if (!all) o.code = kAcceptance;
  return o;
}

// ------------------------------------------------------------------ plot-data

Output cmd_plot_data(const Context& c) {
  if (c.s.input.empty()) throw ConfigError("plot-data needs --input", {"input: missing"});
  if (c.s.format != "csv" && c.s.format != "json")
    throw ConfigError("unsupported output format", {"out: plot-data writes csv"});
  json j;
  try {
    j = json::parse(read_file(c.s.input));
  } catch (const json::parse_error& e) {
    throw ConfigError("input is not JSON", {c.s.input + ": " + e.what()});
  }
  Output o;
  o.body = emit_plot_data(j, c.s.kind);
  return o;
}

void emit(const Scenario& s, const Output& o, std::ostream& out) {
  if (s.output.empty()) {
    out << o.body;
  } else {
    write_atomic(s.output, o.body);
  }
  for (const auto& [what, bytes] : o.sidecars) {
    if (what == "dump") {
      write_atomic(s.dump, bytes);
    } else if (what == "sidecar") {
      write_atomic(s.dump + ".json", bytes);
    } else {
      write_atomic(s.output + "." + what + ".csv", bytes);
    }
  }
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& msg,
         const std::vector<std::string>& fields = {}) {
  json e;
  e["error"] = {{"exit_code", code}, {"kind", kind}, {"message", msg}, {"fields", fields}};
  err << e.dump() << "\n";
  return code;
}

}  // namespace

std::string emit_plot_data(const json& j, const std::string& kind) {
  auto bad = [&](const std::string& why) { return ConfigError("bad plot-data input", {"input: " + why}); };
  if (!j.is_object() || !j.contains("result") || !j.contains("meta")) throw bad("not a robctl result");
  const json& meta = j["meta"];
  const json& r = j["result"];
  std::string out = "# robctl " + meta.value("version", std::string("?")) + " source=" +
                    meta.value("command", std::string("?")) + " kind=" + kind +
                    " config_sha256=" + meta.value("config_sha256", std::string("?")) +
                    " seed=" + std::to_string(meta.value("seed", std::uint64_t(0))) + "\n";
  auto d = [](const json& v) { return v.is_number() ? num(v.get<double>()) : std::string("nan"); };
  if (kind == "g3") {
    if (!r.contains("g3_curve")) throw bad("no g3_curve (run closed-form on a heston config)");
    out += "t,g3,riccati_residual\n";
    for (const auto& p : r["g3_curve"]) out += d(p["t"]) + "," + d(p["g3"]) + "," + d(p["riccati_residual"]) + "\n";
  } else if (kind == "fixed-point-history") {
    if (!r.contains("history")) throw bad("no history (run fixed-point)");
    out += "slab,iter,weighted_delta\n";
    for (const auto& h : r["history"])
      out += std::to_string(h["slab"].get<int>()) + "," + std::to_string(h["iter"].get<int>()) + "," +
             d(h["weighted_delta"]) + "\n";
  } else if (kind == "saddle") {
    if (!r.contains("entries") || !r.contains("baseline")) throw bad("no saddle entries (run saddle)");
    out += "dpi,dphi,J,SE,baseline\n";
    const std::string base = d(r["baseline"]["J"]);
    for (const auto& e : r["entries"]) {
      if (e.value("skipped", false)) continue;
      out += d(e["dpi"]) + "," + d(e["dphi"]) + "," + d(e["J"]) + "," + d(e["SE"]) + "," + base + "\n";
    }
  } else {
    throw ConfigError("unknown plot kind", {"kind: expected g3, fixed-point-history or saddle, got \"" + kind + "\""});
  }
  return out;
}

int run(const Scenario& s, std::ostream& out, std::ostream& err) {
  try {
    Context c{s, resolve_seed(s.seed), "", "", {}};
    if (s.threads < 1) throw ConfigError("bad threads", {"threads: must be positive"});
    if (!s.dump.empty() && s.command != "simulate")
      throw ConfigError("dump only applies to simulate", {"dump: not supported for " + s.command});
    Output o;
    if (s.command == "report") {
      c.sha = sha256_hex(reference_config_text("merton") + reference_config_text("heston"));
      c.model = "reference";
      o = cmd_report(c);
    } else if (s.command == "plot-data") {
      c.sha = sha256_hex(s.input.empty() ? std::string() : read_file(s.input));
      o = cmd_plot_data(c);
    } else {
      if (s.config.empty()) throw ConfigError("missing config", {"config: required for " + s.command});
      std::string raw;
      const ModelConfig cfg = load_config(s.config, &raw);
      c.sha = sha256_hex(raw);
      c.model = model_name(cfg);
      if (s.command == "closed-form") o = cmd_closed_form(c, cfg);
      else if (s.command == "simulate") o = cmd_simulate(c, cfg);
      else if (s.command == "saddle") o = cmd_saddle(c, cfg);
      else if (s.command == "fixed-point") o = cmd_fixed_point(c, cfg);
      else if (s.command == "contraction") o = cmd_contraction(c, cfg);
      else if (s.command == "moments") o = cmd_moments(c, cfg);
      else throw ConfigError("unknown command", {"command: " + s.command});
    }
    emit(s, o, out);
    if (o.code == kAcceptance)
      return fail(err, kAcceptance, "acceptance", s.command + ": acceptance check failed (see output)");
    return o.code;
  } catch (const ConfigError& e) {
    return fail(err, kValidation, "validation", e.what(), e.fields);
  } catch (const std::invalid_argument& e) {
    return fail(err, kValidation, "validation", e.what());
  } catch (const std::exception& e) {
    return fail(err, kNumeric, "numeric", e.what());
  }
}

}  // namespace robctl
