// robctl command-line entry point.
#include <iostream>

#include "CLI11.hpp"
#include "robctl/cli.hpp"

int main(int argc, char** argv) {
  robctl::Scenario s;
  CLI::App app{"Robust control of value-coupled BSDEs: closed forms, Monte Carlo, HJBI solver"};
  app.set_version_flag("--version", robctl::version());
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  app.add_option("--threads", s.threads, "worker threads for path simulation")->check(CLI::PositiveNumber);

  auto common = [&](CLI::App* c, bool config = true) {
    if (config) c->add_option("--config", s.config, "model config (JSON)")->required()->check(CLI::ExistingFile);
    c->add_option("--out", s.format, "output format: json or csv");
    c->add_option("-o,--output", s.output, "output file (written atomically); stdout if omitted");
    c->add_option("--seed", seed, "random seed (overrides RCTL_SEED)");
    c->add_option("--threads", s.threads, "worker threads")->check(CLI::PositiveNumber);
  };
  auto mc = [&](CLI::App* c) {
    c->add_option("--paths", s.paths, "Monte Carlo paths");
    c->add_option("--steps", s.steps, "time steps");
    c->add_option("--scheme", s.scheme, "euler or heun");
    c->add_option("--t0", s.t0, "start time");
    c->add_option("--x0", s.x0, "initial wealth");
    c->add_option("--v0", s.v0, "initial variance (default pbar)");
  };
  auto solver = [&](CLI::App* c) {
    c->add_option("--nt", s.nt, "time steps");
    c->add_option("--nv", s.nv, "variance nodes");
  };

  auto* cf = app.add_subcommand("closed-form", "closed-form value, strategies and HJBI residual");
  common(cf);
  cf->add_option("--grid", s.grid, "t0:t1:nt[,x<val>...][,p<val>...]");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo value at the optimal saddle strategies");
  common(sim);
  mc(sim);
  sim->add_flag("--antithetic", s.antithetic, "antithetic path pairs");
  sim->add_option("--dump", s.dump, "binary path dump (sidecar at <dump>.json)");

  auto* sad = app.add_subcommand("saddle", "saddle-point probe under common random numbers");
  common(sad);
  mc(sad);

  auto* fp = app.add_subcommand("fixed-point", "slab-wise fixed point of the HJBI equation");
  common(fp);
  solver(fp);
  fp->add_option("--tol", s.tol, "outer tolerance (weighted norm)");
  fp->add_option("--max-iters", s.max_iters, "outer iteration cap per slab");
  fp->add_option("--j0", s.j0, "initial coupling: zero or closed");

  auto* con = app.add_subcommand("contraction", "contraction ratio of the slab map for two couplings");
  common(con);
  solver(con);
  con->add_option("--pair", s.pair, "two direction files")->expected(2)->required()->check(CLI::ExistingFile);
  con->add_option("--slab", s.slab, "slab index, 0 = the one ending at T");

  auto* mom = app.add_subcommand("moments", "moment estimates for the variance model");
  common(mom);
  mc(mom);
  mom->add_option("--which", s.which, "local, expmoment, global, nonambiguity or sign")->required();
  mom->add_option("--varrho", s.varrho, "wealth exponent");
  mom->add_option("--b", s.b, "variance exponent");
  mom->add_option("--k", s.k, "integral weight (global)");

  auto* rep = app.add_subcommand("report", "all acceptance checks on the reference configs");
  common(rep, false);
  solver(rep);
  rep->add_option("--paths", s.paths, "Monte Carlo paths");
  rep->add_option("--steps", s.steps, "time steps");

  auto* plot = app.add_subcommand("plot-data", "tidy CSV from a JSON result");
  plot->add_option("--input", s.input, "result JSON")->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", s.kind, "g3, fixed-point-history or saddle")->required();
  plot->add_option("-o,--output", s.output, "output file");
  s.format = "json";

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    // usage errors share the validation exit code and error body
    nlohmann::json j;
    j["error"] = {{"exit_code", robctl::kValidation}, {"kind", "usage"}, {"message", e.what()},
                  {"fields", nlohmann::json::array()}};
    std::cerr << j.dump() << "\n";
    return robctl::kValidation;
  }
  for (auto* c : app.get_subcommands()) {
    s.command = c->get_name();
    if (auto* o = c->get_option_no_throw("--seed"); o && o->count()) s.seed = seed;
  }
  if (s.command == "plot-data") s.format = "csv";
  return robctl::run(s, std::cout, std::cerr);
}
