#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace robctl {

enum ExitCode : int { kOk = 0, kValidation = 2, kAcceptance = 3, kNumeric = 4 };

const char* version();

// One invocation of the tool. Unset options take command-specific defaults.
struct Scenario {
  std::string command;  // closed-form | simulate | saddle | fixed-point | contraction | moments | report | plot-data
  std::string config;   // path; empty for report (reference sets) and plot-data
  std::string format{"json"};  // json | csv
  std::string output;          // file path; empty writes to the stream passed to run()

  std::optional<std::uint64_t> seed;  // explicit flag, wins over RCTL_SEED
  int threads{1};
  long paths{100000};
  int steps{500};
  bool antithetic{false};
  std::string scheme{"heun"};
  double t0{0}, x0{1};
  std::optional<double> v0;  // defaults to pbar

  // closed-form: "t0:t1:nt[,x<val>...][,p<val>...]"
  std::string grid{"0:1:11"};

  // fixed-point / contraction
  int nt{400}, nv{200};
  double tol{1e-6};
  int max_iters{50};
  std::string j0{"zero"};  // zero | closed
  std::vector<std::string> pair;
  int slab{0};

  // moments
  std::string which;  // local | expmoment | global | nonambiguity | sign
  std::optional<double> varrho, b, k;

  // simulate
  std::string dump;  // binary path dump target (+ .json sidecar)

  // plot-data
  std::string input;
  std::string kind;  // g3 | fixed-point-history | saddle
};

// RCTL_SEED if set and no explicit seed, else 42.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag);

// Executes the scenario; the result goes to scenario.output (atomically) or
// to out. Errors are reported as a JSON object on err.
int run(const Scenario& s, std::ostream& out, std::ostream& err);

// Tidy CSV from a prior JSON result. Kinds and headers:
//   g3                   t,g3,riccati_residual
//   fixed-point-history  iter,weighted_delta   (plus slab)
//   saddle               dpi,dphi,J,SE,baseline
std::string emit_plot_data(const nlohmann::json& result, const std::string& kind);

}  // namespace robctl
