#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace robctl {

struct CriterionResult {
  int id{0};
  std::string name;
  bool passed{false};
  std::string summary;     // one line, numbers included
  nlohmann::json detail;   // deterministic content only (no timings)
};

struct AcceptanceOptions {
  long paths{100000};
  int steps{500};
  std::uint64_t seed{42};
  int threads{1};
  int nt{400};
  int nv{200};
};

CriterionResult check_identities();
CriterionResult check_riccati();
CriterionResult check_value_mc(const AcceptanceOptions& o);
CriterionResult check_saddle(const AcceptanceOptions& o);
CriterionResult check_contraction(const AcceptanceOptions& o);
CriterionResult check_moment_bounds(const AcceptanceOptions& o);
// Re-runs each stochastic command twice (and once with more threads) into
// workdir and compares output bytes.
CriterionResult check_determinism(const AcceptanceOptions& o, const std::string& workdir);

// Criteria 1-6 in order.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& o);

}  // namespace robctl
