// Acceptance gate: one line per criterion, exit 1 if any fails.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>

#include "robctl/acceptance.hpp"

using namespace robctl;

int main(int argc, char** argv) {
  AcceptanceOptions o;
  std::string work = (std::filesystem::temp_directory_path() / "robctl_acceptance").string();
  if (argc > 1) work = argv[1];

  struct Item {
    std::function<CriterionResult()> fn;
    double limit;  // seconds
  };
  AcceptanceOptions small = o;  // determinism does not depend on scale
  small.paths = 2000;
  small.steps = 50;
  small.nt = 40;
  small.nv = 20;
  const std::vector<Item> items{
      {[] { return check_identities(); }, 1},
      {[] { return check_riccati(); }, 10},
      {[&] { return check_value_mc(o); }, 120},  // 60 s per model
      {[&] { return check_saddle(o); }, 300},
      {[&] { return check_contraction(o); }, 600},
      {[&] { return check_moment_bounds(o); }, 600},
      {[&] { return check_determinism(small, work); }, 600},
  };
  int failed = 0;
  for (const auto& it : items) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    std::string err;
    try {
      r = it.fn();
    } catch (const std::exception& e) {
      err = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = err.empty() && r.passed && secs <= it.limit;
    failed += !ok;
    std::printf("[%s] %d %s: %s (%.1f s, limit %.0f s)%s\n", ok ? "PASS" : "FAIL", r.id, r.name.c_str(),
                err.empty() ? r.summary.c_str() : ("error: " + err).c_str(), secs, it.limit,
                secs > it.limit ? " TIMEOUT" : "");
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
