#pragma once

#include <string>
#include <vector>

#include "robctl/sde.hpp"

namespace robctl {

// Supersolution family wbar(s, x, p) = gbar1(s) x^varrho e^{gbar2(s) p}.
struct SuperSolutionSpec {
  double varrho{-1};
  double b{2};
  double k{0};

  double gbar1(double s, const HestonParamsd& p) const;
  double gbar2(double s) const;
  double wbar(double s, double x, double v, const HestonParamsd& p) const;
};

// Family used for the value-function space: varrho = 1 - gamma, b = 2 K6.
SuperSolutionSpec value_space_family(const HestonParamsd& p);

// (kappa/sigma - abar1)^2 - (abar2 + 2k)
double delta1(const SuperSolutionSpec& s, const HestonParamsd& p);
// Admissible sigma*b interval of the global estimate; throws if empty.
std::pair<double, double> global_b_window(const SuperSolutionSpec& s, const HestonParamsd& p);
// Open b interval of the non-ambiguity estimate.
std::pair<double, double> nonambiguity_b_window(double varrho, const HestonParamsd& p);
// Largest k admissible for (varrho, b) in the global estimate.
double max_k(const SuperSolutionSpec& s, const HestonParamsd& p);

struct BoundCheck {
  std::string label;
  double estimate{0};
  double std_error{0};
  double bound{0};
  bool passed{false};
  double ratio() const { return bound != 0 ? estimate / bound : 0.0; }
  double margin() const { return bound - estimate - 3 * std_error; }
};

struct BoundReport {
  std::string name;
  std::vector<BoundCheck> checks;
  Index n_paths{0};
  std::uint64_t seed{0};
  std::string note;
  bool passed() const;
};

struct McConfig {
  Index n_paths{100000};
  int n_steps{500};
  std::uint64_t seed{42};
  SimOptions sim{};
};

// Extremal controls for the drift functional: pi maximizes
// varrho(varrho-1) pi^2/2 + sigma rho varrho g pi + varrho mu2 pi + Kphi |a(pi)|,
// phi/sqrt(P) = Kphi a/|a| with a = (varrho pi + sigma rho g, sigma sqrt(1-rho^2) g).
struct WorstCase {
  double pi{0};
  double phi1_hat{0};
  double phi2_hat{0};
};
WorstCase worst_case_controls(double varrho, double g, const HestonParamsd& p, int grid = 201);

BoundReport verify_local(const SuperSolutionSpec& s, const HestonParamsd& p, double t, double x,
                         double v, const McConfig& mc);
BoundReport verify_exp_moment(const HestonParamsd& p, double t, double v, const McConfig& mc);
BoundReport verify_global(const SuperSolutionSpec& s, const HestonParamsd& p, double t, double x,
                          double v, const McConfig& mc);
BoundReport verify_nonambiguity(const HestonParamsd& p, double varrho, double b, double t,
                                double S, double v, const McConfig& mc);

// max over a (s, p) grid on (0, dt] x (0, pmax] and the control box of
// L2 wbar / wbar + p / sqrt(s). Nonpositive for a valid supersolution.
struct SignReport {
  double max_value{0};
  double argmax_s{0};
  double argmax_p{0};
  double dt{0};
  bool gbar2_floor{false};  // gbar2(dt) >= b/2
  bool passed() const { return max_value <= 0; }
};
SignReport supersolution_sign(const SuperSolutionSpec& s, const HestonParamsd& p, int ns = 200,
                              int np = 200, int npi = 201);

}  // namespace robctl
