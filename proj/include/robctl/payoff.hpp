#pragma once

#include <string>
#include <vector>

#include "robctl/sde.hpp"

namespace robctl {

struct McEstimate {
  double mean{0};
  double std_error{0};
  Index n_paths{0};  // independent observations (antithetic pairs count once)
  std::uint64_t seed{0};
};

// Mean and unbiased standard error, summed in index order.
McEstimate summarize(const ArrayXd& samples, std::uint64_t seed);

// Value function as it enters the running reward: (t, x, p) -> W.
struct ValueCallback {
  Feedback evaluator;
  std::string label;
};

ValueCallback zero_value();
ValueCallback merton_value(const MertonParamsd& p);
ValueCallback heston_value(const HestonParamsd& p);

// Per-observation payoff samples; antithetic pairs are averaged. The grid
// must span [t, T] with t = grid.t0.
ArrayXd sample_J1(double x, const FeedbackStrategy& s, const FeedbackAmbiguity& a,
                  const ValueCallback& w, const PathGrid& g, const MertonParamsd& p,
                  const SimOptions& opt = {});
ArrayXd sample_J2(double x, double v, const FeedbackStrategy& s, const FeedbackAmbiguity& a,
                  const ValueCallback& w, const PathGrid& g, const HestonParamsd& p,
                  const SimOptions& opt = {});

McEstimate estimate_J1(double t, double x, const FeedbackStrategy& s, const FeedbackAmbiguity& a,
                       const ValueCallback& w, const PathGrid& g, const MertonParamsd& p,
                       const SimOptions& opt = {});
McEstimate estimate_J2(double t, double x, double v, const FeedbackStrategy& s,
                       const FeedbackAmbiguity& a, const ValueCallback& w, const PathGrid& g,
                       const HestonParamsd& p, const SimOptions& opt = {});

// A perturbation shifts the strategy by dpi (with phi = phi*) or rescales the
// distortion to phi_scale * phi* (with pi = pi*). Either part may be neutral.
struct Perturbation {
  double dpi{0};
  double phi_scale{1};
};

struct SaddleEntry {
  std::string kind;  // "pi" or "phi"
  double dpi{0};
  double phi_scale{1};
  bool skipped{false};
  std::string note;
  McEstimate estimate;
  double diff{0};     // J(perturbed) - J(pi*, phi*)
  double se_diff{0};  // common-random-number standard error of diff
  bool violation{false};
};

struct SaddleReport {
  McEstimate baseline;
  double closed_form{0};
  std::vector<SaddleEntry> entries;
  double max_pi_side{0};   // max over pi-shifts of J(pi, phi*)
  double min_phi_side{0};  // min over phi-scalings of J(pi*, phi)
  bool ok() const;
};

std::vector<Perturbation> default_perturbations();

SaddleReport saddle_probe(double x, const MertonParamsd& p, const PathGrid& g,
                          const std::vector<Perturbation>& perturbations,
                          const SimOptions& opt = {});
SaddleReport saddle_probe(double x, double v, const HestonParamsd& p, const PathGrid& g,
                          const std::vector<Perturbation>& perturbations,
                          const SimOptions& opt = {});

}  // namespace robctl
