#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "robctl/params.hpp"

namespace robctl {

using Eigen::ArrayXd;
using Eigen::Index;
using Eigen::MatrixXd;

// Feedback map evaluated on a block of paths: (t, wealth, variance) -> control.
// For the Merton model the variance argument is a zero array.
using Feedback = std::function<ArrayXd(double t, const ArrayXd& x, const ArrayXd& p)>;

struct FeedbackStrategy {
  Feedback pi;
  Feedback c;  // absolute consumption rate; unused by the Heston model
  std::string label;
};

struct FeedbackAmbiguity {
  Feedback phi1;
  Feedback phi2;  // unused by the Merton model
  std::string label;
};

Feedback constant_feedback(double value);

FeedbackStrategy merton_optimal_strategy(const MertonParamsd& p);
FeedbackAmbiguity merton_optimal_ambiguity(const MertonParamsd& p);
FeedbackStrategy heston_optimal_strategy(const HestonParamsd& p);
FeedbackAmbiguity heston_optimal_ambiguity(const HestonParamsd& p);

// Left-endpoint Euler freezes every control over a step. Heun additionally
// averages the log-wealth drift over a predictor step and integrates running
// rewards with the trapezoid rule; diffusion coefficients stay frozen.
enum class Scheme { Euler, Heun };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct PathGrid {
  double t0{0};
  double t1{1};
  int n_steps{500};
  Index n_paths{1000};
  std::uint64_t seed{42};
  bool antithetic{false};     // paths (2j, 2j+1) share negated normals
  std::vector<double> times;  // explicit nodes (overrides uniform t0, t1, n_steps) when nonempty

  int steps() const { return times.empty() ? n_steps : int(times.size()) - 1; }
  double node(int k) const;
  std::vector<double> nodes() const;
  void check(double T) const;
};

PathGrid explicit_grid(std::vector<double> times, Index n_paths, std::uint64_t seed);

struct SimOptions {
  int threads{1};
  bool store{true};  // keep full trajectories in the bundle
  Scheme scheme{Scheme::Heun};
  Index block{512};
};

struct SimDiagnostics {
  Index control_violations{0};   // steps with a control outside its admissible set
  Index truncation_steps{0};     // steps where the raw variance went negative
  Index total_steps{0};
  double max_ball_excess{0};     // max of |phi| - Kphi sqrt(P+) (Heston)
  double truncation_fraction() const {
    return total_steps ? double(truncation_steps) / double(total_steps) : 0.0;
  }
};

struct PathBundle {
  PathGrid grid;
  MatrixXd wealth;     // n_paths x (n_steps+1)
  MatrixXd variance;   // truncated P+, empty for the Merton model
  MatrixXd brownian1;  // n_paths x n_steps increments
  MatrixXd brownian2;
  MatrixXd pi, c, phi1, phi2;  // controls applied on each step (left endpoint)
  std::string controls_applied;
  SimDiagnostics diagnostics;
};

// Block of paths advanced jointly. Usage: at each step read x()/p() and the
// left-endpoint controls, then call advance(); after the last step done() is true.
class MertonBlock {
 public:
  MertonBlock(const PathGrid& g, double x0, const FeedbackStrategy& s, const FeedbackAmbiguity& a,
              const MertonParamsd& p, Index first, Index count, Scheme scheme);

  bool done() const { return k_ == grid_.steps(); }
  int step() const { return k_; }
  double t() const { return grid_.node(k_); }
  double dt() const { return grid_.node(k_ + 1) - grid_.node(k_); }
  const ArrayXd& x() const { return x_; }
  const ArrayXd& pi() const { return pi_; }
  const ArrayXd& c() const { return c_; }
  const ArrayXd& phi() const { return phi_; }
  const ArrayXd& z() const { return z_; }
  const SimDiagnostics& diagnostics() const { return diag_; }

  // Controls at the current node (valid also at the terminal node).
  void advance();

 private:
  void eval_controls();
  ArrayXd log_drift(const ArrayXd& x, const ArrayXd& pi, const ArrayXd& c,
                    const ArrayXd& phi) const;

  const PathGrid& grid_;
  const FeedbackStrategy& s_;
  const FeedbackAmbiguity& a_;
  MertonParamsd p_;
  Index first_;
  Scheme scheme_;
  int k_{0};
  ArrayXd x_, pi_, c_, phi_, z_, zero_;
  SimDiagnostics diag_;
};

class HestonBlock {
 public:
  HestonBlock(const PathGrid& g, double x0, double v0, const FeedbackStrategy& s,
              const FeedbackAmbiguity& a, const HestonParamsd& p, Index first, Index count,
              Scheme scheme);

  bool done() const { return k_ == grid_.steps(); }
  int step() const { return k_; }
  double t() const { return grid_.node(k_); }
  double dt() const { return grid_.node(k_ + 1) - grid_.node(k_); }
  const ArrayXd& x() const { return x_; }
  const ArrayXd& p() const { return pplus_; }  // truncated variance
  const ArrayXd& pi() const { return pi_; }
  const ArrayXd& phi1() const { return phi1_; }
  const ArrayXd& phi2() const { return phi2_; }
  const ArrayXd& z1() const { return z1_; }
  const ArrayXd& z2() const { return z2_; }
  const SimDiagnostics& diagnostics() const { return diag_; }

  void advance();

 private:
  void eval_controls();

  const PathGrid& grid_;
  const FeedbackStrategy& s_;
  const FeedbackAmbiguity& a_;
  HestonParamsd p_;
  Index first_;
  Scheme scheme_;
  int k_{0};
  ArrayXd x_, praw_, pplus_, pi_, phi1_, phi2_, z1_, z2_;
  SimDiagnostics diag_;
};

// Runs fn(first, count) over consecutive blocks of [0, n). Block boundaries
// are independent of the thread count; fn must only write to its own range.
void parallel_blocks(Index n, Index block, int threads,
                     const std::function<void(Index, Index)>& fn);

PathBundle simulate_merton(const PathGrid& g, double x0, const FeedbackStrategy& s,
                           const FeedbackAmbiguity& a, const MertonParamsd& p,
                           const SimOptions& opt = {});
PathBundle simulate_heston(const PathGrid& g, double x0, double v0, const FeedbackStrategy& s,
                           const FeedbackAmbiguity& a, const HestonParamsd& p,
                           const SimOptions& opt = {});

// Binary dump: "RCTL", u32 version, u32 n_paths, u32 n_steps, then the wealth
// matrix and (if present) the variance matrix, row-major little-endian f64.
std::string encode_path_dump(const PathBundle& b);

}  // namespace robctl
