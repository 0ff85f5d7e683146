#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "robctl/params.hpp"

namespace robctl {

// Gridded reduced value V(t, v) = W(t, x, v) / x^{1-gamma}. The Merton reduction has
// no spatial variable and stores a single column. weight holds the b1 norm weight
// at every node.
struct ValueSurface {
  std::vector<double> times;
  std::vector<double> space;
  Eigen::MatrixXd values;  // times.size() x max(1, space.size())
  Eigen::MatrixXd weight;

  Eigen::Index nt() const { return Eigen::Index(times.size()) - 1; }
  Eigen::Index nv() const { return values.cols(); }
  // max |values|/weight over rows [r0, r1) and columns [c0, c1)
  double weighted_norm(Eigen::Index r0, Eigen::Index r1, Eigen::Index c0, Eigen::Index c1) const;
  double weighted_norm() const { return weighted_norm(0, nt() + 1, 0, nv()); }
};

// max |a - b|/weight(a) over the selected block.
double weighted_distance(const ValueSurface& a, const ValueSurface& b, Eigen::Index r0,
                         Eigen::Index r1, Eigen::Index c0, Eigen::Index c1);

struct SlabSpec {
  double slab_width{0};  // 0: taken from the slab-count formula
  int max_outer_iters{50};
  double tol{1e-6};
  int control_grid{201};
  int nt{400};
  int nv{200};
};

// Controls chosen at a node: pi, consumption ratio c/x (Merton), and the
// normalized distortion phi / sqrt(v) (Heston) or phi (Merton).
struct NodeControl {
  double pi{0};
  double c{0};
  double phi1{0};
  double phi2{0};
  double value{0};  // sup-inf of the control-dependent Hamiltonian part
};

// q pi^2 + l pi + a(pi).phi + beta |phi|^2 with a(pi) = (a1 pi + a0, a2),
// maximized over |pi| <= Kpi after minimizing over |phi| <= Kphi.
struct InnerSaddle {
  double q{0}, l{0}, a1{0}, a0{0}, a2{0}, beta{0}, Kpi{1}, Kphi{1};
};

NodeControl solve_inner_saddle(const InnerSaddle& s, int grid = 201);

// Reduced HJBI after factoring out x^{1-gamma}:
//   Merton: V' - delta V + (1-gamma) V [mu0 + (mu1-mu0+sigma phi) pi - c - gamma sigma^2 pi^2/2]
//           + c^{1-gamma}/(1-gamma) + (1-gamma) sigma^2 phi^2 J/(2 theta) = 0
//   Heston: V_t + sigma^2 v V_vv/2 + [kappa(pbar-v) + sigma v (rho ph1 + sqrt(1-rho^2) ph2)
//           + sigma rho (1-gamma) pi v] V_v + [mu0(1-gamma) + v(1-gamma)(-gamma pi^2/2
//           + mu2 pi + ph1 pi)] V + v (1-gamma)|ph|^2 J/(2 theta) = 0
// with terminal value V(T) = 1/(1-gamma); W = x^{1-gamma} V.
class ReducedModel {
 public:
  explicit ReducedModel(const MertonParamsd& p);
  explicit ReducedModel(const HestonParamsd& p);

  bool is_heston() const { return heston_.has_value(); }
  const MertonParamsd& merton() const { return *merton_; }
  const HestonParamsd& heston() const { return *heston_; }
  double T() const;
  double gamma() const;
  double terminal() const { return 1.0 / (1.0 - gamma()); }
  double vmax() const;

  NodeControl optimize(double v, double V, double Vv, double J, int grid = 201) const;

  // Left side of the reduced equation; zero for a solution.
  double residual(double v, double V, double Vt, double Vv, double Vvv, double J,
                  int grid = 201) const;

  // Closed-form V and its derivatives (for checks and the v_max boundary).
  double closed_value(double t, double v) const;
  double boundary_slope(double t) const;  // g3(t)

  // Norm weight b1 for a node at time s after its slab start.
  double weight(double s, double v) const;

 private:
  std::optional<MertonParamsd> merton_;
  std::optional<HestonParamsd> heston_;
};

ReducedModel reduce_model(const MertonParamsd& p);
ReducedModel reduce_model(const HestonParamsd& p);

// Number of time steps per slab: slab_width (or T/N) snapped to the time grid.
int slab_steps(const ReducedModel& m, const SlabSpec& spec);

// Empty surface on the (nt, nv) grid with slab-aware weights.
ValueSurface make_surface(const ReducedModel& m, const SlabSpec& spec);
ValueSurface closed_form_surface(const ReducedModel& m, const SlabSpec& spec);
ValueSurface constant_surface(const ReducedModel& m, const SlabSpec& spec, double value);

// Solves the standard problem with coupling J frozen on rows [r0, r1] given the
// terminal row terminal (values at times[r1]). Returns a surface equal to J
// outside the slab. controls, if given, receives the node controls (rows r0..r1-1).
ValueSurface solve_standard_slab(const ValueSurface& J, const SlabSpec& spec,
                                 const ReducedModel& m, Eigen::Index r0, Eigen::Index r1,
                                 const Eigen::VectorXd& terminal,
                                 std::vector<std::vector<NodeControl>>* controls = nullptr);

struct IterationRecord {
  int slab{0};  // 0 = slab ending at T
  int iter{0};
  double weighted_delta{0};
};

struct FixedPointResult {
  ValueSurface surface;
  std::vector<IterationRecord> history;
  std::vector<std::vector<NodeControl>> controls;  // per row, per node at convergence
  int slab_steps{1};
  int slabs{0};
};

FixedPointResult fixed_point(const SlabSpec& spec, const ReducedModel& m, const ValueSurface& J0);

// ||T(J1) - T(J2)|| / ||J1 - J2|| on slab number slab (0 = last), terminal data
// taken from the closed form at the slab end.
double contraction_ratio(const ValueSurface& J1, const ValueSurface& J2, const SlabSpec& spec,
                         const ReducedModel& m, int slab = 0);

// Relative weighted distance between a surface and the closed form over
// interior nodes (t < T, 0 < v < v_max).
double closed_form_error(const ValueSurface& s, const ReducedModel& m);

}  // namespace robctl
