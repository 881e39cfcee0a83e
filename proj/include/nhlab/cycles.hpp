#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "nhlab/ode.hpp"
#include "nhlab/systems.hpp"

namespace nhlab {

enum class EquilibriumKind { saddle, stable_node, stable_focus, unstable_node, unstable_focus, degenerate };
std::string to_string(EquilibriumKind kind);

struct Equilibrium {
  Vec state;
  double c = 0.0;
  std::vector<std::complex<double>> eigenvalues;
  EquilibriumKind kind = EquilibriumKind::degenerate;
};

/// Newton from a uniform grid of seeds over `box`, deduplicated and ordered
/// by x. Planar systems only.
std::vector<Equilibrium> find_equilibria(const SystemDef& system, const DomainBox& box, int grid_per_axis = 41);

EquilibriumKind classify_equilibrium(const Mat& jacobian);

enum class Stability { stable, unstable };
std::string to_string(Stability s);

struct LimitCycleSolution {
  double c = 0.0;
  Vec anchor;                        // point on the section
  double period = 0.0;
  double multiplier = 0.0;           // nontrivial Floquet multiplier m
  double lambda = 0.0;               // exp((1/T) int div f)
  Stability stability = Stability::stable;
  std::string label = "unlabeled";
  double return_residual = 0.0;      // |P(anchor) - anchor|
  double min_saddle_distance = 0.0;  // min over the orbit of |x - saddle|
};

/// Poincare shooting setup for planar systems. The section is a line; points
/// on it are addressed by s with x = section.point + s * u, where u is the
/// normalized ray (or the normal rotated by -pi/2 when no ray is given).
struct CycleOptions {
  Section section;
  double newton_tol = 1e-10;
  int max_newton = 40;
  double max_return_time = 400.0;
  double min_elapsed = 0.5;
  double escape_radius = 10.0;
  Vec saddle = Vec::Zero(2);
};

/// The ray {y = 0, x > 1} crossed with y decreasing; every cycle of
/// example2 discussed here meets it exactly once per period.
Section example2_section();
CycleOptions example2_cycle_options();

/// One application of the first-return map with derivatives.
struct ReturnEval {
  double s = 0.0;       // section coordinate of the start
  double s_next = 0.0;  // coordinate of the first return
  double dP_ds = 0.0;   // Poincare map derivative (equals the nontrivial multiplier)
  double dP_dc = 0.0;   // parameter sensitivity of the return coordinate
  double period = 0.0;
  Mat monodromy;
  double divergence_integral = 0.0;
  Vec start;
  Vec hit;
  double min_saddle_distance = 0.0;
};

Vec section_point(const CycleOptions& opts, double s);
double section_coordinate(const CycleOptions& opts, const Vec& x);

/// Throws NumericalFailure when no admissible return occurs within the budget.
ReturnEval evaluate_return(const SystemDef& system, double s, const CycleOptions& opts, const IntegratorConfig& cfg);

/// Newton on the return map at fixed parameter. Throws NumericalFailure on
/// no return or divergence (the message carries the last iterate).
LimitCycleSolution refine_cycle(const SystemDef& system, const Vec& guess, const IntegratorConfig& cfg = {},
                                const CycleOptions& opts = example2_cycle_options());

struct FloquetRates {
  double multiplier = 0.0;        // n^T Phi(T) n with n the unit normal to f at the anchor
  double lambda = 0.0;            // exp((1/T) int div f)
  double lambda_from_m = 0.0;     // m^(1/T)
  double trivial_defect = 0.0;    // |Phi f - f| / |f|
  double liouville_defect = 0.0;  // |det Phi - m| / m
  std::vector<std::complex<double>> eigenvalues;
};

/// Throws NumericalFailure when the trivial multiplier deviates from 1 by
/// more than 1e-5 or when m^(1/T) and the divergence rate disagree by more
/// than 1e-5 relative.
FloquetRates floquet_rates(const LimitCycleSolution& cycle, const SystemDef& system, const IntegratorConfig& cfg = {},
                           const CycleOptions& opts = example2_cycle_options());

/// Last admissible section crossing of a long run from `start` over [0, t_end]
/// (t_end < 0 for repelling cycles). Throws NumericalFailure when there is none.
Vec settle_on_section(const SystemDef& system, const Vec& start, double t_end, const IntegratorConfig& cfg = {},
                      const CycleOptions& opts = example2_cycle_options());

/// Start 1e-7 along the unstable eigenvector (positive x side) of the saddle
/// and settle forward for `t_settle`.
Vec seed_from_unstable_manifold(const SystemDef& system, double t_settle = 1500.0, const IntegratorConfig& cfg = {},
                                const CycleOptions& opts = example2_cycle_options());

enum class BranchEvent { none, fold, homoclinic_approach, boundary, step_floor, max_points };
std::string to_string(BranchEvent e);

struct BranchPoint {
  double arclength = 0.0;
  LimitCycleSolution cycle;
  BranchEvent event = BranchEvent::none;
};

struct ContinuationOptions {
  double kappa = 100.0;  // weight of c against s in the arclength metric
  double initial_dc = 1e-6;
  double min_dc = 1e-9;
  double max_dc = 4e-6;
  double t_cap = 200.0;
  double d_min = 1e-4;
  double c_lo = -0.1;
  double c_hi = 0.0;
  int max_points = 2000;
  int points_after_fold = 6;  // keep going this many points past a fold, then stop
  int max_corrector = 10;
};

struct ContinuationBranch {
  std::string label;
  std::vector<BranchPoint> points;
  BranchEvent termination = BranchEvent::none;
  std::string diagnostic;
};

/// Pseudo-arclength continuation of the return-map fixed point in (s, c).
ContinuationBranch continue_branch(const SystemDef& system, const LimitCycleSolution& start, int c_direction,
                                   const ContinuationOptions& copts = {}, const IntegratorConfig& cfg = {},
                                   const CycleOptions& opts = example2_cycle_options());

struct FoldLocation {
  double c = 0.0;
  double c_lo = 0.0;
  double c_hi = 0.0;
  double multiplier = 0.0;
  LimitCycleSolution cycle;
};

/// Bisection on the sign of m - 1 between the branch points around the first
/// fold, solving for c at fixed s. Throws std::invalid_argument without a fold.
FoldLocation locate_fold(const SystemDef& system, const ContinuationBranch& branch, double c_tol = 1e-8,
                         const IntegratorConfig& cfg = {}, const CycleOptions& opts = example2_cycle_options());

struct LogPeriodFit {
  double c2 = 0.0;
  double A = 0.0;
  double B = 0.0;
  double relative_residual = 0.0;  // rms of (T_fit - T) / T
  int points_used = 0;
  bool low_confidence = false;
};

/// Least squares fit of T = A - B log(c2 - c) (c2 above every sample).
LogPeriodFit fit_log_period(const std::vector<double>& c, const std::vector<double>& T,
                            double residual_threshold = 0.01);

/// Fit over the last `tail` points of a branch ending in a homoclinic approach.
LogPeriodFit locate_homoclinic(const ContinuationBranch& branch, int tail = 12, double residual_threshold = 0.01);

}  // namespace nhlab
