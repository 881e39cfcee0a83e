#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nhlab/ode.hpp"
#include "nhlab/types.hpp"

namespace nhlab {

// Projectivized normal-bundle dynamics along E = {a = 0, theta = pi} of
// example3, with zeta as the independent variable:
//   dalpha/dzeta = (-cos a sin a - sin^2 a - beta^2 sin^2(zeta) cos^2 a) / sin^2(zeta)

enum class TerminalClass { homoclinic_to_origin, heteroclinic, unresolved };
std::string to_string(TerminalClass c);

inline constexpr double kClassifyThreshold = 0.05;

struct AngularOrbit {
  double beta = 0.0;
  std::vector<double> zeta;   // accepted steps, increasing
  std::vector<double> alpha;  // unwrapped
  int w_alpha = 0;
  int w_zeta = 0;
  double terminal_alpha = 0.0;
  TerminalClass terminal = TerminalClass::unresolved;
  Trajectory dense;  // state (alpha, zeta) against zeta

  /// alpha at any zeta inside the integrated range.
  [[nodiscard]] double alpha_at(double z) const { return dense(z)[0]; }
};

/// Right-hand side of the angle equation in zeta form.
double bundle_alpha_slope(double beta, double alpha, double zeta);

/// Throws std::invalid_argument unless 0 < zeta0 < zeta_end < pi, and
/// NumericalFailure when integration fails.
AngularOrbit integrate_bundle_angle(double beta, double alpha0, double zeta0, double zeta_end,
                                    const IntegratorConfig& cfg = {});

/// Distance of x to c modulo pi.
double distance_mod_pi(double x, double c);

/// w_alpha = round((alpha_end - alpha_start) / pi) and the terminal class:
/// alpha_end within kClassifyThreshold of 0 (mod pi) is homoclinic, of 3pi/4
/// heteroclinic, otherwise unresolved.
std::pair<int, TerminalClass> classify_winding(const AngularOrbit& orbit);

struct BranchOrbitOptions {
  double zeta0 = 1e-4;
  double zeta_end = kPi - 1e-4;
};

/// Orbit leaving (alpha, zeta) = (0, 0): launched at alpha0 = -beta^2 zeta0^2,
/// the slaved value along that orbit up to O(zeta0^3).
AngularOrbit unstable_branch_orbit(double beta, const IntegratorConfig& cfg = {}, const BranchOrbitOptions& opts = {});

struct CriticalBeta {
  double lo = 0.0;
  double hi = 0.0;
  double estimate = 0.0;
  int w_lo = 0;
  int w_hi = -1;
  int evaluations = 0;
};

using WindingClassifier = std::function<int(double beta)>;

/// Bisection on an integer classifier: requires classify(lo) != classify(hi)
/// (std::invalid_argument otherwise) and stops once hi - lo <= tol.
CriticalBeta bisect_on_classifier(const WindingClassifier& classify, double lo, double hi, double tol);

/// Bisection on the winding of unstable_branch_orbit; requires w = 0 at lo
/// and w = -1 at hi.
CriticalBeta bisect_beta_c(double lo = 0.65, double hi = 1.0, double tol = 1e-4, const IntegratorConfig& cfg = {},
                           const BranchOrbitOptions& opts = {});

/// Near beta_c the terminal angle at a fixed cutoff is not resolvable: the
/// orbit shadows the repelling point 3pi/4 and leaves it at a zeta that moves
/// to pi as beta -> beta_c. The readout refines the bracket to `tol`, finds the
/// first zeta where the two bracketing orbits separate by more than `split`,
/// and reports alpha there.
struct SeparatrixReadout {
  double beta_lo = 0.0;
  double beta_hi = 0.0;
  double zeta_split = 0.0;
  double alpha = 0.0;
  TerminalClass terminal = TerminalClass::unresolved;
};

SeparatrixReadout critical_terminal_alpha(const CriticalBeta& bracket, double tol = 1e-13, double split = 1e-2,
                                          const IntegratorConfig& cfg = {}, const BranchOrbitOptions& opts = {});

struct BundleFrame {
  double beta = 0.0;
  std::vector<double> zeta;
  std::vector<double> alpha;
  std::vector<double> da;      // sin(alpha), the d/da component
  std::vector<double> dtheta;  // cos(alpha), the d/dtheta component
};

/// Unit fiber vectors along E from the unstable branch orbit at each zeta in
/// (0, pi). Below the launch point alpha takes its slaved value; the orbit is
/// run up to the largest grid point when that exceeds the default cutoff.
BundleFrame bundle_frame_vectors(double beta, const std::vector<double>& zeta_grid, const IntegratorConfig& cfg = {});

}  // namespace nhlab
