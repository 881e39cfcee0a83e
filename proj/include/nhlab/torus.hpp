#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nhlab/dopri5.hpp"
#include "nhlab/types.hpp"

namespace nhlab {

// Example3 transported across constant-zeta sections, with zeta as the
// independent variable:
//   da/dzeta = (-a + beta^2 sin^2(zeta) sin(theta)) / sin^2(zeta)
//   dtheta/dzeta = a / sin^2(zeta)

enum class CurveProvenance { lambda_sweep, l_image };
std::string to_string(CurveProvenance p);

/// Initial circle {a = a0(s), zeta = zeta0, theta = s}; a0_prime is da0/ds.
struct InitialCircle {
  double zeta0 = 0.01;
  std::function<double(double)> a0;
  std::function<double(double)> a0_prime;
};

/// Leading-order slaved circle a0(s) = beta^2 sin^2(zeta0) sin(s).
InitialCircle slaved_circle(double beta, double zeta0);
/// Constant circle a0(s) = a.
InitialCircle constant_circle(double a, double zeta0);

struct SectionCurve {
  double zeta = 0.0;
  double beta = 0.0;
  CurveProvenance provenance = CurveProvenance::lambda_sweep;
  std::string boundary;  // "upper"/"lower" for images of L, empty otherwise
  std::vector<double> s;
  std::vector<double> a;
  std::vector<double> theta;           // unwrapped
  std::vector<std::size_t> failed;     // sample indices whose transport failed (a, theta are NaN)
  std::string diagnostic;
  std::optional<InitialCircle> origin;  // lets fold detection re-sample labels

  [[nodiscard]] std::size_t size() const { return s.size(); }
};

/// State of one transported label: (a, theta) and their label derivatives.
struct TransportedPoint {
  double zeta = 0.0;
  double a = 0.0;
  double theta = 0.0;
  double da_ds = 0.0;
  double dtheta_ds = 0.0;
};

/// Transports label s from the initial circle to each target (increasing,
/// above zeta0, below pi). Throws NumericalFailure on integration failure.
std::vector<TransportedPoint> transport_label(double beta, const InitialCircle& init, double s,
                                              const std::vector<double>& zeta_targets, const IntegratorConfig& cfg = {});

/// One curve per target, from the slaved circle at zeta0 with n labels
/// s_k = 2 pi k / n.
std::vector<SectionCurve> sweep_invariant_set(double beta, double zeta0, const std::vector<double>& zeta_targets,
                                              int n_samples, const IntegratorConfig& cfg = {});

/// max over samples of |a| - sin^2(zeta). Requires zeta <= pi/2.
double check_lemma_bound(const std::vector<SectionCurve>& curves);

/// Half-width of L in a at zeta = pi/20.
double l_half_width();

/// Boundary circles a = +/- l_half_width() at zeta = pi/20 transported to each
/// target; output is target-major, upper boundary first.
std::vector<SectionCurve> image_of_L(double beta, const std::vector<double>& zeta_targets, int n_boundary_samples,
                                     const IntegratorConfig& cfg = {});

struct FoldPoint {
  double s = 0.0;
  double a = 0.0;
  double theta = 0.0;
};

struct FoldReport {
  bool fold_present = false;
  int sign_reversals = 0;
  std::vector<FoldPoint> folds;
  double min_dtheta_ds = 0.0;
};

/// Counts sign reversals of consecutive theta increments (the closing
/// increment included). With a window (theta_lo, theta_hi) only increments
/// starting at theta mod 2pi inside the window count. Fold points are refined
/// by bisection on dtheta/ds to label resolution 1e-6 when the curve carries
/// its initial circle.
FoldReport detect_fold(const SectionCurve& curve, std::optional<std::pair<double, double>> window = std::nullopt,
                       const IntegratorConfig& cfg = {});

/// Label at zeta0 whose slaved-circle orbit passes through theta_target at
/// zeta_target; approximates the backward-limit phase of that point.
double backward_label(double beta, double zeta_target, double theta_target, double zeta0, double s_guess,
                      const IntegratorConfig& cfg = {});

}  // namespace nhlab
