#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nhlab/ode.hpp"
#include "nhlab/systems.hpp"

namespace nhlab {

/// Orthonormal tangent and normal bases at one point; one basis vector per column.
struct FrameBases {
  Mat tangent;
  Mat normal;
};

/// Builtin analytic invariant sets.
enum class ManifoldKind {
  circle_ex1,      // {a = 0} of example1
  circle_ex3,      // Gamma = {a = 0, zeta = 0} of example3
  torus_ex3_at_gamma,  // T0 = {a = 0} of example3, used at points of Gamma
};

ManifoldKind parse_manifold_kind(const std::string& name);
std::string to_string(ManifoldKind kind);

/// Map p -> (tangent basis, normal basis) for a candidate invariant manifold.
class ManifoldFrame {
 public:
  using BasisMap = std::function<FrameBases(const Vec&)>;

  ManifoldFrame(std::string name, BasisMap bases) : name_(std::move(name)), bases_(std::move(bases)) {}

  [[nodiscard]] const std::string& name() const { return name_; }
  /// Bases at p; throws std::domain_error when p is off the manifold.
  [[nodiscard]] FrameBases at(const Vec& p) const { return bases_(p); }

 private:
  std::string name_;
  BasisMap bases_;
};

/// Exact coordinate-axis bases of the builtin manifolds. Throws
/// std::domain_error when p is off the manifold by more than 1e-10.
FrameBases frame_for(ManifoldKind manifold, const Vec& p);
ManifoldFrame make_frame(ManifoldKind manifold);

/// Frame along a periodic orbit of a planar system: tangent f/|f|, normal its
/// rotation by +pi/2.
ManifoldFrame planar_cycle_frame(const SystemDef& system);

/// Largest deviation from orthonormality / complementarity of the bases.
double frame_defect(const FrameBases& bases);

struct TangentialOperator {
  Mat matrix;                      // tangent-at-p -> tangent-at-q coordinates
  double tangency_residual = 0.0;  // norm of the image component off T_q M
  bool frame_invariant = true;     // residual <= kTangencyThreshold
};

inline constexpr double kTangencyThreshold = 1e-4;

/// A_t(p): backward linearized flow restricted to T_p M, in tangent coordinates at q = phi^{-t}(p).
TangentialOperator operator_A(const SystemDef& system, const ManifoldFrame& frame, const Vec& p, double t,
                              const IntegratorConfig& cfg = {});

/// B_t(p): forward linearized flow from q = phi^{-t}(p) applied to N_q,
/// projected orthogonally onto N_p.
Mat operator_B(const SystemDef& system, const ManifoldFrame& frame, const Vec& p, double t,
               const IntegratorConfig& cfg = {});

struct TypeNumberSample {
  double t = 0.0;
  double norm_A = 0.0;
  double norm_B = 0.0;
  double nu = 0.0;
  std::optional<double> sigma;  // empty where ||B_t|| >= 1
  double tangency_residual = 0.0;
};

struct TypeNumberEstimate {
  std::vector<TypeNumberSample> samples;
  double nu_tail = 0.0;
  std::optional<double> sigma_tail;  // max of valid sigma over the tail quarter
  bool frame_invariant = true;

  /// nu < 1 and sigma < 1 (r = 1).
  [[nodiscard]] bool normally_hyperbolic() const {
    return frame_invariant && nu_tail < 1.0 && sigma_tail.has_value() && *sigma_tail < 1.0;
  }
};

/// Finite-time estimates of nu and sigma at grid times; the lim sup is
/// approximated by the max over the last quarter of the grid.
TypeNumberEstimate estimate_type_numbers(const SystemDef& system, const ManifoldFrame& frame, const Vec& p,
                                         const std::vector<double>& t_grid, const IntegratorConfig& cfg = {});

inline constexpr double kPeriodicityTolerance = 1e-6;

/// Same estimator on a periodic orbit through p at grid k * period, built from
/// powers of the diagonal blocks of the monodromy matrix in the frame at p.
/// Only one period is integrated, so orbits that are unstable in either time
/// direction stay usable. tangency_residual is the one-period off block.
TypeNumberEstimate estimate_periodic_type_numbers(const SystemDef& system, const ManifoldFrame& frame, const Vec& p,
                                                  double period, int periods, const IntegratorConfig& cfg = {});

/// {k * spacing : k = 1..count}
std::vector<double> uniform_grid(double spacing, int count);

/// Number of trailing grid entries entering the tail summaries.
std::size_t tail_count(std::size_t n);

}  // namespace nhlab
