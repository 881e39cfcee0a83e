#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nhlab/types.hpp"

namespace nhlab {

struct PeriodicCoord {
  int index = 0;
  double period = kTwoPi;
};

/// Axis-aligned bounds per coordinate. Periodic coordinates carry
/// +/- infinity since they are stored unwrapped.
struct DomainBox {
  Vec lower;
  Vec upper;

  DomainBox() = default;
  DomainBox(Vec lo, Vec hi);
  [[nodiscard]] bool contains(const Vec& x) const;
};

/// A parametrized autonomous vector field x' = f(x; param).
///
/// New systems are built by filling the struct directly; `make_system`
/// covers the builtin ones. Values are immutable after construction and safe
/// to evaluate concurrently.
struct SystemDef {
  using VectorField = std::function<Vec(const Vec&, double)>;
  using JacobianField = std::function<Mat(const Vec&, double)>;

  std::string name;
  int dim = 0;
  double param = 0.0;
  VectorField rhs;
  JacobianField jacobian;
  VectorField param_derivative;  // df/dparam; may be empty
  std::vector<PeriodicCoord> periodic_coords;
  DomainBox domain;

  [[nodiscard]] Vec f(const Vec& x) const { return rhs(x, param); }
  [[nodiscard]] Mat df(const Vec& x) const { return jacobian(x, param); }
  [[nodiscard]] Vec dfdp(const Vec& x) const { return param_derivative(x, param); }
  [[nodiscard]] double divergence(const Vec& x) const { return df(x).trace(); }
  /// Reduces periodic coordinates into [0, period).
  [[nodiscard]] Vec wrap(const Vec& x) const;
};

/// Builtin systems: "example1" (a, theta), "example2" (x, y),
/// "example3" (a, zeta, theta) and "bundle-angle" (alpha, zeta).
/// Throws std::invalid_argument for unknown names and std::out_of_range
/// when the parameter lies outside the system's range.
SystemDef make_system(const std::string& name, double param);

/// x' = -f(x): the same orbits traversed backward. Repelling invariant sets
/// of `system` attract under the reversed field.
SystemDef time_reversed(const SystemDef& system);

/// Names accepted by make_system.
const std::vector<std::string>& builtin_system_names();

/// Exact fundamental matrix of example3 at beta = 0 along the fixed circle
/// a = zeta = 0, for any time t.
Mat closed_form_variational_ex3(double t);

/// Normal factor ||B_t(p)|| of example1 at p = (0, theta):
/// exp(-t/2 + (cos(theta) - cos(theta - beta t)) / beta), and
/// exp(-(1/2 + sin theta) t) when beta = 0.
double closed_form_normal_factor_ex1(double theta, double beta, double t);

}  // namespace nhlab
