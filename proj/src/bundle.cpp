#include "nhlab/bundle.hpp"

#include <algorithm>
#include <cmath>

namespace nhlab {

std::string to_string(TerminalClass c) {
  switch (c) {
    case TerminalClass::homoclinic_to_origin: return "homoclinic-to-origin";
    case TerminalClass::heteroclinic: return "heteroclinic-to-(3pi/4,0)";
    case TerminalClass::unresolved: return "unresolved";
  }
  return "unknown";
}

double bundle_alpha_slope(double beta, double alpha, double zeta) {
  const double ca = std::cos(alpha), sa = std::sin(alpha), sz = std::sin(zeta);
  const double s2 = sz * sz;
  return (-ca * sa - sa * sa) / s2 - beta * beta * ca * ca;
}

double distance_mod_pi(double x, double c) { return std::abs(std::remainder(x - c, kPi)); }

AngularOrbit integrate_bundle_angle(double beta, double alpha0, double zeta0, double zeta_end,
                                    const IntegratorConfig& cfg) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::out_of_range("integrate_bundle_angle: beta must lie in [0, 1]");
  if (!(zeta0 > 0.0 && zeta0 < zeta_end && zeta_end < kPi)) {
    throw std::invalid_argument("integrate_bundle_angle: need 0 < zeta0 < zeta_end < pi");
  }
  if (!std::isfinite(alpha0)) throw std::invalid_argument("integrate_bundle_angle: alpha0 must be finite");
  const Field field = [beta](const Vec& y, Vec& dy) {
    dy.resize(2);
    dy[0] = bundle_alpha_slope(beta, y[0], y[1]);
    dy[1] = 1.0;
  };
  IntegratorConfig c = cfg;
  c.dense_output = true;
  AngularOrbit orbit;
  orbit.beta = beta;
  orbit.dense = integrate_field(field, Eigen::Vector2d(alpha0, zeta0), zeta0, zeta_end, c);
  if (!orbit.dense.ok()) throw NumericalFailure("integrate_bundle_angle: " + orbit.dense.diagnostic());
  orbit.zeta = orbit.dense.times();
  orbit.alpha.reserve(orbit.zeta.size());
  for (const auto& y : orbit.dense.states()) orbit.alpha.push_back(y[0]);
  orbit.terminal_alpha = orbit.alpha.back();
  orbit.w_zeta = static_cast<int>(std::lround((orbit.zeta.back() - orbit.zeta.front()) / kPi));
  const auto [w, cls] = classify_winding(orbit);
  orbit.w_alpha = w;
  orbit.terminal = cls;
  return orbit;
}

std::pair<int, TerminalClass> classify_winding(const AngularOrbit& orbit) {
  if (orbit.alpha.empty()) throw std::invalid_argument("classify_winding: empty orbit");
  const double a0 = orbit.alpha.front(), a1 = orbit.alpha.back();
  const int w = static_cast<int>(std::lround((a1 - a0) / kPi));
  TerminalClass cls = TerminalClass::unresolved;
  if (distance_mod_pi(a1, 0.0) <= kClassifyThreshold) {
    cls = TerminalClass::homoclinic_to_origin;
  } else if (distance_mod_pi(a1, 0.75 * kPi) <= kClassifyThreshold) {
    cls = TerminalClass::heteroclinic;
  }
  return {w, cls};
}

AngularOrbit unstable_branch_orbit(double beta, const IntegratorConfig& cfg, const BranchOrbitOptions& opts) {
  const double alpha0 = -beta * beta * opts.zeta0 * opts.zeta0;
  return integrate_bundle_angle(beta, alpha0, opts.zeta0, opts.zeta_end, cfg);
}

CriticalBeta bisect_on_classifier(const WindingClassifier& classify, double lo, double hi, double tol) {
  if (!(lo < hi)) throw std::invalid_argument("bisect: need lo < hi");
  if (!(tol > 0.0)) throw std::invalid_argument("bisect: tolerance must be positive");
  CriticalBeta out;
  out.lo = lo;
  out.hi = hi;
  out.w_lo = classify(lo);
  out.w_hi = classify(hi);
  out.evaluations = 2;
  if (out.w_lo == out.w_hi) {
    throw std::invalid_argument("bisect: endpoints do not straddle a transition (both have winding " +
                                std::to_string(out.w_lo) + ")");
  }
  while (out.hi - out.lo > tol) {
    const double mid = 0.5 * (out.lo + out.hi);
    if (mid <= out.lo || mid >= out.hi) break;
    const int w = classify(mid);
    ++out.evaluations;
    if (w == out.w_lo) {
      out.lo = mid;
    } else if (w == out.w_hi) {
      out.hi = mid;
    } else {
      throw std::runtime_error("bisect: third winding value " + std::to_string(w) + " at " + std::to_string(mid));
    }
  }
  out.estimate = 0.5 * (out.lo + out.hi);
  return out;
}

CriticalBeta bisect_beta_c(double lo, double hi, double tol, const IntegratorConfig& cfg,
                           const BranchOrbitOptions& opts) {
  const auto classify = [&](double b) { return unstable_branch_orbit(b, cfg, opts).w_alpha; };
  CriticalBeta out = bisect_on_classifier(classify, lo, hi, tol);
  if (out.w_lo != 0 || out.w_hi != -1) {
    throw std::invalid_argument("bisect_beta_c: expected winding 0 at lo and -1 at hi, got " +
                                std::to_string(out.w_lo) + " and " + std::to_string(out.w_hi));
  }
  return out;
}

SeparatrixReadout critical_terminal_alpha(const CriticalBeta& bracket, double tol, double split,
                                          const IntegratorConfig& cfg, const BranchOrbitOptions& opts) {
  const auto classify = [&](double b) { return unstable_branch_orbit(b, cfg, opts).w_alpha; };
  const CriticalBeta fine = bisect_on_classifier(classify, bracket.lo, bracket.hi, tol);
  const AngularOrbit lo = unstable_branch_orbit(fine.lo, cfg, opts);
  const AngularOrbit hi = unstable_branch_orbit(fine.hi, cfg, opts);

  SeparatrixReadout out;
  out.beta_lo = fine.lo;
  out.beta_hi = fine.hi;
  constexpr int kGrid = 200000;
  const double z0 = opts.zeta0, z1 = opts.zeta_end;
  out.zeta_split = z1;
  for (int k = 0; k <= kGrid; ++k) {
    const double z = k == kGrid ? z1 : z0 + (z1 - z0) * k / kGrid;
    if (std::abs(lo.alpha_at(z) - hi.alpha_at(z)) > split) {
      out.zeta_split = z;
      break;
    }
  }
  out.alpha = 0.5 * (lo.alpha_at(out.zeta_split) + hi.alpha_at(out.zeta_split));
  if (distance_mod_pi(out.alpha, 0.75 * kPi) <= kClassifyThreshold) {
    out.terminal = TerminalClass::heteroclinic;
  } else if (distance_mod_pi(out.alpha, 0.0) <= kClassifyThreshold) {
    out.terminal = TerminalClass::homoclinic_to_origin;
  }
  return out;
}

BundleFrame bundle_frame_vectors(double beta, const std::vector<double>& zeta_grid, const IntegratorConfig& cfg) {
  if (zeta_grid.empty()) throw std::invalid_argument("bundle_frame_vectors: empty grid");
  for (double z : zeta_grid) {
    if (!(z > 0.0 && z < kPi)) throw std::invalid_argument("bundle_frame_vectors: grid must lie in (0, pi)");
  }
  BranchOrbitOptions opts;
  opts.zeta_end = std::max(opts.zeta_end, *std::max_element(zeta_grid.begin(), zeta_grid.end()));
  const AngularOrbit orbit = unstable_branch_orbit(beta, cfg, opts);
  BundleFrame f;
  f.beta = beta;
  for (double z : zeta_grid) {
    const double a = z < opts.zeta0 ? -beta * beta * z * z : orbit.alpha_at(z);
    f.zeta.push_back(z);
    f.alpha.push_back(a);
    f.da.push_back(std::sin(a));
    f.dtheta.push_back(std::cos(a));
  }
  return f;
}

}  // namespace nhlab
