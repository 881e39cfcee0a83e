#pragma once

// Dormand-Prince 5(4) embedded pair with FSAL and the 4th-order continuous
// extension of Hairer, Norsett & Wanner (DOPRI5 "contd5").

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "nhlab/types.hpp"

namespace nhlab {

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 1'000'000;
  bool dense_output = true;
  double initial_step = 0.0;  // 0 selects the step automatically

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
      throw std::invalid_argument("IntegratorConfig: tolerances must be positive");
    }
    if (max_steps <= 0) throw std::invalid_argument("IntegratorConfig: max_steps must be positive");
    if (!(max_step > 0.0)) throw std::invalid_argument("IntegratorConfig: max_step must be positive");
  }
};

enum class IntegrationStatus {
  success,
  stopped,  // an observer requested termination
  max_steps_exceeded,
  step_underflow,
  non_finite,
};

inline const char* to_string(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::success: return "success";
    case IntegrationStatus::stopped: return "stopped";
    case IntegrationStatus::max_steps_exceeded: return "max_steps_exceeded";
    case IntegrationStatus::step_underflow: return "step_underflow";
    case IntegrationStatus::non_finite: return "non_finite";
  }
  return "unknown";
}

/// One accepted step together with its continuous extension.
///
/// The interpolant is y(t0 + th*h) = c0 + th*(c1 + (1-th)*(c2 + th*(c3 + (1-th)*c4)))
/// with th in [0, 1]; it reproduces both step endpoints.
template <class Scalar>
struct DenseSegment {
  Scalar t0{};
  Scalar t1{};
  MatrixX<Scalar> coeffs;  // dim x 5
  VectorX<Scalar> y1;      // exact endpoint, returned verbatim at t1

  [[nodiscard]] VectorX<Scalar> operator()(Scalar t) const {
    if (t == t1) return y1;
    if (t == t0) return coeffs.col(0);
    const Scalar th = (t - t0) / (t1 - t0);
    const Scalar th1 = Scalar(1) - th;
    return coeffs.col(0) +
           th * (coeffs.col(1) + th1 * (coeffs.col(2) + th * (coeffs.col(3) + th1 * coeffs.col(4))));
  }

  /// Time derivative of the interpolant.
  [[nodiscard]] VectorX<Scalar> derivative(Scalar t) const {
    const Scalar h = t1 - t0;
    const Scalar th = (t - t0) / h;
    // d/dth of th*(c1 + (1-th)*(c2 + th*(c3 + (1-th)*c4)))
    const Scalar u = Scalar(1) - th;
    const VectorX<Scalar> inner = coeffs.col(3) + u * coeffs.col(4);
    const VectorX<Scalar> inner_d = -coeffs.col(4);
    const VectorX<Scalar> mid = coeffs.col(2) + th * inner;
    const VectorX<Scalar> mid_d = inner + th * inner_d;
    const VectorX<Scalar> outer = coeffs.col(1) + u * mid;
    const VectorX<Scalar> outer_d = -mid + u * mid_d;
    return (outer + th * outer_d) / h;
  }
};

namespace detail {

template <class Scalar>
Scalar scaled_rms(const VectorX<Scalar>& v, const VectorX<Scalar>& ya, const VectorX<Scalar>& yb,
                  const IntegratorConfig& cfg) {
  using std::abs;
  using std::sqrt;
  Scalar acc = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const Scalar sc = Scalar(cfg.abs_tol) + Scalar(cfg.rel_tol) * std::max(abs(ya[i]), abs(yb[i]));
    const Scalar r = v[i] / sc;
    acc += r * r;
  }
  return sqrt(acc / Scalar(v.size()));
}

}  // namespace detail

/// Integrates the autonomous system y' = field(y) from t0 to t1 (either
/// direction). `field(y, dy)` writes the derivative into `dy`. `observe`
/// receives every accepted step as a DenseSegment and returns false to stop.
/// `diagnostic` is filled on abnormal termination.
template <class Scalar, class Field, class Observer>
IntegrationStatus dopri5(Field&& field, VectorX<Scalar> y, Scalar t0, Scalar t1,
                         const IntegratorConfig& cfg, Observer&& observe, std::string& diagnostic) {
  using std::abs;
  using std::pow;
  cfg.validate();
  if (t1 == t0) return IntegrationStatus::success;

  // Butcher tableau.
  constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
  constexpr double a21 = 1.0 / 5.0;
  constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                   a54 = -212.0 / 729.0;
  constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                   a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                   a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
  // Error coefficients: 5th-order weights minus embedded 4th-order weights.
  constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                   e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  // Continuous extension.
  constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                   d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                   d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  const Eigen::Index n = y.size();
  const Scalar dir = t1 > t0 ? Scalar(1) : Scalar(-1);
  const Scalar span = abs(t1 - t0);
  const Scalar hmax = std::min<Scalar>(Scalar(cfg.max_step), span);

  VectorX<Scalar> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  field(y, k1);
  if (!k1.allFinite() || !y.allFinite()) {
    diagnostic = "non-finite initial state or derivative";
    return IntegrationStatus::non_finite;
  }

  Scalar h;
  if (cfg.initial_step > 0.0) {
    h = std::min<Scalar>(Scalar(cfg.initial_step), hmax);
  } else {
    const Scalar d0 = detail::scaled_rms<Scalar>(y, y, y, cfg);
    const Scalar d1n = detail::scaled_rms<Scalar>(k1, y, y, cfg);
    Scalar h0 = (d0 < Scalar(1e-5) || d1n < Scalar(1e-5)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1n;
    h0 = std::min(h0, hmax);
    ytmp = y + dir * h0 * k1;
    field(ytmp, k2);
    const Scalar d2 = detail::scaled_rms<Scalar>(VectorX<Scalar>(k2 - k1), y, y, cfg) / h0;
    const Scalar dm = std::max(d1n, d2);
    const Scalar h1 = dm <= Scalar(1e-15) ? std::max(Scalar(1e-6), h0 * Scalar(1e-3))
                                          : pow(Scalar(0.01) / dm, Scalar(1) / Scalar(5));
    h = std::min({Scalar(100) * h0, h1, hmax});
    if (!(h > 0)) h = std::min(Scalar(1e-6), hmax);
  }

  Scalar t = t0;
  long steps = 0;
  bool last_rejected = false;
  while (true) {
    if (steps >= cfg.max_steps) {
      diagnostic = "step budget exhausted at t=" + std::to_string(static_cast<double>(t));
      return IntegrationStatus::max_steps_exceeded;
    }
    const Scalar remaining = abs(t1 - t);
    bool final_step = false;
    if (h >= remaining) {
      h = remaining;
      final_step = true;
    }
    if (h <= Scalar(16) * std::numeric_limits<Scalar>::epsilon() * std::max(abs(t), Scalar(1))) {
      diagnostic = "step size underflow at t=" + std::to_string(static_cast<double>(t));
      return IntegrationStatus::step_underflow;
    }
    const Scalar hs = dir * h;
    ytmp = y + hs * (a21 * k1);
    field(ytmp, k2);
    ytmp = y + hs * (a31 * k1 + a32 * k2);
    field(ytmp, k3);
    ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    field(ytmp, k4);
    ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    field(ytmp, k5);
    ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    field(ytmp, k6);
    ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    field(ynew, k7);
    ++steps;

    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const Scalar enorm = detail::scaled_rms<Scalar>(err, y, ynew, cfg);

    if (!(enorm == enorm) || !ynew.allFinite() || !k7.allFinite()) {
      h *= Scalar(0.2);
      last_rejected = true;
      if (h <= Scalar(16) * std::numeric_limits<Scalar>::epsilon() * std::max(abs(t), Scalar(1))) {
        diagnostic = "non-finite state near t=" + std::to_string(static_cast<double>(t));
        return IntegrationStatus::non_finite;
      }
      continue;
    }

    if (enorm <= Scalar(1)) {
      const Scalar tnew = final_step ? t1 : t + hs;
      DenseSegment<Scalar> seg;
      seg.t0 = t;
      seg.t1 = tnew;
      seg.y1 = ynew;
      if (cfg.dense_output) {
        seg.coeffs.resize(n, 5);
        seg.coeffs.col(0) = y;
        seg.coeffs.col(1) = ynew - y;
        seg.coeffs.col(2) = hs * k1 - seg.coeffs.col(1);
        seg.coeffs.col(3) = seg.coeffs.col(1) - hs * k7 - seg.coeffs.col(2);
        seg.coeffs.col(4) = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      }
      y = ynew;
      k1 = k7;
      t = tnew;
      if (!observe(static_cast<const DenseSegment<Scalar>&>(seg))) return IntegrationStatus::stopped;
      if (final_step) return IntegrationStatus::success;
      Scalar fac = Scalar(0.9) * pow(std::max(enorm, Scalar(1e-10)), Scalar(-0.2));
      fac = std::clamp(fac, Scalar(0.2), last_rejected ? Scalar(1) : Scalar(10));
      h = std::min(h * fac, hmax);
      last_rejected = false;
    } else {
      Scalar fac = Scalar(0.9) * pow(enorm, Scalar(-0.2));
      h *= std::max(fac, Scalar(0.2));
      last_rejected = true;
    }
  }
}

}  // namespace nhlab
