#include "nhlab/torus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nhlab/ode.hpp"

namespace nhlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::out_of_range("beta must lie in [0, 1]");
}

void require_targets(const std::vector<double>& targets, double zeta0) {
  if (targets.empty()) throw std::invalid_argument("no zeta targets");
  if (!(zeta0 > 0.0)) throw std::invalid_argument("zeta0 must be positive");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i] > zeta0 && targets[i] < kPi)) throw std::invalid_argument("zeta targets must lie in (zeta0, pi)");
    if (i > 0 && !(targets[i] > targets[i - 1])) throw std::invalid_argument("zeta targets must increase");
  }
}

std::vector<double> labels(int n) {
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) s[static_cast<std::size_t>(k)] = kTwoPi * k / n;
  return s;
}

double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  return r < 0.0 ? r + kTwoPi : r;
}

std::vector<SectionCurve> transport_circle(double beta, const InitialCircle& init, const std::vector<double>& targets,
                                           int n, CurveProvenance prov, const std::string& boundary,
                                           const IntegratorConfig& cfg) {
  std::vector<SectionCurve> curves(targets.size());
  const auto s = labels(n);
  for (std::size_t j = 0; j < targets.size(); ++j) {
    auto& c = curves[j];
    c.zeta = targets[j];
    c.beta = beta;
    c.provenance = prov;
    c.boundary = boundary;
    c.s = s;
    c.a.assign(s.size(), kNaN);
    c.theta.assign(s.size(), kNaN);
    c.origin = init;
  }
  for (std::size_t k = 0; k < s.size(); ++k) {
    try {
      const auto pts = transport_label(beta, init, s[k], targets, cfg);
      for (std::size_t j = 0; j < targets.size(); ++j) {
        curves[j].a[k] = pts[j].a;
        curves[j].theta[k] = pts[j].theta;
      }
    } catch (const NumericalFailure& e) {
      for (auto& c : curves) {
        c.failed.push_back(k);
        if (c.diagnostic.empty()) c.diagnostic = e.what();
      }
    }
  }
  return curves;
}

}  // namespace

std::string to_string(CurveProvenance p) { return p == CurveProvenance::lambda_sweep ? "lambda-sweep" : "L-image"; }

InitialCircle slaved_circle(double beta, double zeta0) {
  const double amp = beta * beta * std::sin(zeta0) * std::sin(zeta0);
  return {zeta0, [amp](double s) { return amp * std::sin(s); }, [amp](double s) { return amp * std::cos(s); }};
}

InitialCircle constant_circle(double a, double zeta0) {
  return {zeta0, [a](double) { return a; }, [](double) { return 0.0; }};
}

std::vector<TransportedPoint> transport_label(double beta, const InitialCircle& init, double s,
                                              const std::vector<double>& zeta_targets, const IntegratorConfig& cfg) {
  require_targets(zeta_targets, init.zeta0);
  const double b2 = beta * beta;
  // State [a, theta, da/ds, dtheta/ds]; zeta is the integration variable.
  // The field is non-autonomous, so zeta rides along as a fifth component.
  const Field field = [b2](const Vec& y, Vec& dy) {
    const double sz = std::sin(y[4]);
    const double inv = 1.0 / (sz * sz);
    dy.resize(5);
    dy[0] = -y[0] * inv + b2 * std::sin(y[1]);
    dy[1] = y[0] * inv;
    dy[2] = -y[2] * inv + b2 * std::cos(y[1]) * y[3];
    dy[3] = y[2] * inv;
    dy[4] = 1.0;
  };
  Vec y(5);
  y << init.a0(s), s, init.a0_prime(s), 1.0, init.zeta0;
  IntegratorConfig c = cfg;
  c.dense_output = false;
  std::vector<TransportedPoint> out;
  out.reserve(zeta_targets.size());
  double z = init.zeta0;
  for (double target : zeta_targets) {
    const auto traj = integrate_field(field, y, z, target, c);
    if (!traj.ok()) throw NumericalFailure("transport to zeta=" + std::to_string(target) + ": " + traj.diagnostic());
    y = traj.back();
    z = target;
    out.push_back({target, y[0], y[1], y[2], y[3]});
  }
  return out;
}

std::vector<SectionCurve> sweep_invariant_set(double beta, double zeta0, const std::vector<double>& zeta_targets,
                                              int n_samples, const IntegratorConfig& cfg) {
  require_beta(beta);
  require_targets(zeta_targets, zeta0);
  if (n_samples < 64) throw std::invalid_argument("sweep_invariant_set: need at least 64 samples");
  return transport_circle(beta, slaved_circle(beta, zeta0), zeta_targets, n_samples, CurveProvenance::lambda_sweep,
                          "", cfg);
}

double check_lemma_bound(const std::vector<SectionCurve>& curves) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    if (c.zeta > kPi / 2 + 1e-12) throw std::invalid_argument("check_lemma_bound: section beyond zeta = pi/2");
    const double bound = std::sin(c.zeta) * std::sin(c.zeta);
    for (double a : c.a) {
      if (std::isnan(a)) continue;
      worst = std::max(worst, std::abs(a) - bound);
    }
  }
  return worst;
}

double l_half_width() {
  const double s = std::sin(kPi / 20);
  return s * s + 10.0;
}

std::vector<SectionCurve> image_of_L(double beta, const std::vector<double>& zeta_targets, int n_boundary_samples,
                                     const IntegratorConfig& cfg) {
  require_beta(beta);
  const double zeta0 = kPi / 20;
  require_targets(zeta_targets, zeta0);
  if (n_boundary_samples < 64) throw std::invalid_argument("image_of_L: need at least 64 boundary samples");
  const double w = l_half_width();
  auto upper = transport_circle(beta, constant_circle(w, zeta0), zeta_targets, n_boundary_samples,
                                CurveProvenance::l_image, "upper", cfg);
  auto lower = transport_circle(beta, constant_circle(-w, zeta0), zeta_targets, n_boundary_samples,
                                CurveProvenance::l_image, "lower", cfg);
  std::vector<SectionCurve> out;
  out.reserve(2 * zeta_targets.size());
  for (std::size_t j = 0; j < zeta_targets.size(); ++j) {
    out.push_back(std::move(upper[j]));
    out.push_back(std::move(lower[j]));
  }
  return out;
}

FoldReport detect_fold(const SectionCurve& curve, std::optional<std::pair<double, double>> window,
                       const IntegratorConfig& cfg) {
  const std::size_t n = curve.size();
  if (n < 64) throw std::invalid_argument("detect_fold: need at least 64 samples");
  if (curve.theta.size() != n || curve.a.size() != n) throw std::invalid_argument("detect_fold: ragged curve");

  // Increment i joins sample i to sample i + 1 (cyclically, one turn later).
  std::vector<double> d(n), ds(n);
  std::vector<bool> kept(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const double turn = j == 0 ? kTwoPi : 0.0;
    d[i] = curve.theta[j] + turn - curve.theta[i];
    ds[i] = curve.s[j] + turn - curve.s[i];
    bool k = std::isfinite(d[i]) && d[i] != 0.0;
    if (k && window) {
      double lo = window->first;
      double th = lo + wrap_angle(curve.theta[i] - lo);
      k = th <= window->second;
    }
    kept[i] = k;
  }

  FoldReport rep;
  rep.min_dtheta_ds = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (kept[i]) rep.min_dtheta_ds = std::min(rep.min_dtheta_ds, d[i] / ds[i]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (!kept[i] || !kept[j] || (d[i] > 0.0) == (d[j] > 0.0)) continue;
    ++rep.sign_reversals;
    // theta has a turning point near sample j, between labels s_i and s_{j+1}.
    const std::size_t v = j;
    FoldPoint fp{curve.s[v], curve.a[v], curve.theta[v]};
    if (curve.origin) {
      double lo = curve.s[i];
      double hi = curve.s[i] + ds[i] + ds[j];
      const double sign_lo = d[i] > 0.0 ? 1.0 : -1.0;
      const std::vector<double> target{curve.zeta};
      try {
        TransportedPoint mid{};
        while (hi - lo > 1e-6) {
          const double m = 0.5 * (lo + hi);
          mid = transport_label(curve.beta, *curve.origin, m, target, cfg).front();
          if (mid.dtheta_ds * sign_lo > 0.0) {
            lo = m;
          } else {
            hi = m;
          }
        }
        const double m = 0.5 * (lo + hi);
        mid = transport_label(curve.beta, *curve.origin, m, target, cfg).front();
        fp = {m, mid.a, mid.theta};
      } catch (const NumericalFailure&) {
        // keep the sample-resolution estimate
      }
    }
    rep.folds.push_back(fp);
  }
  rep.fold_present = rep.sign_reversals >= 2;
  return rep;
}

double backward_label(double beta, double zeta_target, double theta_target, double zeta0, double s_guess,
                      const IntegratorConfig& cfg) {
  require_beta(beta);
  const InitialCircle init = slaved_circle(beta, zeta0);
  const std::vector<double> target{zeta_target};
  double s = s_guess;
  for (int it = 0; it < 50; ++it) {
    const auto p = transport_label(beta, init, s, target, cfg).front();
    const double g = p.theta - theta_target;
    if (std::abs(g) <= 1e-12) return s;
    if (!(std::abs(p.dtheta_ds) > 1e-14)) break;
    s -= g / p.dtheta_ds;
  }
  throw NumericalFailure("backward_label: Newton did not converge");
}

}  // namespace nhlab
