#include "nhlab/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace nhlab {

namespace {

// Sub-intervals per accepted step scanned for sign changes, so that a step
// straddling two nearby crossings still reports both.
constexpr int kScanPoints = 4;
constexpr double kSectionTol = 1e-12;

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Scans one dense segment for crossings of `section`. Calls `emit` for each
// refined event in integration order; stops early when emit returns false.
template <class Emit>
bool scan_segment(const DenseSegment<double>& seg, const Section& section, Emit&& emit) {
  std::array<double, kScanPoints + 1> ts{};
  std::array<double, kScanPoints + 1> gs{};
  for (int i = 0; i <= kScanPoints; ++i) {
    ts[i] = i == kScanPoints ? seg.t1 : seg.t0 + (seg.t1 - seg.t0) * i / kScanPoints;
    gs[i] = section.value(seg(ts[i]));
  }
  const double dt_sign = seg.t1 > seg.t0 ? 1.0 : -1.0;
  for (int i = 0; i < kScanPoints; ++i) {
    const double ga = gs[i], gb = gs[i + 1];
    const bool crosses = (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0);
    if (!crosses) continue;
    const int dir = sign_of((gb - ga) * dt_sign);
    if (section.direction != CrossingDirection::either && dir != static_cast<int>(section.direction)) {
      continue;
    }
    double tc = ts[i + 1];
    if (gb != 0.0) {
      tc = bracketed_root([&](double t) { return section.value(seg(t)); }, ts[i], ts[i + 1], kSectionTol);
    }
    SectionEvent ev{tc, seg(tc), dir};
    if (!section.admits(ev.state)) continue;
    if (!emit(std::move(ev))) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory

std::size_t Trajectory::segment_index(double t) const {
  if (segments_.empty()) throw std::logic_error("Trajectory: no dense output available");
  const bool forward = times_.back() >= times_.front();
  // times_[k] is the start of segment k.
  auto it = forward ? std::upper_bound(times_.begin(), times_.end(), t)
                    : std::upper_bound(times_.begin(), times_.end(), t, std::greater<>());
  std::size_t k = static_cast<std::size_t>(std::distance(times_.begin(), it));
  k = k == 0 ? 0 : k - 1;
  return std::min(k, segments_.size() - 1);
}

Vec Trajectory::operator()(double t) const {
  const double lo = std::min(times_.front(), times_.back());
  const double hi = std::max(times_.front(), times_.back());
  if (t < lo || t > hi) throw std::out_of_range("Trajectory: time outside the integrated interval");
  if (times_.size() == 1) return states_.front();
  return segments_[segment_index(t)](t);
}

void Trajectory::append(const DenseSegment<double>& seg, bool keep_dense) {
  times_.push_back(seg.t1);
  states_.push_back(seg.y1);
  if (keep_dense) segments_.push_back(seg);
}

// ---------------------------------------------------------------------------
// Integration

Trajectory integrate_field(const Field& field, Vec x0, double t0, double t1, const IntegratorConfig& cfg,
                           const StopRule& stop) {
  if (!x0.allFinite()) throw std::invalid_argument("integrate: initial state must be finite");
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw std::invalid_argument("integrate: non-finite time span");
  const int dim = static_cast<int>(x0.size());
  Trajectory traj(dim, t0, x0);
  const int escape_dims = stop.escape_dims > 0 ? stop.escape_dims : dim;
  const bool keep_dense = cfg.dense_output || stop.section.has_value();
  bool escaped = false;

  auto observer = [&](const DenseSegment<double>& seg) {
    traj.append(seg, keep_dense);
    if (stop.section) {
      bool hit = false;
      scan_segment(seg, *stop.section, [&](SectionEvent ev) {
        if (std::abs(ev.t - t0) < stop.min_elapsed) return true;
        traj.set_stop_event(std::move(ev));
        hit = true;
        return false;
      });
      if (hit) return false;
    }
    if (stop.escape_radius > 0.0 && seg.y1.head(escape_dims).cwiseAbs().maxCoeff() > stop.escape_radius) {
      escaped = true;
      return false;
    }
    return true;
  };

  std::string diag;
  const auto status = dopri5<double>([&](const Vec& y, Vec& dy) { field(y, dy); }, std::move(x0), t0, t1, cfg,
                                     observer, diag);
  if (escaped) {
    traj.set_status(IntegrationStatus::non_finite,
                    "trajectory left the escape radius at t=" + std::to_string(traj.t_end()));
  } else {
    traj.set_status(status, diag);
  }
  return traj;
}

Trajectory integrate(const SystemDef& system, const Vec& x0, double t0, double t1, const IntegratorConfig& cfg,
                     const StopRule& stop) {
  if (x0.size() != system.dim) throw std::invalid_argument("integrate: state dimension mismatch");
  const Field field = [&system](const Vec& y, Vec& dy) { dy = system.f(y); };
  return integrate_field(field, x0, t0, t1, cfg, stop);
}

// ---------------------------------------------------------------------------
// Variational flow

Field variational_field(const SystemDef& system, VariationalOptions opts) {
  if (opts.param_sensitivity && !system.param_derivative) {
    throw std::invalid_argument("variational_field: system has no parameter derivative");
  }
  const int n = system.dim;
  return [system, n, opts](const Vec& y, Vec& dy) {
    dy.resize(y.size());
    const Vec x = y.head(n);
    const Mat j = system.df(x);
    dy.head(n) = system.f(x);
    Eigen::Map<const Mat> phi(y.data() + n, n, n);
    Eigen::Map<Mat>(dy.data() + n, n, n).noalias() = j * phi;
    Eigen::Index off = n + n * n;
    if (opts.param_sensitivity) {
      dy.segment(off, n).noalias() = j * y.segment(off, n);
      dy.segment(off, n) += system.dfdp(x);
      off += n;
    }
    if (opts.divergence_integral) dy[off] = j.trace();
  };
}

Vec variational_initial(const Vec& x0, VariationalOptions opts) {
  const Eigen::Index n = x0.size();
  const Eigen::Index size = n + n * n + (opts.param_sensitivity ? n : 0) + (opts.divergence_integral ? 1 : 0);
  Vec y = Vec::Zero(size);
  y.head(n) = x0;
  Eigen::Map<Mat>(y.data() + n, n, n).setIdentity();
  return y;
}

Vec VariationalSolution::sensitivity_of(const Vec& aug) const {
  if (!opts_.param_sensitivity) throw std::logic_error("VariationalSolution: sensitivity not integrated");
  return aug.segment(dim_ + dim_ * dim_, dim_);
}

double VariationalSolution::divergence_integral_of(const Vec& aug) const {
  if (!opts_.divergence_integral) throw std::logic_error("VariationalSolution: divergence not integrated");
  return aug[aug.size() - 1];
}

Trajectory VariationalSolution::base() const {
  Trajectory out(dim_, aug_.t_begin(), state_of(aug_.front()));
  for (std::size_t i = 0; i < aug_.segments().size(); ++i) {
    const auto& s = aug_.segments()[i];
    DenseSegment<double> b{s.t0, s.t1, s.coeffs.topRows(dim_), s.y1.head(dim_)};
    out.append(b, true);
  }
  out.set_status(aug_.status(), aug_.diagnostic());
  return out;
}

VariationalSolution integrate_variational(const SystemDef& system, const Vec& x0, double t0, double t1,
                                          const IntegratorConfig& cfg, VariationalOptions opts,
                                          const StopRule& stop) {
  if (x0.size() != system.dim) throw std::invalid_argument("integrate_variational: state dimension mismatch");
  StopRule rule = stop;
  if (rule.escape_radius > 0.0 && rule.escape_dims == 0) rule.escape_dims = system.dim;
  auto traj = integrate_field(variational_field(system, opts), variational_initial(x0, opts), t0, t1, cfg, rule);
  return VariationalSolution(std::move(traj), system.dim, opts);
}

// ---------------------------------------------------------------------------
// Sections

std::vector<SectionEvent> section_crossings(const Trajectory& traj, const Section& section) {
  if (section.normal.size() == 0 || section.normal.norm() == 0.0) {
    throw std::invalid_argument("section_crossings: section normal must be nonzero");
  }
  if (section.point.size() != section.normal.size() || section.normal.size() > traj.dim()) {
    throw std::invalid_argument("section_crossings: section dimension mismatch");
  }
  std::vector<SectionEvent> out;
  if (traj.size() < 2) return out;
  if (traj.segments().empty()) throw std::invalid_argument("section_crossings: trajectory lacks dense output");
  for (const auto& seg : traj.segments()) {
    scan_segment(seg, section, [&](SectionEvent ev) {
      out.push_back(std::move(ev));
      return true;
    });
  }
  return out;
}

std::vector<SectionEvent> section_crossings(const Trajectory& traj, const Vec& section_point,
                                            const Vec& section_normal, CrossingDirection direction) {
  return section_crossings(traj, Section{section_point, section_normal, direction, Vec()});
}

// ---------------------------------------------------------------------------
// Linear algebra helpers

namespace {

double largest_eigenvalue_sym3(const Mat& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  if (p1 == 0.0) return a.diagonal().maxCoeff();
  const double q = a.trace() / 3.0;
  const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q) +
                    2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const Mat b = (a - q * Mat::Identity(3, 3)) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return q + 2.0 * p * std::cos(phi);
}

}  // namespace

double operator_norm(const Mat& m) {
  if (!m.allFinite()) throw std::invalid_argument("operator_norm: non-finite entries");
  if (m.size() == 0) return 0.0;
  const Mat s = m.cols() <= m.rows() ? Mat(m.transpose() * m) : Mat(m * m.transpose());
  switch (s.rows()) {
    case 1:
      return std::sqrt(s(0, 0));
    case 2: {
      const double tr = s(0, 0) + s(1, 1);
      const double disc = std::hypot(s(0, 0) - s(1, 1), 2.0 * s(0, 1));
      return std::sqrt(std::max(0.0, 0.5 * (tr + disc)));
    }
    case 3:
      return std::sqrt(std::max(0.0, largest_eigenvalue_sym3(s)));
    default:
      return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
  }
}

double bracketed_root(const std::function<double(double)>& g, double a, double b, double g_tol, int max_iter) {
  double ga = g(a), gb = g(b);
  if (ga == 0.0) return a;
  if (gb == 0.0) return b;
  if ((ga > 0.0) == (gb > 0.0)) throw std::invalid_argument("bracketed_root: endpoints do not bracket a root");
  int side = 0;
  double best = std::abs(ga) < std::abs(gb) ? a : b;
  for (int it = 0; it < max_iter; ++it) {
    double c = (a * gb - b * ga) / (gb - ga);
    // Fall back to bisection when false position stalls at an endpoint.
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (!(c > lo && c < hi) || it % 4 == 3) c = 0.5 * (a + b);
    const double gc = g(c);
    best = c;
    if (std::abs(gc) <= g_tol || std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(c)) {
      return c;
    }
    if ((gc > 0.0) == (gb > 0.0)) {
      b = c;
      gb = gc;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      a = c;
      ga = gc;
      if (side == 1) gb *= 0.5;
      side = 1;
    }
  }
  return best;
}

}  // namespace nhlab
