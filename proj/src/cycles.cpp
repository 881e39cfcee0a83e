#include "nhlab/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace nhlab {

namespace {

void require_planar(const SystemDef& system, const char* who) {
  if (system.dim != 2) throw std::invalid_argument(std::string(who) + ": planar systems only");
}

Vec section_direction(const Section& section) {
  Vec u = section.ray.size() == 2 ? section.ray : Vec(Eigen::Vector2d(section.normal[1], -section.normal[0]));
  const double nu = u.norm();
  if (!(nu > 0.0)) throw std::invalid_argument("cycle section: degenerate direction");
  return u / nu;
}

SystemDef at_param(const SystemDef& system, double c) {
  SystemDef s = system;
  s.param = c;
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Unit normal to f at x (f rotated by +pi/2).
Vec unit_normal_to_flow(const SystemDef& system, const Vec& x) {
  const Vec f = system.f(x);
  const double nf = f.norm();
  if (!(nf > 0.0)) throw NumericalFailure("vector field vanishes on the cycle");
  return Eigen::Vector2d(-f[1] / nf, f[0] / nf);
}

std::vector<std::complex<double>> eigenvalues_of(const Mat& m) {
  Eigen::EigenSolver<Mat> es(m, false);
  std::vector<std::complex<double>> out(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  std::sort(out.begin(), out.end(), [](auto a, auto b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
  return out;
}

LimitCycleSolution solution_from(const SystemDef& system, const ReturnEval& ev) {
  LimitCycleSolution sol;
  sol.c = system.param;
  sol.anchor = ev.start;
  sol.period = ev.period;
  const Vec n = unit_normal_to_flow(system, ev.start);
  sol.multiplier = n.dot(ev.monodromy * n);
  sol.lambda = std::exp(ev.divergence_integral / ev.period);
  sol.stability = sol.multiplier < 1.0 ? Stability::stable : Stability::unstable;
  sol.return_residual = std::abs(ev.s_next - ev.s);
  sol.min_saddle_distance = ev.min_saddle_distance;
  return sol;
}

}  // namespace

std::string to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::saddle: return "saddle";
    case EquilibriumKind::stable_node: return "stable-node";
    case EquilibriumKind::stable_focus: return "stable-focus";
    case EquilibriumKind::unstable_node: return "unstable-node";
    case EquilibriumKind::unstable_focus: return "unstable-focus";
    case EquilibriumKind::degenerate: return "degenerate";
  }
  return "unknown";
}

std::string to_string(Stability s) { return s == Stability::stable ? "stable" : "unstable"; }

std::string to_string(BranchEvent e) {
  switch (e) {
    case BranchEvent::none: return "";
    case BranchEvent::fold: return "fold";
    case BranchEvent::homoclinic_approach: return "homoclinic-approach";
    case BranchEvent::boundary: return "boundary";
    case BranchEvent::step_floor: return "step-floor";
    case BranchEvent::max_points: return "max-points";
  }
  return "unknown";
}

EquilibriumKind classify_equilibrium(const Mat& jacobian) {
  const auto ev = eigenvalues_of(jacobian);
  constexpr double eps = 1e-12;
  bool any_pos = false, any_neg = false, complex = false;
  for (const auto& e : ev) {
    if (std::abs(e.real()) <= eps) return EquilibriumKind::degenerate;
    (e.real() > 0 ? any_pos : any_neg) = true;
    complex = complex || std::abs(e.imag()) > eps;
  }
  if (any_pos && any_neg) return EquilibriumKind::saddle;
  if (any_neg) return complex ? EquilibriumKind::stable_focus : EquilibriumKind::stable_node;
  return complex ? EquilibriumKind::unstable_focus : EquilibriumKind::unstable_node;
}

std::vector<Equilibrium> find_equilibria(const SystemDef& system, const DomainBox& box, int grid_per_axis) {
  require_planar(system, "find_equilibria");
  if (grid_per_axis < 2) throw std::invalid_argument("find_equilibria: grid needs at least 2 points per axis");
  if (!box.lower.allFinite() || !box.upper.allFinite()) throw std::invalid_argument("find_equilibria: box must be bounded");
  std::vector<Equilibrium> found;
  for (int i = 0; i < grid_per_axis; ++i) {
    for (int j = 0; j < grid_per_axis; ++j) {
      Vec x(2);
      x[0] = box.lower[0] + (box.upper[0] - box.lower[0]) * i / (grid_per_axis - 1);
      x[1] = box.lower[1] + (box.upper[1] - box.lower[1]) * j / (grid_per_axis - 1);
      bool converged = false;
      for (int it = 0; it < 50; ++it) {
        const Vec f = system.f(x);
        if (f.norm() <= 1e-13) {
          converged = true;
          break;
        }
        const Mat jac = system.df(x);
        Eigen::FullPivLU<Mat> lu(jac);
        if (!lu.isInvertible()) break;
        x -= lu.solve(f);
        if (!x.allFinite() || x.norm() > 1e3) break;
      }
      if (!converged || !box.contains(x) || system.f(x).norm() > 1e-10) continue;
      const bool dup = std::any_of(found.begin(), found.end(),
                                   [&](const Equilibrium& e) { return (e.state - x).norm() < 1e-7; });
      if (dup) continue;
      Equilibrium e;
      e.state = x;
      e.c = system.param;
      const Mat jac = system.df(x);
      e.eigenvalues = eigenvalues_of(jac);
      e.kind = classify_equilibrium(jac);
      found.push_back(std::move(e));
    }
  }
  std::sort(found.begin(), found.end(), [](const Equilibrium& a, const Equilibrium& b) {
    return a.state[0] != b.state[0] ? a.state[0] < b.state[0] : a.state[1] < b.state[1];
  });
  return found;
}

Section example2_section() {
  return Section{Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0), CrossingDirection::negative,
                 Eigen::Vector2d(1.0, 0.0)};
}

CycleOptions example2_cycle_options() {
  CycleOptions o;
  o.section = example2_section();
  return o;
}

Vec section_point(const CycleOptions& opts, double s) { return opts.section.point + s * section_direction(opts.section); }

double section_coordinate(const CycleOptions& opts, const Vec& x) {
  return (x.head(2) - opts.section.point).dot(section_direction(opts.section));
}

ReturnEval evaluate_return(const SystemDef& system, double s, const CycleOptions& opts, const IntegratorConfig& cfg) {
  require_planar(system, "evaluate_return");
  const Vec u = section_direction(opts.section);
  ReturnEval ev;
  ev.s = s;
  ev.start = section_point(opts, s);

  VariationalOptions vo{true, true};
  StopRule stop;
  stop.section = opts.section;
  stop.min_elapsed = opts.min_elapsed;
  stop.escape_radius = opts.escape_radius;
  stop.escape_dims = 2;
  const auto sol = integrate_variational(system, ev.start, 0.0, opts.max_return_time, cfg, vo, stop);
  const auto& hit = sol.augmented().stop_event();
  if (!hit) {
    std::string why = sol.ok() ? "time budget exhausted" : sol.augmented().diagnostic();
    throw NumericalFailure("no return to the section from s=" + fmt(s) + " (" + why + ")");
  }
  const Vec z = sol.state_of(hit->state);
  const Mat phi = sol.fundamental_of(hit->state);
  const Vec sens = sol.sensitivity_of(hit->state);
  const Vec f1 = system.f(z);
  const Vec& n = opts.section.normal;
  const double denom = n.dot(f1);
  if (!(std::abs(denom) > 1e-14)) throw NumericalFailure("tangential return to the section");
  const Mat proj = Mat::Identity(2, 2) - f1 * n.transpose() / denom;

  ev.hit = z;
  ev.s_next = section_coordinate(opts, z);
  ev.dP_ds = u.dot(proj * phi * u);
  ev.dP_dc = u.dot(proj * sens);
  ev.period = hit->t;
  ev.monodromy = phi;
  ev.divergence_integral = sol.divergence_integral_of(hit->state);

  double dmin = (z - opts.saddle).norm();
  const auto& states = sol.augmented().states();
  const auto& times = sol.augmented().times();
  for (std::size_t i = 0; i < states.size() && times[i] <= hit->t; ++i) {
    dmin = std::min(dmin, (states[i].head(2) - opts.saddle).norm());
  }
  ev.min_saddle_distance = dmin;
  return ev;
}

LimitCycleSolution refine_cycle(const SystemDef& system, const Vec& guess, const IntegratorConfig& cfg,
                                const CycleOptions& opts) {
  require_planar(system, "refine_cycle");
  double s = section_coordinate(opts, guess);
  for (int it = 0; it < opts.max_newton; ++it) {
    const ReturnEval ev = evaluate_return(system, s, opts, cfg);
    const double g = ev.s_next - s;
    if (std::abs(g) <= opts.newton_tol) return solution_from(system, ev);
    const double slope = ev.dP_ds - 1.0;
    if (!(std::abs(slope) > 1e-14)) {
      throw NumericalFailure("refine_cycle: singular return map at s=" + fmt(s));
    }
    double ds = -g / slope;
    // Damp wild steps; the section coordinate of a cycle is O(1).
    ds = std::clamp(ds, -0.1, 0.1);
    s += ds;
    if (!std::isfinite(s)) break;
  }
  throw NumericalFailure("refine_cycle: Newton did not converge, last iterate s=" + fmt(s));
}

FloquetRates floquet_rates(const LimitCycleSolution& cycle, const SystemDef& system, const IntegratorConfig& cfg,
                           const CycleOptions& opts) {
  require_planar(system, "floquet_rates");
  const SystemDef sys = at_param(system, cycle.c);
  const ReturnEval ev = evaluate_return(sys, section_coordinate(opts, cycle.anchor), opts, cfg);
  const Mat& phi = ev.monodromy;
  const Vec f0 = sys.f(ev.start);
  const Vec n = unit_normal_to_flow(sys, ev.start);

  FloquetRates r;
  r.eigenvalues = eigenvalues_of(phi);
  r.trivial_defect = (phi * f0 - f0).norm() / f0.norm();
  r.multiplier = n.dot(phi * n);
  r.lambda = std::exp(ev.divergence_integral / ev.period);
  if (!(r.multiplier > 0.0)) throw NumericalFailure("floquet_rates: nonpositive multiplier " + fmt(r.multiplier));
  r.lambda_from_m = std::pow(r.multiplier, 1.0 / ev.period);
  r.liouville_defect = std::abs(phi.determinant() - r.multiplier) / r.multiplier;
  if (r.trivial_defect > 1e-5) {
    throw NumericalFailure("floquet_rates: trivial multiplier deviates from 1 by " + fmt(r.trivial_defect));
  }
  if (std::abs(r.lambda_from_m - r.lambda) > 1e-5 * r.lambda) {
    throw NumericalFailure("floquet_rates: m^(1/T) = " + fmt(r.lambda_from_m) + " disagrees with divergence rate " +
                           fmt(r.lambda));
  }
  return r;
}

Vec settle_on_section(const SystemDef& system, const Vec& start, double t_end, const IntegratorConfig& cfg,
                      const CycleOptions& opts) {
  require_planar(system, "settle_on_section");
  StopRule stop;
  stop.escape_radius = opts.escape_radius;
  stop.escape_dims = 2;
  IntegratorConfig c = cfg;
  c.dense_output = true;
  const Trajectory traj = integrate(system, start, 0.0, t_end, c, stop);
  const auto events = section_crossings(traj, opts.section);
  if (events.empty()) {
    throw NumericalFailure("settle_on_section: no section crossing" +
                           (traj.ok() ? std::string() : " (" + traj.diagnostic() + ")"));
  }
  return events.back().state.head(2);
}

Vec seed_from_unstable_manifold(const SystemDef& system, double t_settle, const IntegratorConfig& cfg,
                                const CycleOptions& opts) {
  require_planar(system, "seed_from_unstable_manifold");
  Eigen::EigenSolver<Mat> es(system.df(opts.saddle));
  int k = es.eigenvalues()[0].real() > es.eigenvalues()[1].real() ? 0 : 1;
  if (!(es.eigenvalues()[k].real() > 0.0)) throw std::domain_error("seed_from_unstable_manifold: not a saddle");
  Vec v = es.eigenvectors().col(k).real();
  v.normalize();
  if (v[0] < 0.0) v = -v;
  return settle_on_section(system, opts.saddle + 1e-7 * v, t_settle, cfg, opts);
}

// ---------------------------------------------------------------------------
// Continuation

namespace {

struct Corrected {
  double s = 0.0;
  double w = 0.0;
  ReturnEval ev;
  int iterations = 0;
};

// Unit null vector of [G_s, G_w] in the scaled (s, w = kappa c) plane.
Eigen::Vector2d branch_tangent(const ReturnEval& ev, double kappa, const Eigen::Vector2d& orient) {
  const double gs = ev.dP_ds - 1.0;
  const double gw = ev.dP_dc / kappa;
  Eigen::Vector2d t(gw, -gs);
  t.normalize();
  if (t.dot(orient) < 0.0) t = -t;
  return t;
}

std::optional<Corrected> correct(const SystemDef& system, double s_pred, double w_pred, const Eigen::Vector2d& tau,
                                 double kappa, int max_iter, const CycleOptions& opts, const IntegratorConfig& cfg) {
  Corrected out;
  out.s = s_pred;
  out.w = w_pred;
  for (int it = 0; it <= max_iter; ++it) {
    ReturnEval ev;
    try {
      ev = evaluate_return(at_param(system, out.w / kappa), out.s, opts, cfg);
    } catch (const NumericalFailure&) {
      return std::nullopt;
    }
    const double g = ev.s_next - out.s;
    const double arc = tau[0] * (out.s - s_pred) + tau[1] * (out.w - w_pred);
    if (std::abs(g) <= opts.newton_tol && std::abs(arc) <= 1e-12) {
      out.ev = std::move(ev);
      out.iterations = it;
      return out;
    }
    Eigen::Matrix2d J;
    J << ev.dP_ds - 1.0, ev.dP_dc / kappa, tau[0], tau[1];
    const Eigen::Vector2d rhs(-g, -arc);
    const Eigen::Vector2d d = J.fullPivLu().solve(rhs);
    if (!d.allFinite()) return std::nullopt;
    out.s += d[0];
    out.w += d[1];
  }
  return std::nullopt;
}

}  // namespace

ContinuationBranch continue_branch(const SystemDef& system, const LimitCycleSolution& start, int c_direction,
                                   const ContinuationOptions& copts, const IntegratorConfig& cfg,
                                   const CycleOptions& opts) {
  require_planar(system, "continue_branch");
  if (c_direction != 1 && c_direction != -1) throw std::invalid_argument("continue_branch: c_direction must be +1 or -1");
  const double kappa = copts.kappa;
  const double h_min = kappa * copts.min_dc;
  const double h_max = kappa * copts.max_dc;

  ContinuationBranch branch;
  branch.label = start.label;

  double s = section_coordinate(opts, start.anchor);
  double w = kappa * start.c;
  ReturnEval ev = evaluate_return(at_param(system, start.c), s, opts, cfg);
  if (std::abs(ev.s_next - s) > 10.0 * opts.newton_tol) {
    throw std::invalid_argument("continue_branch: start is not a converged cycle");
  }
  Eigen::Vector2d tau = branch_tangent(ev, kappa, Eigen::Vector2d(0.0, static_cast<double>(c_direction)));
  LimitCycleSolution first = solution_from(at_param(system, start.c), ev);
  first.label = start.label;
  branch.points.push_back({0.0, first, BranchEvent::none});

  double h = kappa * copts.initial_dc;
  double arclength = 0.0;
  int after_fold = -1;

  while (static_cast<int>(branch.points.size()) < copts.max_points) {
    const double s_pred = s + h * tau[0];
    const double w_pred = w + h * tau[1];
    const double c_pred = w_pred / kappa;
    if (c_pred < copts.c_lo || c_pred > copts.c_hi) {
      branch.points.back().event = BranchEvent::boundary;
      branch.termination = BranchEvent::boundary;
      return branch;
    }
    auto corr = correct(system, s_pred, w_pred, tau, kappa, copts.max_corrector, opts, cfg);
    bool accept = corr.has_value();
    if (accept) {
      const double jump = std::hypot(corr->s - s_pred, corr->w - w_pred);
      const double dT = std::abs(corr->ev.period - ev.period) / ev.period;
      // Reject jumps onto a neighbouring branch.
      accept = jump <= h && dT <= 0.25;
    }
    if (!accept) {
      h *= 0.5;
      if (h < h_min) {
        branch.termination = BranchEvent::step_floor;
        branch.diagnostic = "step floor reached at c=" + fmt(w / kappa);
        branch.points.back().event = BranchEvent::step_floor;
        return branch;
      }
      continue;
    }

    arclength += std::hypot(corr->s - s, corr->w - w);
    s = corr->s;
    w = corr->w;
    ev = std::move(corr->ev);
    const Eigen::Vector2d tau_new = branch_tangent(ev, kappa, tau);
    const bool folded = tau_new[1] * tau[1] < 0.0;
    tau = tau_new;

    LimitCycleSolution cyc = solution_from(at_param(system, w / kappa), ev);
    cyc.label = start.label;
    BranchPoint bp{arclength, cyc, BranchEvent::none};
    if (folded && after_fold < 0) {
      bp.event = BranchEvent::fold;
      after_fold = 0;
    } else if (after_fold >= 0) {
      ++after_fold;
    }
    const bool homoclinic = cyc.period > copts.t_cap || cyc.min_saddle_distance < copts.d_min;
    if (homoclinic) bp.event = BranchEvent::homoclinic_approach;
    branch.points.push_back(bp);
    if (homoclinic) {
      branch.termination = BranchEvent::homoclinic_approach;
      return branch;
    }
    if (after_fold >= copts.points_after_fold) {
      branch.termination = BranchEvent::fold;
      return branch;
    }
    if (corr->iterations <= 3) {
      h = std::min(1.5 * h, h_max);
    } else if (corr->iterations > 6) {
      h *= 0.7;
    }
  }
  branch.termination = BranchEvent::max_points;
  branch.points.back().event = BranchEvent::max_points;
  return branch;
}

FoldLocation locate_fold(const SystemDef& system, const ContinuationBranch& branch, double c_tol,
                         const IntegratorConfig& cfg, const CycleOptions& opts) {
  const auto& pts = branch.points;
  auto fold_it = std::find_if(pts.begin(), pts.end(), [](const BranchPoint& p) { return p.event == BranchEvent::fold; });
  if (fold_it == pts.end()) throw std::invalid_argument("locate_fold: branch has no fold");
  const auto fi = static_cast<std::size_t>(std::distance(pts.begin(), fold_it));

  // Nearest sign change of m - 1 around the recorded fold.
  std::optional<std::size_t> lo_idx;
  for (std::size_t d = 0; d < pts.size() && !lo_idx; ++d) {
    for (long cand : {static_cast<long>(fi) - 1 - static_cast<long>(d), static_cast<long>(fi) + static_cast<long>(d)}) {
      if (cand < 0 || cand + 1 >= static_cast<long>(pts.size())) continue;
      const auto i = static_cast<std::size_t>(cand);
      if ((pts[i].cycle.multiplier - 1.0) * (pts[i + 1].cycle.multiplier - 1.0) <= 0.0) {
        lo_idx = i;
        break;
      }
    }
  }
  if (!lo_idx) throw std::invalid_argument("locate_fold: no multiplier crossing 1 near the fold");

  struct Node {
    double s, c, m;
    ReturnEval ev;
  };
  // Solve G(s, c) = 0 for c at fixed s.
  auto solve_c = [&](double s, double c) {
    for (int it = 0; it < 30; ++it) {
      ReturnEval ev = evaluate_return(at_param(system, c), s, opts, cfg);
      const double g = ev.s_next - s;
      if (std::abs(g) <= opts.newton_tol) return Node{s, c, ev.dP_ds, std::move(ev)};
      if (!(std::abs(ev.dP_dc) > 0.0)) break;
      c -= g / ev.dP_dc;
    }
    throw NumericalFailure("locate_fold: cannot solve for c at s=" + fmt(s));
  };

  const auto& pa = pts[*lo_idx].cycle;
  const auto& pb = pts[*lo_idx + 1].cycle;
  Node a = solve_c(section_coordinate(opts, pa.anchor), pa.c);
  Node b = solve_c(section_coordinate(opts, pb.anchor), pb.c);
  Node mid = a;
  for (int it = 0; it < 80; ++it) {
    mid = solve_c(0.5 * (a.s + b.s), 0.5 * (a.c + b.c));
    if ((mid.m - 1.0) * (a.m - 1.0) > 0.0) {
      a = mid;
    } else {
      b = mid;
    }
    const double lo = std::min({a.c, b.c, mid.c}), hi = std::max({a.c, b.c, mid.c});
    if (hi - lo <= c_tol && std::abs(b.s - a.s) <= 1e-9) break;
  }
  FoldLocation out;
  out.c = mid.c;
  out.c_lo = std::min({a.c, b.c, mid.c});
  out.c_hi = std::max({a.c, b.c, mid.c});
  out.multiplier = mid.m;
  out.cycle = solution_from(at_param(system, mid.c), mid.ev);
  out.cycle.label = branch.label;
  return out;
}

LogPeriodFit fit_log_period(const std::vector<double>& c, const std::vector<double>& T, double residual_threshold) {
  if (c.size() != T.size() || c.size() < 4) throw std::invalid_argument("fit_log_period: need at least 4 (c, T) pairs");
  const auto n = static_cast<Eigen::Index>(c.size());
  const double cmax = *std::max_element(c.begin(), c.end());
  const double cmin = *std::min_element(c.begin(), c.end());
  const double span = std::max(cmax - cmin, 1e-300);

  // Parameters (A, B, u) with c2 = cmax + exp(u) so that c2 stays above the data.
  auto residuals = [&](const Eigen::Vector3d& p, Vec& r, Mat* jac) {
    const double e = std::exp(p[2]);
    const double c2 = cmax + e;
    r.resize(n);
    if (jac) jac->resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = c2 - c[static_cast<std::size_t>(i)];
      const double ld = std::log(d);
      r[i] = p[0] - p[1] * ld - T[static_cast<std::size_t>(i)];
      if (jac) {
        (*jac)(i, 0) = 1.0;
        (*jac)(i, 1) = -ld;
        (*jac)(i, 2) = -p[1] / d * e;
      }
    }
  };
  // Linear least squares for (A, B) at fixed c2.
  auto linear_ab = [&](double u) {
    const double c2 = cmax + std::exp(u);
    Mat X(n, 2);
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = -std::log(c2 - c[static_cast<std::size_t>(i)]);
      y[i] = T[static_cast<std::size_t>(i)];
    }
    const Vec ab = X.colPivHouseholderQr().solve(y);
    return Eigen::Vector3d(ab[0], ab[1], u);
  };

  // Coarse scan of the offset c2 - cmax to pick a starting point.
  Eigen::Vector3d p;
  double best = std::numeric_limits<double>::infinity();
  for (int k = -40; k <= 10; ++k) {
    const double u = std::log(span) + 0.5 * k;
    const Eigen::Vector3d q = linear_ab(u);
    Vec r;
    residuals(q, r, nullptr);
    if (r.squaredNorm() < best) {
      best = r.squaredNorm();
      p = q;
    }
  }

  double mu = 1e-3;
  Vec r;
  Mat J;
  residuals(p, r, &J);
  double cost = r.squaredNorm();
  for (int it = 0; it < 500; ++it) {
    const Mat JtJ = J.transpose() * J;
    const Vec g = J.transpose() * r;
    Mat H = JtJ;
    H.diagonal() += mu * JtJ.diagonal().cwiseMax(1e-300);
    const Eigen::Vector3d step = H.ldlt().solve(-g);
    const Eigen::Vector3d trial = p + step;
    Vec rt;
    Mat Jt;
    residuals(trial, rt, &Jt);
    const double ct = rt.squaredNorm();
    if (std::isfinite(ct) && ct <= cost) {
      const bool small = step.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + p.cwiseAbs().maxCoeff());
      p = trial;
      r = rt;
      J = Jt;
      const bool flat = cost - ct <= 1e-30 * (1.0 + cost);
      cost = ct;
      mu = std::max(mu * 0.3, 1e-15);
      if (small || (flat && it > 5)) break;
    } else {
      mu *= 10.0;
      if (mu > 1e20) break;
    }
  }

  LogPeriodFit fit;
  fit.A = p[0];
  fit.B = p[1];
  fit.c2 = cmax + std::exp(p[2]);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rel = r[i] / T[static_cast<std::size_t>(i)];
    acc += rel * rel;
  }
  fit.relative_residual = std::sqrt(acc / static_cast<double>(n));
  fit.points_used = static_cast<int>(n);
  fit.low_confidence = !(fit.relative_residual <= residual_threshold) || !(fit.B > 0.0);
  return fit;
}

LogPeriodFit locate_homoclinic(const ContinuationBranch& branch, int tail, double residual_threshold) {
  if (branch.termination != BranchEvent::homoclinic_approach && branch.termination != BranchEvent::step_floor) {
    throw std::invalid_argument("locate_homoclinic: branch did not end near a homoclinic orbit");
  }
  const auto& pts = branch.points;
  const std::size_t k = std::min<std::size_t>(pts.size(), static_cast<std::size_t>(std::max(tail, 4)));
  std::vector<double> c, T;
  for (std::size_t i = pts.size() - k; i < pts.size(); ++i) {
    c.push_back(pts[i].cycle.c);
    T.push_back(pts[i].cycle.period);
  }
  return fit_log_period(c, T, residual_threshold);
}

}  // namespace nhlab
