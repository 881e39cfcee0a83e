#include "nhlab/lyapunov.hpp"

#include <algorithm>
#include <cmath>

namespace nhlab {

namespace {

constexpr double kOnManifoldTol = 1e-10;

Mat axes(int dim, std::initializer_list<int> indices) {
  Mat m = Mat::Zero(dim, static_cast<Eigen::Index>(indices.size()));
  Eigen::Index c = 0;
  for (int i : indices) m(i, c++) = 1.0;
  return m;
}

// Distance of an unwrapped angle to the nearest multiple of `period`.
double periodic_distance_to_zero(double v, double period) {
  const double r = std::remainder(v, period);
  return std::abs(r);
}

void require_dim(const Vec& p, int dim, ManifoldKind kind) {
  if (p.size() != dim) throw std::domain_error(to_string(kind) + ": point has wrong dimension");
}

}  // namespace

ManifoldKind parse_manifold_kind(const std::string& name) {
  if (name == "circle-ex1") return ManifoldKind::circle_ex1;
  if (name == "circle-ex3") return ManifoldKind::circle_ex3;
  if (name == "torus-ex3-at-gamma") return ManifoldKind::torus_ex3_at_gamma;
  throw std::invalid_argument("unknown manifold '" + name + "'");
}

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle_ex1: return "circle-ex1";
    case ManifoldKind::circle_ex3: return "circle-ex3";
    case ManifoldKind::torus_ex3_at_gamma: return "torus-ex3-at-gamma";
  }
  return "unknown";
}

FrameBases frame_for(ManifoldKind manifold, const Vec& p) {
  switch (manifold) {
    case ManifoldKind::circle_ex1:
      require_dim(p, 2, manifold);
      if (std::abs(p[0]) > kOnManifoldTol) throw std::domain_error("circle-ex1: point is off the circle a = 0");
      return {axes(2, {1}), axes(2, {0})};
    case ManifoldKind::circle_ex3:
      require_dim(p, 3, manifold);
      if (std::abs(p[0]) > kOnManifoldTol || periodic_distance_to_zero(p[1], kPi) > kOnManifoldTol) {
        throw std::domain_error("circle-ex3: point is off the circle a = 0, zeta = 0");
      }
      return {axes(3, {2}), axes(3, {0, 1})};
    case ManifoldKind::torus_ex3_at_gamma:
      require_dim(p, 3, manifold);
      if (std::abs(p[0]) > kOnManifoldTol) throw std::domain_error("torus-ex3-at-gamma: point is off a = 0");
      return {axes(3, {1, 2}), axes(3, {0})};
  }
  throw std::invalid_argument("frame_for: unknown manifold");
}

ManifoldFrame make_frame(ManifoldKind manifold) {
  return ManifoldFrame(to_string(manifold), [manifold](const Vec& p) { return frame_for(manifold, p); });
}

ManifoldFrame planar_cycle_frame(const SystemDef& system) {
  if (system.dim != 2) throw std::invalid_argument("planar_cycle_frame: system must be planar");
  return ManifoldFrame("cycle:" + system.name, [system](const Vec& p) {
    const Vec f = system.f(p);
    const double nf = f.norm();
    if (!(nf > 0.0)) throw std::domain_error("planar_cycle_frame: vector field vanishes at p");
    Mat t(2, 1), n(2, 1);
    t << f[0] / nf, f[1] / nf;
    n << -t(1, 0), t(0, 0);
    return FrameBases{t, n};
  });
}

double frame_defect(const FrameBases& b) {
  const auto n_t = b.tangent.cols(), n_n = b.normal.cols();
  const auto dim = std::max(b.tangent.rows(), b.normal.rows());
  double defect = static_cast<double>(std::abs(n_t + n_n - dim));
  Mat all(dim, n_t + n_n);
  all << b.tangent, b.normal;
  defect = std::max(defect, (all.transpose() * all - Mat::Identity(n_t + n_n, n_t + n_n)).cwiseAbs().maxCoeff());
  return defect;
}

TangentialOperator operator_A(const SystemDef& system, const ManifoldFrame& frame, const Vec& p, double t,
                              const IntegratorConfig& cfg) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("operator_A: t must be nonnegative");
  const FrameBases at_p = frame.at(p);
  const auto sol = integrate_variational(system, p, 0.0, -t, cfg);
  if (!sol.ok()) throw NumericalFailure("operator_A: " + sol.augmented().diagnostic());
  const Vec q = sol.final_state();
  const Mat images = sol.final_fundamental() * at_p.tangent;
  const FrameBases at_q = frame.at(q);
  TangentialOperator out;
  out.matrix = at_q.tangent.transpose() * images;
  out.tangency_residual = operator_norm(Mat(at_q.normal.transpose() * images));
  out.frame_invariant = out.tangency_residual <= kTangencyThreshold;
  return out;
}

Mat operator_B(const SystemDef& system, const ManifoldFrame& frame, const Vec& p, double t,
               const IntegratorConfig& cfg) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("operator_B: t must be nonnegative");
  const FrameBases at_p = frame.at(p);
  IntegratorConfig dense = cfg;
  dense.dense_output = true;
  const auto back = integrate(system, p, 0.0, -t, dense);
  if (!back.ok()) throw NumericalFailure("operator_B: " + back.diagnostic());
  const Vec q = back.back();
  const FrameBases at_q = frame.at(q);
  if (t == 0.0) return at_p.normal.transpose() * at_q.normal;

  // The linearized flow runs forward along the stored backward orbit rather
  // than along a fresh forward solve from q, which would drift off a repelling
  // manifold. Augmented state: [V col-major | time], V the image of N_q.
  // V is renormalized every unit of time so that abs_tol never swamps a
  // strongly contracted normal factor; the scale is carried in log form.
  const int n = system.dim;
  const int k = static_cast<int>(at_q.normal.cols());
  const Field field = [&](const Vec& y, Vec& dy) {
    const double tau = std::clamp(y[n * k], -t, 0.0);
    const Mat jac = system.df(back(tau));
    dy.resize(n * k + 1);
    Eigen::Map<Mat>(dy.data(), n, k) = jac * Eigen::Map<const Mat>(y.data(), n, k);
    dy[n * k] = 1.0;
  };
  IntegratorConfig plain = cfg;
  plain.dense_output = false;
  const int segments = std::max(1, static_cast<int>(std::ceil(t)));
  Mat v = at_q.normal;
  double log_scale = 0.0;
  for (int i = 0; i < segments; ++i) {
    const double t0 = -t + t * i / segments;
    const double t1 = i + 1 == segments ? 0.0 : -t + t * (i + 1) / segments;
    Vec y0(n * k + 1);
    Eigen::Map<Mat>(y0.data(), n, k) = v;
    y0[n * k] = t0;
    const auto seg = integrate_field(field, y0, t0, t1, plain);
    if (!seg.ok()) throw NumericalFailure("operator_B: " + seg.diagnostic());
    v = Eigen::Map<const Mat>(seg.back().data(), n, k);
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalFailure("operator_B: degenerate normal image");
    v /= norm;
    log_scale += std::log(norm);
  }
  return std::exp(log_scale) * (at_p.normal.transpose() * v);
}

std::size_t tail_count(std::size_t n) { return std::max<std::size_t>(1, (n + 3) / 4); }

std::vector<double> uniform_grid(double spacing, int count) {
  if (!(spacing > 0.0) || count <= 0) throw std::invalid_argument("uniform_grid: need positive spacing and count");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) g[static_cast<std::size_t>(k)] = spacing * (k + 1);
  return g;
}

namespace {

void summarize_tail(TypeNumberEstimate& est) {
  const std::size_t first = est.samples.size() - tail_count(est.samples.size());
  est.nu_tail = 0.0;
  for (std::size_t i = first; i < est.samples.size(); ++i) {
    est.nu_tail = std::max(est.nu_tail, est.samples[i].nu);
    if (est.samples[i].sigma) {
      est.sigma_tail = est.sigma_tail ? std::max(*est.sigma_tail, *est.samples[i].sigma) : *est.samples[i].sigma;
    }
  }
}

}  // namespace

TypeNumberEstimate estimate_type_numbers(const SystemDef& system, const ManifoldFrame& frame, const Vec& p,
                                         const std::vector<double>& t_grid, const IntegratorConfig& cfg) {
  if (t_grid.empty()) throw std::invalid_argument("estimate_type_numbers: empty time grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1]))) {
      throw std::invalid_argument("estimate_type_numbers: grid must be positive and strictly increasing");
    }
  }
  TypeNumberEstimate est;
  est.samples.reserve(t_grid.size());
  for (double t : t_grid) {
    const auto a = operator_A(system, frame, p, t, cfg);
    const Mat b = operator_B(system, frame, p, t, cfg);
    TypeNumberSample s;
    s.t = t;
    s.norm_A = operator_norm(a.matrix);
    s.norm_B = operator_norm(b);
    s.nu = std::pow(s.norm_B, 1.0 / t);
    if (s.norm_B < 1.0) s.sigma = std::log(s.norm_A) / -std::log(s.norm_B);
    s.tangency_residual = a.tangency_residual;
    est.frame_invariant = est.frame_invariant && a.frame_invariant;
    est.samples.push_back(s);
  }
  summarize_tail(est);
  return est;
}

TypeNumberEstimate estimate_periodic_type_numbers(const SystemDef& system, const ManifoldFrame& frame, const Vec& p,
                                                  double period, int periods, const IntegratorConfig& cfg) {
  if (!(period > 0.0) || periods <= 0) throw std::invalid_argument("estimate_periodic_type_numbers: bad period grid");
  const FrameBases at_p = frame.at(p);
  const auto sol = integrate_variational(system, p, 0.0, period, cfg);
  if (!sol.ok()) throw NumericalFailure("estimate_periodic_type_numbers: " + sol.augmented().diagnostic());
  const double miss = (sol.final_state() - p).norm();
  if (miss > kPeriodicityTolerance * std::max(1.0, p.norm())) {
    throw std::domain_error("estimate_periodic_type_numbers: orbit misses its start by " + std::to_string(miss));
  }
  // In the frame at p the monodromy is block triangular by invariance. Powers
  // use the diagonal blocks only; raising the full matrix would amplify the
  // rounding in the off block by the normal multiplier every period.
  const Mat basis = (Mat(p.size(), at_p.tangent.cols() + at_p.normal.cols()) << at_p.tangent, at_p.normal).finished();
  const Mat k_full = basis.transpose() * sol.final_fundamental() * basis;
  const auto nt = at_p.tangent.cols();
  const auto nn = at_p.normal.cols();
  const Mat k_tt_inv = k_full.topLeftCorner(nt, nt).inverse();
  const Mat k_nn = k_full.bottomRightCorner(nn, nn);
  const double residual = operator_norm(Mat(k_full.bottomLeftCorner(nn, nt)));
  Mat a_pow = Mat::Identity(nt, nt);
  Mat b_pow = Mat::Identity(nn, nn);
  TypeNumberEstimate est;
  est.frame_invariant = residual <= kTangencyThreshold;
  for (int k = 1; k <= periods; ++k) {
    a_pow = k_tt_inv * a_pow;
    b_pow = k_nn * b_pow;
    TypeNumberSample s;
    s.t = period * k;
    s.norm_A = operator_norm(a_pow);
    s.norm_B = operator_norm(b_pow);
    s.nu = std::pow(s.norm_B, 1.0 / s.t);
    if (s.norm_B < 1.0) s.sigma = std::log(s.norm_A) / -std::log(s.norm_B);
    s.tangency_residual = residual;
    est.samples.push_back(s);
  }
  summarize_tail(est);
  return est;
}

}  // namespace nhlab
