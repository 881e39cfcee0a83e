#include "nhlab/pipelines.hpp"

#include <algorithm>
#include <cmath>

namespace nhlab {

std::vector<double> example1_grid(double beta, std::optional<double> tmax) {
  const double spacing = beta == 0.0 ? 1.0 : kTwoPi / std::abs(beta);
  if (!tmax) return uniform_grid(spacing, 10);
  if (!(*tmax >= spacing)) throw std::invalid_argument("tmax shorter than one grid spacing");
  const int count = static_cast<int>(std::floor(*tmax / spacing * (1.0 + 1e-12)));
  return uniform_grid(spacing, count);
}

LimitCycleSolution seed_example2_cycle(const std::string& label, std::optional<double> c, const IntegratorConfig& cfg) {
  const CycleOptions opts = example2_cycle_options();
  LimitCycleSolution cyc;
  if (label == "gamma3" || label == "gamma5") {
    const double cc = c.value_or(label == "gamma3" ? kGamma3SeedC : kGamma5SeedC);
    const SystemDef sys = make_system("example2", cc);
    cyc = refine_cycle(sys, seed_from_unstable_manifold(sys, 1500.0, cfg, opts), cfg, opts);
  } else if (label == "gamma4") {
    const SystemDef sys = make_system("example2", c.value_or(0.0));
    // Outside the repelling cycle orbits escape forward, so backward they settle on it.
    cyc = refine_cycle(sys, settle_on_section(sys, Eigen::Vector2d(1.7, 0.0), -200.0, cfg, opts), cfg, opts);
  } else {
    throw std::invalid_argument("unknown cycle label '" + label + "' (expected gamma3, gamma4 or gamma5)");
  }
  cyc.label = label;
  return cyc;
}

ContinuationBranch join_branches(const ContinuationBranch& down, const ContinuationBranch& up) {
  ContinuationBranch out;
  out.label = up.label.empty() ? down.label : up.label;
  for (auto it = down.points.rbegin(); it != down.points.rend(); ++it) {
    if (std::next(it) == down.points.rend()) break;  // the shared seed comes from `up`
    BranchPoint p = *it;
    p.arclength = -p.arclength;
    out.points.push_back(std::move(p));
  }
  out.points.insert(out.points.end(), up.points.begin(), up.points.end());
  out.termination = up.termination;
  out.diagnostic = down.diagnostic.empty() ? up.diagnostic : down.diagnostic + "; " + up.diagnostic;
  return out;
}

namespace {

FloquetLimitCheck floquet_limit(const ContinuationBranch& down, const ContinuationBranch& up, double c2) {
  FloquetLimitCheck f;
  f.limit = std::exp(-0.5 - c2);
  f.bound = std::exp(-0.4);
  for (const auto* br : {&down, &up}) {
    for (const auto& p : br->points) {
      if (p.cycle.stability == Stability::stable) f.lambda_max = std::max(f.lambda_max, p.cycle.lambda);
    }
  }
  f.lambda_last = up.points.back().cycle.lambda;
  f.period_last = up.points.back().cycle.period;

  const std::size_t k = std::min<std::size_t>(up.points.size(), 8);
  Mat X(static_cast<Eigen::Index>(k), 2);
  Vec y(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto& cyc = up.points[up.points.size() - k + i].cycle;
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X(static_cast<Eigen::Index>(i), 1) = 1.0 / cyc.period;
    y[static_cast<Eigen::Index>(i)] = std::log(cyc.lambda);
  }
  f.extrapolated_limit = k >= 2 ? std::exp(X.colPivHouseholderQr().solve(y)[0]) : f.lambda_last;
  return f;
}

}  // namespace

Example2Bifurcations run_example2_bifurcations(const IntegratorConfig& cfg, const ContinuationOptions& copts) {
  const CycleOptions opts = example2_cycle_options();
  Example2Bifurcations r;
  r.gamma3_seed = seed_example2_cycle("gamma3", std::nullopt, cfg);
  r.gamma5_seed = seed_example2_cycle("gamma5", std::nullopt, cfg);
  const SystemDef sys3 = make_system("example2", r.gamma3_seed.c);
  const SystemDef sys5 = make_system("example2", r.gamma5_seed.c);

  r.gamma3_down = continue_branch(sys3, r.gamma3_seed, -1, copts, cfg, opts);
  r.gamma3_up = continue_branch(sys3, r.gamma3_seed, +1, copts, cfg, opts);
  r.gamma5_up = continue_branch(sys5, r.gamma5_seed, +1, copts, cfg, opts);

  r.c1 = locate_fold(sys3, r.gamma3_down, 1e-8, cfg, opts);
  r.c2 = locate_homoclinic(r.gamma3_up);
  r.c3 = locate_fold(sys5, r.gamma5_up, 1e-8, cfg, opts);
  r.floquet = floquet_limit(r.gamma3_down, r.gamma3_up, r.c2.c2);
  return r;
}

CycleTypeNumbers cycle_type_numbers(const LimitCycleSolution& cycle, int periods, const IntegratorConfig& cfg) {
  CycleTypeNumbers out;
  out.cycle = cycle;
  const SystemDef sys = make_system("example2", cycle.c);
  out.rates = floquet_rates(cycle, sys, cfg);
  const auto grid = uniform_grid(cycle.period, periods);
  out.forward = estimate_type_numbers(sys, planar_cycle_frame(sys), cycle.anchor, grid, cfg);
  const SystemDef rev = time_reversed(sys);
  out.reversed = estimate_periodic_type_numbers(rev, planar_cycle_frame(rev), cycle.anchor, cycle.period, periods, cfg);
  return out;
}

}  // namespace nhlab
