#pragma once

#include <optional>
#include <vector>

#include "nhlab/bundle.hpp"
#include "nhlab/cycles.hpp"
#include "nhlab/lyapunov.hpp"
#include "nhlab/torus.hpp"

namespace nhlab {

/// Multiples of the period 2pi/|beta| (unit spacing when beta = 0) up to
/// tmax; ten periods when tmax is not given.
std::vector<double> example1_grid(double beta, std::optional<double> tmax = std::nullopt);

inline constexpr double kGamma3SeedC = -0.060945;
inline constexpr double kGamma5SeedC = -0.06092;

struct FloquetLimitCheck {
  double lambda_max = 0.0;   // over the stable points of the gamma3 branch
  double lambda_last = 0.0;  // at the last point before the homoclinic stop
  double period_last = 0.0;
  double limit = 0.0;        // exp(-1/2 - c2)
  double bound = 0.0;        // exp(-0.4)
  /// ln(lambda) = L + K / T fitted over the tail, extrapolated to T -> infinity.
  double extrapolated_limit = 0.0;
};

struct Example2Bifurcations {
  LimitCycleSolution gamma3_seed;
  LimitCycleSolution gamma5_seed;
  ContinuationBranch gamma3_down;  // toward c1
  ContinuationBranch gamma3_up;    // toward c2
  ContinuationBranch gamma5_up;    // toward c3
  FoldLocation c1;
  LogPeriodFit c2;
  FoldLocation c3;
  FloquetLimitCheck floquet;
};

Example2Bifurcations run_example2_bifurcations(const IntegratorConfig& cfg = {}, const ContinuationOptions& copts = {});

/// Seed cycle for a labelled example2 branch: gamma3 and gamma5 from the
/// saddle's unstable manifold, gamma4 (c = 0 by default) from a backward run.
LimitCycleSolution seed_example2_cycle(const std::string& label, std::optional<double> c = std::nullopt,
                                       const IntegratorConfig& cfg = {});

/// Both continuation directions from the seed, joined: the decreasing-c part
/// reversed first with negative arclength.
ContinuationBranch join_branches(const ContinuationBranch& down, const ContinuationBranch& up);

struct CycleTypeNumbers {
  LimitCycleSolution cycle;
  FloquetRates rates;
  TypeNumberEstimate forward;   // nu along the cycle
  TypeNumberEstimate reversed;  // time-reversed field via the monodromy (sigma when forward B grows)
};

/// Type numbers on a converged example2 cycle with grid k T, k = 1..periods.
CycleTypeNumbers cycle_type_numbers(const LimitCycleSolution& cycle, int periods = 10, const IntegratorConfig& cfg = {});

}  // namespace nhlab
