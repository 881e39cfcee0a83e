#include <cmath>

#include "doctest.h"
#include "nhlab/pipelines.hpp"

using namespace nhlab;

namespace {

double quartic_root(double c) { return std::sqrt((19.0 - std::sqrt(233.0 + 64.0 * c)) / 4.0); }

// First crossing of the section ray by the saddle's unstable branch (forward)
// minus that of its stable branch (backward). Zero at the homoclinic value.
double manifold_splitting(double c) {
  const auto sys = make_system("example2", c);
  const Mat j = sys.df(Vec::Zero(2));
  Eigen::SelfAdjointEigenSolver<Mat> eig(j);  // symmetric at the origin
  Vec vs = eig.eigenvectors().col(0), vu = eig.eigenvectors().col(1);
  if (vu[0] < 0) vu = -vu;
  if (vs[0] < 0) vs = -vs;
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-14;
  StopRule stop;
  stop.section = example2_section();
  stop.min_elapsed = 1.0;
  const auto fwd = integrate(sys, 1e-9 * vu, 0.0, 200.0, cfg, stop);
  const auto bwd = integrate(sys, 1e-9 * vs, 0.0, -200.0, cfg, stop);
  REQUIRE(fwd.stop_event().has_value());
  REQUIRE(bwd.stop_event().has_value());
  return fwd.stop_event()->state[0] - bwd.stop_event()->state[0];
}

ContinuationBranch synthetic_branch(const std::vector<double>& cs) {
  ContinuationBranch b;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    BranchPoint p;
    p.arclength = static_cast<double>(i);
    p.cycle.c = cs[i];
    p.cycle.anchor = Eigen::Vector2d(1.5 + 0.01 * static_cast<double>(i), 0.0);
    p.cycle.period = 20.0;
    p.cycle.multiplier = 0.5;
    b.points.push_back(p);
  }
  return b;
}

}  // namespace

TEST_CASE("equilibria") {
  SUBCASE("origin is a saddle") {
    const auto sys = make_system("example2", -0.08);
    const auto eqs = find_equilibria(sys, sys.domain);
    bool found = false;
    for (const auto& e : eqs) {
      CHECK(sys.f(e.state).norm() <= 1e-10);
      if (e.state.norm() < 1e-12) {
        found = true;
        CHECK(e.kind == EquilibriumKind::saddle);
        CHECK(sys.df(e.state).determinant() == doctest::Approx(-0.08 / 2 - 1.0));
      }
    }
    CHECK(found);
  }
  for (double c : {-0.06, 0.0}) {
    CAPTURE(c);
    const auto sys = make_system("example2", c);
    const auto eqs = find_equilibria(sys, sys.domain);
    REQUIRE(eqs.size() == 5);  // origin, the interior pair and the outer saddles near |x| = 2.9
    const double x = quartic_root(c);
    CHECK(std::abs(eqs[1].state[0] + x) <= 1e-10);
    CHECK(std::abs(eqs[3].state[0] - x) <= 1e-10);
    CHECK(std::abs(eqs[3].state[1] - x / 2) <= 1e-10);
    CHECK(eqs[2].kind == EquilibriumKind::saddle);
    CHECK(eqs[3].kind == EquilibriumKind::stable_focus);
  }
  CHECK(quartic_root(-0.06) == doctest::Approx(0.98259).epsilon(1e-5));
  CHECK(to_string(EquilibriumKind::unstable_node) == "unstable-node");
}

TEST_CASE("cycle location and Floquet rates") {
  SUBCASE("stable cycle between c1 and c2 by forward attraction") {
    const auto sys = make_system("example2", -0.0609455);
    const auto cyc = refine_cycle(sys, seed_from_unstable_manifold(sys));
    CHECK(cyc.stability == Stability::stable);
    CHECK(cyc.multiplier < 1.0);
    CHECK(cyc.multiplier > 0.0);
    CHECK(cyc.return_residual <= 1e-8);
    const auto fr = floquet_rates(cyc, sys);
    CHECK(fr.trivial_defect <= 1e-5);
    CHECK(fr.liouville_defect <= 1e-5);
    CHECK(std::abs(fr.lambda - fr.lambda_from_m) <= 1e-6 * fr.lambda);
  }
  SUBCASE("repelling cycle at c = 0 by a backward run") {
    const auto cyc = seed_example2_cycle("gamma4");
    CHECK(cyc.c == 0.0);
    CHECK(cyc.stability == Stability::unstable);
    CHECK(cyc.multiplier > 1.0);
    const auto fr = floquet_rates(cyc, make_system("example2", 0.0));
    CHECK(std::abs(std::pow(fr.multiplier, 1.0 / cyc.period) - fr.lambda) <= 1e-6 * fr.lambda);
  }
  SUBCASE("a seed at an equilibrium never returns") {
    const auto sys = make_system("example2", -0.06);
    const Vec eq = Eigen::Vector2d(quartic_root(-0.06), quartic_root(-0.06) / 2);
    CHECK_THROWS_AS(settle_on_section(sys, eq, 200.0), NumericalFailure);
    CHECK_THROWS_AS(refine_cycle(sys, Vec::Zero(2)), NumericalFailure);
  }
  CHECK_THROWS_AS(seed_example2_cycle("gamma9"), std::invalid_argument);
}

TEST_CASE("log-period fit") {
  SUBCASE("planted data are recovered") {
    const double c2 = -0.060932, a = 3.0, b = 2.6;
    std::vector<double> c, t;
    for (int i = 0; i < 12; ++i) {
      c.push_back(c2 - 1e-5 * std::pow(0.6, i));
      t.push_back(a - b * std::log(c2 - c.back()));
    }
    const auto fit = fit_log_period(c, t);
    CHECK(std::abs(fit.c2 - c2) <= 1e-10);
    CHECK(fit.A == doctest::Approx(a).epsilon(1e-6));
    CHECK(fit.B == doctest::Approx(b).epsilon(1e-6));
    CHECK_FALSE(fit.low_confidence);
  }
  SUBCASE("too few points") { CHECK_THROWS_AS(fit_log_period({-0.1, -0.09, -0.08}, {1, 2, 3}), std::invalid_argument); }
}

TEST_CASE("fold location needs a turning branch") {
  const auto sys = make_system("example2", -0.06);
  CHECK_THROWS_AS(locate_fold(sys, synthetic_branch({-0.0610, -0.0609, -0.0608, -0.0607})), std::invalid_argument);
  CHECK_THROWS_AS(locate_homoclinic(synthetic_branch({-0.0610, -0.0609})), std::invalid_argument);
}

TEST_CASE("bifurcation values") {
  const auto r = run_example2_bifurcations();
  CHECK(r.c1.c < r.c2.c2);
  CHECK(r.c2.c2 < r.c3.c);
  for (double gap : {r.c2.c2 - r.c1.c, r.c3.c - r.c2.c2}) {
    CHECK(gap > 1e-5);
    CHECK(gap < 1e-4);
  }
  CHECK(std::abs(r.c1.multiplier - 1.0) <= 1e-3);
  CHECK(std::abs(r.c3.multiplier - 1.0) <= 1e-3);
  CHECK(r.c1.c_hi - r.c1.c_lo <= 1e-8);
  CHECK(r.c3.c_hi - r.c3.c_lo <= 1e-8);
  CHECK(r.c2.relative_residual < 0.01);
  CHECK(r.gamma3_up.termination == BranchEvent::homoclinic_approach);

  SUBCASE("period grows without bound toward c2") {
    const auto& pts = r.gamma3_up.points;
    for (std::size_t i = pts.size() - 5; i < pts.size(); ++i) CHECK(pts[i].cycle.period > pts[i - 1].cycle.period);
    CHECK(r.c2.B > 0.0);
  }
  SUBCASE("c2 agrees with the manifold-splitting root") {
    const double lo = r.c1.c, hi = r.c3.c;
    REQUIRE(manifold_splitting(lo) * manifold_splitting(hi) < 0.0);
    const double c2 = bracketed_root(manifold_splitting, lo, hi, 1e-14);
    CAPTURE(c2);
    CHECK(std::abs(c2 - r.c2.c2) <= 1e-7);
  }
  SUBCASE("Liouville along the branch") {
    for (const auto& p : r.gamma3_down.points) {
      const double lm = std::pow(p.cycle.multiplier, 1.0 / p.cycle.period);
      CHECK(std::abs(lm - p.cycle.lambda) <= 1e-6 * p.cycle.lambda);
    }
  }
}

TEST_CASE("type numbers on the repelling cycle") {
  const auto tn = cycle_type_numbers(seed_example2_cycle("gamma4"));
  CHECK(std::abs(tn.forward.nu_tail - tn.rates.lambda) <= 1e-3);
  CHECK(tn.forward.frame_invariant);
  REQUIRE(tn.reversed.sigma_tail.has_value());
  CHECK(std::abs(*tn.reversed.sigma_tail) <= 0.05);
  CHECK(std::abs(tn.reversed.nu_tail * tn.rates.lambda - 1.0) <= 1e-6);
}
