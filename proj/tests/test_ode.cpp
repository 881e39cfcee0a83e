#include <cmath>
#include <tuple>

#include "doctest.h"
#include "nhlab/ode.hpp"

using namespace nhlab;

namespace {

const Field decay = [](const Vec& y, Vec& dy) { dy = -y; };

// Fixed steps: a huge tolerance accepts every step and max_step pins its size.
double fixed_step_error(double h) {
  IntegratorConfig cfg;
  cfg.rel_tol = 1.0;
  cfg.abs_tol = 1.0;
  cfg.max_step = h;
  cfg.initial_step = h;
  const auto tr = integrate_field(decay, Vec::Constant(1, 1.0), 0.0, 1.0, cfg);
  return std::abs(tr.back()[0] - std::exp(-1.0));
}

SystemDef rotation() {
  SystemDef s;
  s.name = "rotation";
  s.dim = 2;
  s.rhs = [](const Vec& x, double) { return Vec(Eigen::Vector2d(x[1], -x[0])); };
  s.jacobian = [](const Vec&, double) { return Mat((Mat(2, 2) << 0, 1, -1, 0).finished()); };
  return s;
}

}  // namespace

TEST_CASE("scalar decay") {
  const auto tr = integrate_field(decay, Vec::Constant(1, 1.0), 0.0, 1.0, {});
  REQUIRE(tr.ok());
  CHECK(std::abs(tr.back()[0] - std::exp(-1.0)) <= 1e-9);
}

TEST_CASE("halving the step shows fifth order") {
  for (double h : {0.2, 0.1, 0.05}) {
    const double ratio = fixed_step_error(h) / fixed_step_error(h / 2);
    CAPTURE(h);
    CAPTURE(ratio);
    CHECK(ratio >= 16.0);
    CHECK(ratio <= 80.0);
  }
}

TEST_CASE("error tracks the tolerance") {
  IntegratorConfig loose, tight;
  loose.rel_tol = 1e-7;
  tight.rel_tol = 1e-8;
  loose.abs_tol = tight.abs_tol = 1e-16;
  const auto a = integrate_field(decay, Vec::Constant(1, 1.0), 0.0, 1.0, loose);
  const auto b = integrate_field(decay, Vec::Constant(1, 1.0), 0.0, 1.0, tight);
  const double ea = std::abs(a.back()[0] - std::exp(-1.0)), eb = std::abs(b.back()[0] - std::exp(-1.0));
  CHECK(ea <= 1e-7);
  CHECK(eb <= 1e-8);
  CHECK(eb < ea);
}

TEST_CASE("example1 normal decay over one period") {
  const auto s = make_system("example1", 1.0);
  const auto tr = integrate(s, Eigen::Vector2d(1.0, 0.0), 0.0, kTwoPi);
  REQUIRE(tr.ok());
  CHECK(std::abs(tr.back()[0] - closed_form_normal_factor_ex1(0.0, 1.0, kTwoPi)) <= 1e-8);
}

TEST_CASE("fixed circle of example3 stays put") {
  const auto s = make_system("example3", 0.8);
  const Vec x0 = Eigen::Vector3d(0.0, 0.0, 1.3);
  const auto tr = integrate(s, x0, 0.0, 7.0);
  CHECK((tr.back() - x0).norm() == 0.0);
}

TEST_CASE("variational flow") {
  SUBCASE("closed form of example3 at beta = 0") {
    const auto s = make_system("example3", 0.0);
    for (double t : {0.5, 1.0, 5.0}) {
      const auto sol = integrate_variational(s, Eigen::Vector3d(0.0, 0.0, 2.0), 0.0, t);
      REQUIRE(sol.ok());
      CHECK((sol.final_fundamental() - closed_form_variational_ex3(t)).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
  SUBCASE("empty span gives the identity") {
    const auto sol = integrate_variational(make_system("example2", -0.05), Eigen::Vector2d(0.3, 0.2), 1.0, 1.0);
    CHECK((sol.final_fundamental() - Mat::Identity(2, 2)).norm() == 0.0);
  }
  SUBCASE("rotation by a quarter turn") {
    const auto sol = integrate_variational(rotation(), Eigen::Vector2d(1.0, 0.0), 0.0, kPi / 2);
    Mat expect(2, 2);
    expect << 0, 1, -1, 0;
    CHECK((sol.final_fundamental() - expect).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("Liouville identity on example2 trajectories") {
  VariationalOptions opts;
  opts.divergence_integral = true;
  for (const auto& [c, x0] : {std::pair{-0.06, Eigen::Vector2d(1.2, 0.3)}, std::pair{-0.02, Eigen::Vector2d(0.5, 0.5)},
                              std::pair{-0.09, Eigen::Vector2d(-0.8, -0.2)}}) {
    const auto s = make_system("example2", c);
    const auto sol = integrate_variational(s, x0, 0.0, 8.0, {}, opts);
    REQUIRE(sol.ok());
    const double det = sol.final_fundamental().determinant();
    const double liouville = std::exp(sol.divergence_integral_of(sol.augmented().back()));
    CHECK(std::abs(det - liouville) / liouville <= 1e-6);
  }
}

TEST_CASE("backward then forward returns to the start") {
  // Off the invariant torus example3 orbits grow like e^|t| backward (a and
  // theta reach ~3e3 by t = -10), so that system runs at tighter tolerances.
  IntegratorConfig tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  const std::vector<std::tuple<std::string, Vec, IntegratorConfig>> cases = {
      {"example1", Eigen::Vector2d(0.7, 1.1), IntegratorConfig{}},
      {"example3", Eigen::Vector3d(0.02, 1.0, 0.5), tight},
  };
  for (const auto& [name, x0, cfg] : cases) {
    const auto s = make_system(name, 0.9);
    for (double t : {1.0, 5.0, 10.0}) {
      const auto back = integrate(s, x0, 0.0, -t, cfg);
      REQUIRE(back.ok());
      const auto fwd = integrate(s, back.back(), -t, 0.0, cfg);
      CAPTURE(name);
      CAPTURE(t);
      CHECK((fwd.back() - x0).norm() <= 1e-7);
    }
  }
}

TEST_CASE("dense output reproduces accepted states exactly") {
  const auto tr = integrate(make_system("example2", -0.05), Eigen::Vector2d(1.2, 0.3), 0.0, 20.0);
  REQUIRE(tr.has_dense_output());
  for (std::size_t i = 0; i < tr.size(); ++i) CHECK((tr(tr.times()[i]) - tr.states()[i]).norm() == 0.0);
}

TEST_CASE("section crossings") {
  SUBCASE("unit drift") {
    const Field drift = [](const Vec&, Vec& dy) { dy = Vec::Ones(1); };
    const auto tr = integrate_field(drift, Vec::Zero(1), 0.0, 1.0, {});
    const auto ev = section_crossings(tr, Vec::Constant(1, 0.5), Vec::Ones(1), CrossingDirection::either);
    REQUIRE(ev.size() == 1);
    CHECK(std::abs(ev[0].t - 0.5) <= 1e-10);
  }
  SUBCASE("zeta section of example3 at beta = 0") {
    const auto s = make_system("example3", 0.0);
    const auto tr = integrate(s, Eigen::Vector3d(0.0, kPi / 20, 0.0), 0.0, 10.0);
    const auto ev = section_crossings(tr, Eigen::Vector3d(0.0, kPi / 2, 0.0), Eigen::Vector3d(0.0, 1.0, 0.0),
                                      CrossingDirection::either);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].t == doctest::Approx(1.0 / std::tan(kPi / 20)).epsilon(1e-9));
    CHECK(ev[0].t == doctest::Approx(6.3138).epsilon(1e-4));
    CHECK(std::abs(ev[0].state[1] - kPi / 2) <= 1e-10);
  }
  SUBCASE("direction filter halves a circle's count") {
    const auto tr = integrate(rotation(), Eigen::Vector2d(1.0, 0.0), 0.0, 10 * kTwoPi + 0.3);
    const Vec p = Vec::Zero(2);
    const Vec n = Eigen::Vector2d(0.0, 1.0);
    const auto both = section_crossings(tr, p, n, CrossingDirection::either);
    const auto up = section_crossings(tr, p, n, CrossingDirection::positive);
    CHECK(both.size() == 20);
    CHECK(up.size() == 10);
    for (const auto& e : both) CHECK(std::abs(e.state[1]) <= 1e-10);
  }
}

TEST_CASE("operator norm") {
  CHECK(operator_norm((Mat(2, 2) << 3, 0, 0, 4).finished()) == doctest::Approx(4.0));
  CHECK(operator_norm((Mat(2, 2) << 1, 1, 0, 1).finished()) == doctest::Approx((1 + std::sqrt(5.0)) / 2).epsilon(1e-14));
  CHECK(operator_norm(Mat::Constant(1, 1, -0.5)) == 0.5);
  const Mat m3 = (Mat(3, 3) << 1, 2, 0, 0, 1, -1, 3, 0, 2).finished();
  Eigen::JacobiSVD<Mat> svd(m3);
  CHECK(operator_norm(m3) == doctest::Approx(svd.singularValues()[0]).epsilon(1e-12));
  CHECK_THROWS(operator_norm(Mat::Constant(2, 2, std::nan(""))));
}

TEST_CASE("config validation and failure reporting") {
  IntegratorConfig bad;
  bad.rel_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  const Field blowup = [](const Vec& y, Vec& dy) { dy = y.cwiseProduct(y); };
  const auto tr = integrate_field(blowup, Vec::Ones(1), 0.0, 2.0, {});
  CHECK_FALSE(tr.ok());
  CHECK_FALSE(tr.diagnostic().empty());
  CHECK(tr.t_end() < 1.0 + 1e-6);
}
