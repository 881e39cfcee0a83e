#include <cmath>
#include <random>

#include "doctest.h"
#include "nhlab/systems.hpp"

using namespace nhlab;

namespace {

Vec random_state(const SystemDef& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec x(s.dim);
  for (int i = 0; i < s.dim; ++i) x[i] = 2.0 * u(rng);
  if (s.name == "example3" || s.name == "bundle-angle") x[1] = 0.05 + 3.0 * std::abs(u(rng));
  return x;
}

Mat fd_jacobian(const SystemDef& s, const Vec& x) {
  Mat j(s.dim, s.dim);
  for (int k = 0; k < s.dim; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.col(k) = (s.f(xp) - s.f(xm)) / (2.0 * h);
  }
  return j;
}

double param_for(const std::string& name, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (name == "example1") return 4.0 * u(rng) - 2.0;
  if (name == "example2") return -0.1 * u(rng);
  return u(rng);
}

}  // namespace

TEST_CASE("analytic jacobians match central differences") {
  std::mt19937_64 rng(20240917);
  for (const auto& name : builtin_system_names()) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto s = make_system(name, param_for(name, rng));
      const Vec x = random_state(s, rng);
      const Mat exact = s.df(x);
      const Mat approx = fd_jacobian(s, x);
      worst = std::max(worst, (exact - approx).norm() / std::max(1.0, exact.norm()));
    }
    CAPTURE(name);
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("parameter derivative of example2 matches differences") {
  const auto s = make_system("example2", -0.05);
  const Vec x = Eigen::Vector2d(0.7, -1.3);
  const double h = 1e-6;
  const Vec fd = (make_system("example2", -0.05 + h).f(x) - make_system("example2", -0.05 - h).f(x)) / (2 * h);
  CHECK((s.dfdp(x) - fd).norm() < 1e-8);
}

TEST_CASE("pointwise values") {
  SUBCASE("example2 divergence at the origin is -1/2 - c") {
    CHECK(make_system("example2", -0.08).divergence(Vec::Zero(2)) == doctest::Approx(-0.42).epsilon(1e-15));
  }
  SUBCASE("example3 vanishes on the fixed circle") {
    for (double beta : {0.0, 0.3, 1.0}) {
      const auto s = make_system("example3", beta);
      for (int k = 0; k < 32; ++k) {
        CHECK(s.f(Eigen::Vector3d(0.0, 0.0, kTwoPi * k / 32)).norm() == 0.0);
      }
    }
  }
  SUBCASE("example1 direct substitution") {
    const Vec f = make_system("example1", 1.0).f(Eigen::Vector2d(1.0, kPi / 2));
    CHECK(f[0] == doctest::Approx(-1.5));
    CHECK(f[1] == doctest::Approx(1.0));
  }
  SUBCASE("bundle-angle fixed points") {
    for (double beta : {0.0, 0.25, 0.5, 0.815, 1.0}) {
      const auto s = make_system("bundle-angle", beta);
      CHECK(s.f(Eigen::Vector2d(0.0, 0.0)).norm() <= 1e-15);
      CHECK(s.f(Eigen::Vector2d(0.75 * kPi, 0.0)).norm() <= 1e-15);
    }
  }
}

TEST_CASE("range and name errors") {
  CHECK_THROWS_AS(make_system("example4", 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_system("example2", 0.01), std::out_of_range);
  CHECK_THROWS_AS(make_system("example3", 1.2), std::out_of_range);
  CHECK_THROWS_AS(make_system("bundle-angle", -0.1), std::out_of_range);
  CHECK_NOTHROW(make_system("example1", -7.0));
}

TEST_CASE("closed-form oracles") {
  SUBCASE("variational matrix of example3") {
    CHECK((closed_form_variational_ex3(0.0) - Mat::Identity(3, 3)).norm() == 0.0);
    const Mat m1 = closed_form_variational_ex3(1.0);
    Mat expect(3, 3);
    expect << std::exp(-1.0), 0, 0, 0, 1, 0, 1 - std::exp(-1.0), 0, 1;
    CHECK((m1 - expect).norm() < 1e-15);
    CHECK(closed_form_variational_ex3(5.0)(2, 0) == doctest::Approx(0.993262).epsilon(1e-6));
  }
  SUBCASE("normal factor of example1") {
    CHECK(closed_form_normal_factor_ex1(0.0, 1.0, kTwoPi) == doctest::Approx(0.0432139).epsilon(1e-6));
    CHECK(closed_form_normal_factor_ex1(1.5 * kPi, 0.0, 1.0) == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
    // independent quadrature of the a-coefficient along the backward orbit
    const double theta = 0.7, beta = 1.3, t = 3.1;
    const int n = 20000;
    double integral = 0.0;
    for (int i = 0; i < n; ++i) {
      const double s = (i + 0.5) * t / n;
      integral += (0.5 + std::sin(theta - beta * t + beta * s)) * t / n;
    }
    CHECK(closed_form_normal_factor_ex1(theta, beta, t) == doctest::Approx(std::exp(-integral)).epsilon(1e-7));
    for (int k = 1; k <= 3; ++k) {
      const double f = closed_form_normal_factor_ex1(0.4, 2.0, kTwoPi * k / 2.0);
      CHECK(std::pow(f, 1.0 / (kTwoPi * k / 2.0)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    }
  }
}

TEST_CASE("periodic wrapping and time reversal") {
  const auto s = make_system("example3", 0.5);
  const Vec w = s.wrap(Eigen::Vector3d(0.1, 4.0, -1.0));
  CHECK(w[0] == 0.1);
  CHECK(w[1] == doctest::Approx(4.0 - kPi));
  CHECK(w[2] == doctest::Approx(kTwoPi - 1.0));
  const auto r = time_reversed(s);
  const Vec x = Eigen::Vector3d(0.3, 1.0, 2.0);
  CHECK((r.f(x) + s.f(x)).norm() == 0.0);
  CHECK((r.df(x) + s.df(x)).norm() == 0.0);
}
