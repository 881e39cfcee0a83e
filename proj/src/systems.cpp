#include "nhlab/systems.hpp"

#include <cmath>
#include <limits>

namespace nhlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_range(const std::string& name, double param, double lo, double hi) {
  if (!(param >= lo && param <= hi)) {
    throw std::out_of_range(name + ": parameter " + std::to_string(param) + " outside [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// a' = -(1/2 + sin theta) a,  theta' = beta
SystemDef example1(double beta) {
  if (!std::isfinite(beta)) throw std::out_of_range("example1: beta must be finite");
  SystemDef s;
  s.name = "example1";
  s.dim = 2;
  s.param = beta;
  s.rhs = [](const Vec& x, double b) { return vec({-(0.5 + std::sin(x[1])) * x[0], b}); };
  s.jacobian = [](const Vec& x, double) {
    Mat j(2, 2);
    j << -(0.5 + std::sin(x[1])), -std::cos(x[1]) * x[0], 0.0, 0.0;
    return j;
  };
  s.param_derivative = [](const Vec&, double) { return vec({0.0, 1.0}); };
  s.periodic_coords = {{1, kTwoPi}};
  s.domain = DomainBox(vec({-10.0, -kInf}), vec({10.0, kInf}));
  return s;
}

// x' = -x/2 + y,  y' = x - x^3 + y (y^2/2 - (x^2/2 - x^4/4) - c)
SystemDef example2(double c) {
  require_range("example2", c, -0.1, 0.0);
  SystemDef s;
  s.name = "example2";
  s.dim = 2;
  s.param = c;
  s.rhs = [](const Vec& z, double cc) {
    const double x = z[0], y = z[1];
    const double x2 = x * x;
    return vec({-0.5 * x + y, x - x2 * x + y * (0.5 * y * y - (0.5 * x2 - 0.25 * x2 * x2) - cc)});
  };
  s.jacobian = [](const Vec& z, double cc) {
    const double x = z[0], y = z[1];
    const double x2 = x * x;
    Mat j(2, 2);
    j << -0.5, 1.0, 1.0 - 3.0 * x2 + y * (x2 * x - x),
        1.5 * y * y - 0.5 * x2 + 0.25 * x2 * x2 - cc;
    return j;
  };
  s.param_derivative = [](const Vec& z, double) { return vec({0.0, -z[1]}); };
  s.domain = DomainBox(vec({-3.0, -3.0}), vec({3.0, 3.0}));
  return s;
}

// a' = -a + beta^2 sin^2(zeta) sin(theta),  zeta' = sin^2(zeta),  theta' = a
SystemDef example3(double beta) {
  require_range("example3", beta, 0.0, 1.0);
  SystemDef s;
  s.name = "example3";
  s.dim = 3;
  s.param = beta;
  s.rhs = [](const Vec& x, double b) {
    const double sz = std::sin(x[1]);
    return vec({-x[0] + b * b * sz * sz * std::sin(x[2]), sz * sz, x[0]});
  };
  s.jacobian = [](const Vec& x, double b) {
    const double sz = std::sin(x[1]), cz = std::cos(x[1]);
    const double st = std::sin(x[2]), ct = std::cos(x[2]);
    Mat j(3, 3);
    j << -1.0, 2.0 * b * b * sz * cz * st, b * b * sz * sz * ct,  //
        0.0, 2.0 * sz * cz, 0.0,                                    //
        1.0, 0.0, 0.0;
    return j;
  };
  s.param_derivative = [](const Vec& x, double b) {
    const double sz = std::sin(x[1]);
    return vec({2.0 * b * sz * sz * std::sin(x[2]), 0.0, 0.0});
  };
  s.periodic_coords = {{1, kPi}, {2, kTwoPi}};
  s.domain = DomainBox(vec({-2.0, -kInf, -kInf}), vec({2.0, kInf, kInf}));
  return s;
}

// alpha' = -cos(a) sin(a) - sin^2(a) - beta^2 sin^2(zeta) cos^2(a),  zeta' = sin^2(zeta)
SystemDef bundle_angle(double beta) {
  require_range("bundle-angle", beta, 0.0, 1.0);
  SystemDef s;
  s.name = "bundle-angle";
  s.dim = 2;
  s.param = beta;
  s.rhs = [](const Vec& x, double b) {
    const double sa = std::sin(x[0]), ca = std::cos(x[0]), sz = std::sin(x[1]);
    return vec({-ca * sa - sa * sa - b * b * sz * sz * ca * ca, sz * sz});
  };
  s.jacobian = [](const Vec& x, double b) {
    const double s2a = std::sin(2.0 * x[0]), c2a = std::cos(2.0 * x[0]);
    const double sz = std::sin(x[1]), s2z = std::sin(2.0 * x[1]);
    const double ca = std::cos(x[0]);
    Mat j(2, 2);
    j << -c2a - s2a + b * b * sz * sz * s2a, -b * b * s2z * ca * ca,  //
        0.0, s2z;
    return j;
  };
  s.param_derivative = [](const Vec& x, double b) {
    const double sz = std::sin(x[1]), ca = std::cos(x[0]);
    return vec({-2.0 * b * sz * sz * ca * ca, 0.0});
  };
  s.periodic_coords = {{0, kPi}, {1, kPi}};
  s.domain = DomainBox(vec({-kInf, -kInf}), vec({kInf, kInf}));
  return s;
}

}  // namespace

DomainBox::DomainBox(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw std::invalid_argument("DomainBox: size mismatch");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (std::isfinite(lower[i]) && std::isfinite(upper[i]) && !(lower[i] < upper[i])) {
      throw std::invalid_argument("DomainBox: lower bound must be below upper bound");
    }
  }
}

bool DomainBox::contains(const Vec& x) const {
  if (x.size() != lower.size()) return false;
  return ((x.array() >= lower.array()) && (x.array() <= upper.array())).all();
}

Vec SystemDef::wrap(const Vec& x) const {
  Vec out = x;
  for (const auto& pc : periodic_coords) {
    double v = std::fmod(out[pc.index], pc.period);
    if (v < 0) v += pc.period;
    out[pc.index] = v;
  }
  return out;
}

const std::vector<std::string>& builtin_system_names() {
  static const std::vector<std::string> names = {"example1", "example2", "example3", "bundle-angle"};
  return names;
}

SystemDef make_system(const std::string& name, double param) {
  if (name == "example1") return example1(param);
  if (name == "example2") return example2(param);
  if (name == "example3") return example3(param);
  if (name == "bundle-angle") return bundle_angle(param);
  throw std::invalid_argument("unknown system '" + name + "'");
}

SystemDef time_reversed(const SystemDef& system) {
  SystemDef r = system;
  r.name = system.name + "-reversed";
  r.rhs = [f = system.rhs](const Vec& x, double p) -> Vec { return -f(x, p); };
  r.jacobian = [j = system.jacobian](const Vec& x, double p) -> Mat { return -j(x, p); };
  if (system.param_derivative) {
    r.param_derivative = [d = system.param_derivative](const Vec& x, double p) -> Vec { return -d(x, p); };
  }
  return r;
}

Mat closed_form_variational_ex3(double t) {
  const double e = std::exp(-t);
  Mat m(3, 3);
  m << e, 0.0, 0.0,  //
      0.0, 1.0, 0.0,  //
      1.0 - e, 0.0, 1.0;
  return m;
}

double closed_form_normal_factor_ex1(double theta, double beta, double t) {
  if (beta == 0.0) return std::exp(-(0.5 + std::sin(theta)) * t);
  return std::exp(-0.5 * t + (std::cos(theta) - std::cos(theta - beta * t)) / beta);
}

}  // namespace nhlab
