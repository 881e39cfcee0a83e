#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nhlab/dopri5.hpp"
#include "nhlab/systems.hpp"
#include "nhlab/types.hpp"

namespace nhlab {

/// Autonomous field in writer form: field(y, dy).
using Field = std::function<void(const Vec&, Vec&)>;

enum class CrossingDirection { positive = 1, negative = -1, either = 0 };

/// Hyperplane {x : <x - point, normal> = 0}. Only the leading normal.size()
/// components of a state enter the section function, so the same section
/// works on augmented (variational) states.
struct Section {
  Vec point;
  Vec normal;
  CrossingDirection direction = CrossingDirection::either;
  /// Optional restriction to a half-plane: crossings are kept only when
  /// <x - point, ray> >= 0. Empty means no restriction.
  Vec ray;

  [[nodiscard]] double value(const Vec& x) const {
    return (x.head(normal.size()) - point).dot(normal);
  }
  [[nodiscard]] bool admits(const Vec& x) const {
    return ray.size() == 0 || (x.head(ray.size()) - point).dot(ray) >= 0.0;
  }
};

struct SectionEvent {
  double t = 0.0;
  Vec state;
  int direction = 0;  // sign of d/dt <x, normal> in forward time
};

/// Sampled solution with its continuous extension.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(int dim, double t0, Vec x0) : dim_(dim) {
    times_.push_back(t0);
    states_.push_back(std::move(x0));
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] const std::vector<Vec>& states() const { return states_; }
  [[nodiscard]] const std::vector<DenseSegment<double>>& segments() const { return segments_; }
  [[nodiscard]] bool has_dense_output() const { return !segments_.empty() || times_.size() == 1; }
  [[nodiscard]] double t_begin() const { return times_.front(); }
  [[nodiscard]] double t_end() const { return times_.back(); }
  [[nodiscard]] const Vec& front() const { return states_.front(); }
  [[nodiscard]] const Vec& back() const { return states_.back(); }
  [[nodiscard]] std::size_t size() const { return times_.size(); }

  /// Dense-output evaluation at any time in the covered interval.
  [[nodiscard]] Vec operator()(double t) const;
  /// Index of the segment covering t.
  [[nodiscard]] std::size_t segment_index(double t) const;

  [[nodiscard]] IntegrationStatus status() const { return status_; }
  [[nodiscard]] bool ok() const {
    return status_ == IntegrationStatus::success || status_ == IntegrationStatus::stopped;
  }
  [[nodiscard]] const std::string& diagnostic() const { return diagnostic_; }
  /// Section event that terminated the run, if any.
  [[nodiscard]] const std::optional<SectionEvent>& stop_event() const { return stop_event_; }

  void append(const DenseSegment<double>& seg, bool keep_dense);
  void set_status(IntegrationStatus s, std::string diag) {
    status_ = s;
    diagnostic_ = std::move(diag);
  }
  void set_stop_event(SectionEvent e) { stop_event_ = std::move(e); }

 private:
  int dim_ = 0;
  std::vector<double> times_;
  std::vector<Vec> states_;
  std::vector<DenseSegment<double>> segments_;
  IntegrationStatus status_ = IntegrationStatus::success;
  std::string diagnostic_;
  std::optional<SectionEvent> stop_event_;
};

/// Terminating conditions for a single run.
struct StopRule {
  /// Stop at the first admissible crossing of this section.
  std::optional<Section> section;
  /// Crossings closer than this (in |t - t0|) to the start are ignored.
  double min_elapsed = 0.0;
  /// Abort (status non_finite) once max |x_i| over the leading `escape_dims`
  /// components exceeds this radius. Zero disables the check.
  double escape_radius = 0.0;
  int escape_dims = 0;
};

/// Low-level driver shared by every public integration routine.
Trajectory integrate_field(const Field& field, Vec x0, double t0, double t1,
                           const IntegratorConfig& cfg, const StopRule& stop = {});

Trajectory integrate(const SystemDef& system, const Vec& x0, double t0, double t1,
                     const IntegratorConfig& cfg = {}, const StopRule& stop = {});

struct VariationalOptions {
  /// Also integrate s = dx/dparam with s' = J s + df/dparam, s(t0) = 0.
  bool param_sensitivity = false;
  /// Also integrate the running integral of div f along the orbit.
  bool divergence_integral = false;
};

/// Base trajectory jointly integrated with the fundamental matrix.
///
/// Augmented layout: [x (n) | Phi column-major (n*n) | dx/dparam (n) | int div f (1)],
/// the last two blocks present only when requested.
class VariationalSolution {
 public:
  VariationalSolution() = default;
  VariationalSolution(Trajectory augmented, int dim, VariationalOptions opts)
      : aug_(std::move(augmented)), dim_(dim), opts_(opts) {}

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] const Trajectory& augmented() const { return aug_; }
  [[nodiscard]] const std::vector<double>& times() const { return aug_.times(); }
  [[nodiscard]] bool ok() const { return aug_.ok(); }

  [[nodiscard]] Vec state(double t) const { return state_of(aug_(t)); }
  [[nodiscard]] Mat fundamental(double t) const { return fundamental_of(aug_(t)); }
  [[nodiscard]] Vec state_at(std::size_t i) const { return state_of(aug_.states()[i]); }
  [[nodiscard]] Mat fundamental_at(std::size_t i) const { return fundamental_of(aug_.states()[i]); }
  [[nodiscard]] Vec final_state() const { return state_of(aug_.back()); }
  [[nodiscard]] Mat final_fundamental() const { return fundamental_of(aug_.back()); }

  [[nodiscard]] Vec state_of(const Vec& aug) const { return aug.head(dim_); }
  [[nodiscard]] Mat fundamental_of(const Vec& aug) const {
    return Eigen::Map<const Mat>(aug.data() + dim_, dim_, dim_);
  }
  [[nodiscard]] Vec sensitivity_of(const Vec& aug) const;
  [[nodiscard]] double divergence_integral_of(const Vec& aug) const;

  /// Projection of the base trajectory (sample times and states only).
  [[nodiscard]] Trajectory base() const;

 private:
  Trajectory aug_;
  int dim_ = 0;
  VariationalOptions opts_;
};

/// Augmented field for the variational system of `system`.
Field variational_field(const SystemDef& system, VariationalOptions opts = {});
/// Initial augmented state: x0, identity, zeros.
Vec variational_initial(const Vec& x0, VariationalOptions opts = {});

VariationalSolution integrate_variational(const SystemDef& system, const Vec& x0, double t0, double t1,
                                          const IntegratorConfig& cfg = {},
                                          VariationalOptions opts = {}, const StopRule& stop = {});

/// All crossings of the section along the dense output, refined to |g| <= 1e-10.
std::vector<SectionEvent> section_crossings(const Trajectory& traj, const Section& section);
std::vector<SectionEvent> section_crossings(const Trajectory& traj, const Vec& section_point,
                                            const Vec& section_normal, CrossingDirection direction);

/// Spectral norm (largest singular value).
double operator_norm(const Mat& m);

/// Root of a continuous function on a sign-changing bracket: Illinois
/// false position guarded by bisection, capped at `max_iter` iterations.
double bracketed_root(const std::function<double(double)>& g, double a, double b, double g_tol = 1e-13,
                      int max_iter = 60);

}  // namespace nhlab
