#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace sde {

using Vector = std::vector<double>;

// Euclidean norm of a state vector.
double norm(std::span<const double> v);

// Right-continuous piecewise-constant path on [start, end] with values in R^d.
//
// Segment i covers [t_i, t_{i+1}) and the last segment covers [t_last, end].
// The first breakpoint is the start of the domain. Instances are immutable
// once built (PathBuilder is the only mutator) and may be shared across
// threads.
class CadlagPath {
 public:
  CadlagPath() = default;

  // `values` holds one d-vector per breakpoint, flattened row-major.
  CadlagPath(std::size_t dimension, std::vector<double> breakpoints, std::vector<double> values, double end);

  // Scalar convenience form; `end` defaults to the last breakpoint.
  static CadlagPath scalar(std::vector<double> breakpoints, std::vector<double> values, double end);
  static CadlagPath scalar(std::vector<double> breakpoints, std::vector<double> values);
  static CadlagPath constant(double start, double end, std::span<const double> value);
  static CadlagPath constant(double start, double end, double value);

  double start() const { return breakpoints_.front(); }
  double end() const { return end_; }
  std::size_t dimension() const { return dim_; }
  std::size_t segment_count() const { return breakpoints_.size(); }
  bool empty() const { return breakpoints_.empty(); }

  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> segment_value(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

  // Index of the segment containing t (t in [start, end]).
  std::size_t segment_index(double t) const;

  std::span<const double> value_at(double t) const;

  // Value of the segment immediately to the left of t; requires t > start.
  std::span<const double> left_limit(double t) const;

  // sup of |x(s)| over the closed window [a, b].
  double window_sup(double a, double b) const;

  // sup of |x(s)| over the half-open window [a, b); zero when a == b.
  double window_sup_open(double a, double b) const;

  // The path stopped at t: unchanged on [start, t], frozen at value_at(t)
  // afterwards, same domain.
  CadlagPath history(double t) const;

  // Same path with a different right end (>= last breakpoint).
  CadlagPath with_end(double end) const;

  CadlagPath scaled(double factor) const;

  // Scalar path of |x(t)|^2.
  CadlagPath squared_norm() const;

  friend bool operator==(const CadlagPath&, const CadlagPath&) = default;

 private:
  friend class PathBuilder;
  void check_domain(double t, const char* op) const;

  std::size_t dim_ = 0;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  double end_ = 0.0;
};

// Read-only view of the stopped path x_{. ^ freeze} on [start, horizon].
// This is what coefficient functions receive: nothing after `freeze` is
// visible, and queries beyond it see the frozen value.
//
// With `right_limit_at_freeze`, left-sided queries at exactly the freeze time
// return their limits from the right (left_limit(freeze) == value_at(freeze)).
// The Euler solver uses this for integrands evaluated at the left end of a
// cell, where only the limit s -> (k/n)+ matters.
class PathView {
 public:
  // The whole path, frozen at its own end.
  explicit PathView(const CadlagPath& path);
  PathView(const CadlagPath& path, double freeze, double horizon, bool right_limit_at_freeze = false);

  double start() const { return path_->start(); }
  double end() const { return horizon_; }
  double freeze_time() const { return freeze_; }
  std::size_t dimension() const { return path_->dimension(); }

  std::span<const double> value_at(double t) const;
  std::span<const double> left_limit(double t) const;
  double window_sup(double a, double b) const;
  double window_sup_open(double a, double b) const;

  // history(path, freeze) as an owned path on [start, horizon].
  CadlagPath materialize() const;

 private:
  void check_domain(double t, const char* op) const;

  const CadlagPath* path_;
  double freeze_;
  double horizon_;
  bool right_limit_at_freeze_;
};

// Incrementally grows a path forward in time.
class PathBuilder {
 public:
  PathBuilder(std::size_t dimension, double start, std::span<const double> initial_value);
  // Continues an existing path past its end.
  explicit PathBuilder(CadlagPath initial);

  // New breakpoint at t with the given value. t must not precede the current
  // end; a t equal to the last breakpoint overwrites that segment's value.
  void append(double t, std::span<const double> value);

  double current_time() const { return path_.end_; }
  std::span<const double> current_value() const {
    return path_.segment_value(path_.segment_count() - 1);
  }
  const CadlagPath& path() const { return path_; }

  CadlagPath finish(double end) &&;

 private:
  CadlagPath path_;
};

// sup over [a, b] of |p(s) - q(s)|; both paths must cover [a, b].
double sup_distance(const CadlagPath& p, const CadlagPath& q, double a, double b);

// CSV dump: header "t,x_1,...,x_d", one row per breakpoint.
void write_csv(std::ostream& out, const CadlagPath& path);

}  // namespace sde
