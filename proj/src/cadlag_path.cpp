#include "sde/cadlag_path.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "sde/csv.hpp"
#include "sde/errors.hpp"

namespace sde {

double norm(std::span<const double> v) {
  if (v.size() == 1) return std::abs(v[0]);
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

CadlagPath::CadlagPath(std::size_t dimension, std::vector<double> breakpoints, std::vector<double> values,
                       double end)
    : dim_(dimension), breakpoints_(std::move(breakpoints)), values_(std::move(values)), end_(end) {
  if (dim_ == 0) throw ArgumentError("CadlagPath: dimension must be positive");
  if (breakpoints_.empty()) throw ArgumentError("CadlagPath: at least one breakpoint required");
  if (values_.size() != breakpoints_.size() * dim_)
    throw ArgumentError("CadlagPath: expected " + std::to_string(breakpoints_.size() * dim_) + " values, got " +
                        std::to_string(values_.size()));
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1]))
      throw ArgumentError("CadlagPath: breakpoints must be strictly increasing");
  }
  if (!(end_ >= breakpoints_.back())) throw ArgumentError("CadlagPath: end precedes the last breakpoint");
}

CadlagPath CadlagPath::scalar(std::vector<double> breakpoints, std::vector<double> values, double end) {
  return CadlagPath(1, std::move(breakpoints), std::move(values), end);
}

CadlagPath CadlagPath::scalar(std::vector<double> breakpoints, std::vector<double> values) {
  const double end = breakpoints.empty() ? 0.0 : breakpoints.back();
  return scalar(std::move(breakpoints), std::move(values), end);
}

CadlagPath CadlagPath::constant(double start, double end, std::span<const double> value) {
  return CadlagPath(value.size(), {start}, Vector(value.begin(), value.end()), end);
}

CadlagPath CadlagPath::constant(double start, double end, double value) {
  return CadlagPath(1, {start}, {value}, end);
}

void CadlagPath::check_domain(double t, const char* op) const {
  if (empty()) throw DomainError(std::string(op) + ": empty path");
  if (!(t >= start() && t <= end_))
    throw DomainError(std::string(op) + ": t=" + format_double(t) + " outside [" + format_double(start()) + ", " +
                      format_double(end_) + "]");
}

std::size_t CadlagPath::segment_index(double t) const {
  check_domain(t, "segment_index");
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
}

std::span<const double> CadlagPath::value_at(double t) const { return segment_value(segment_index(t)); }

std::span<const double> CadlagPath::left_limit(double t) const {
  check_domain(t, "left_limit");
  if (!(t > start())) throw DomainError("left_limit: requires t > start");
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return segment_value(static_cast<std::size_t>(it - breakpoints_.begin()) - 1);
}

double CadlagPath::window_sup(double a, double b) const {
  if (a > b) throw ArgumentError("window_sup: a > b");
  check_domain(a, "window_sup");
  check_domain(b, "window_sup");
  const std::size_t first = segment_index(a);
  const std::size_t last = segment_index(b);
  double sup = 0.0;
  for (std::size_t i = first; i <= last; ++i) sup = std::max(sup, norm(segment_value(i)));
  return sup;
}

double CadlagPath::window_sup_open(double a, double b) const {
  if (a > b) throw ArgumentError("window_sup_open: a > b");
  check_domain(a, "window_sup_open");
  check_domain(b, "window_sup_open");
  if (a == b) return 0.0;
  const std::size_t first = segment_index(a);
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), b);
  const std::size_t last = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  double sup = 0.0;
  for (std::size_t i = first; i <= last; ++i) sup = std::max(sup, norm(segment_value(i)));
  return sup;
}

CadlagPath CadlagPath::history(double t) const {
  const std::size_t keep = segment_index(t) + 1;
  CadlagPath out;
  out.dim_ = dim_;
  out.breakpoints_.assign(breakpoints_.begin(), breakpoints_.begin() + static_cast<std::ptrdiff_t>(keep));
  out.values_.assign(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(keep * dim_));
  out.end_ = end_;
  return out;
}

CadlagPath CadlagPath::with_end(double end) const {
  return CadlagPath(dim_, breakpoints_, values_, end);
}

CadlagPath CadlagPath::scaled(double factor) const {
  CadlagPath out = *this;
  for (double& v : out.values_) v *= factor;
  return out;
}

CadlagPath CadlagPath::squared_norm() const {
  std::vector<double> sq(breakpoints_.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double n = norm(segment_value(i));
    sq[i] = n * n;
  }
  return CadlagPath(1, breakpoints_, std::move(sq), end_);
}

PathView::PathView(const CadlagPath& path) : PathView(path, path.end(), path.end()) {}

PathView::PathView(const CadlagPath& path, double freeze, double horizon, bool right_limit_at_freeze)
    : path_(&path), freeze_(freeze), horizon_(horizon), right_limit_at_freeze_(right_limit_at_freeze) {
  if (path.empty()) throw ArgumentError("PathView: empty path");
  if (!(freeze >= path.start() && freeze <= path.end()))
    throw DomainError("PathView: freeze time outside the underlying path");
  if (horizon < freeze) throw ArgumentError("PathView: horizon precedes freeze time");
}

void PathView::check_domain(double t, const char* op) const {
  if (!(t >= start() && t <= horizon_))
    throw DomainError(std::string(op) + ": t=" + format_double(t) + " outside [" + format_double(start()) + ", " +
                      format_double(horizon_) + "]");
}

std::span<const double> PathView::value_at(double t) const {
  check_domain(t, "value_at");
  return path_->value_at(std::min(t, freeze_));
}

std::span<const double> PathView::left_limit(double t) const {
  check_domain(t, "left_limit");
  if (!(t > start())) throw DomainError("left_limit: requires t > start");
  if (t > freeze_ || (right_limit_at_freeze_ && t == freeze_)) return path_->value_at(freeze_);
  return path_->left_limit(t);
}

double PathView::window_sup(double a, double b) const {
  if (a > b) throw ArgumentError("window_sup: a > b");
  check_domain(a, "window_sup");
  check_domain(b, "window_sup");
  return path_->window_sup(std::min(a, freeze_), std::min(b, freeze_));
}

double PathView::window_sup_open(double a, double b) const {
  if (a > b) throw ArgumentError("window_sup_open: a > b");
  check_domain(a, "window_sup_open");
  check_domain(b, "window_sup_open");
  if (b > freeze_ || (right_limit_at_freeze_ && b == freeze_)) return path_->window_sup(std::min(a, freeze_), freeze_);
  return path_->window_sup_open(a, b);
}

CadlagPath PathView::materialize() const { return path_->history(freeze_).with_end(horizon_); }

PathBuilder::PathBuilder(std::size_t dimension, double start, std::span<const double> initial_value) {
  if (initial_value.size() != dimension) throw ArgumentError("PathBuilder: initial value has wrong dimension");
  path_ = CadlagPath(dimension, {start}, Vector(initial_value.begin(), initial_value.end()), start);
}

PathBuilder::PathBuilder(CadlagPath initial) : path_(std::move(initial)) {
  if (path_.empty()) throw ArgumentError("PathBuilder: empty initial path");
}

void PathBuilder::append(double t, std::span<const double> value) {
  if (value.size() != path_.dim_) throw ArgumentError("PathBuilder::append: wrong dimension");
  if (t < path_.end_) throw ArgumentError("PathBuilder::append: time precedes the current end");
  if (t == path_.breakpoints_.back()) {
    std::copy(value.begin(), value.end(), path_.values_.end() - static_cast<std::ptrdiff_t>(path_.dim_));
  } else {
    path_.breakpoints_.push_back(t);
    path_.values_.insert(path_.values_.end(), value.begin(), value.end());
  }
  path_.end_ = t;
}

CadlagPath PathBuilder::finish(double end) && {
  if (end < path_.end_) throw ArgumentError("PathBuilder::finish: end precedes the last breakpoint");
  path_.end_ = end;
  return std::move(path_);
}

double sup_distance(const CadlagPath& p, const CadlagPath& q, double a, double b) {
  if (a > b) throw ArgumentError("sup_distance: a > b");
  if (p.dimension() != q.dimension()) throw ArgumentError("sup_distance: dimension mismatch");
  const std::size_t d = p.dimension();
  auto dist = [&](double t) {
    const auto x = p.value_at(t);
    const auto y = q.value_at(t);
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return std::sqrt(s);
  };
  double sup = dist(a);
  // Both paths are constant between consecutive points of the merged breakpoint set.
  const auto bp = p.breakpoints();
  const auto bq = q.breakpoints();
  std::size_t i = static_cast<std::size_t>(std::upper_bound(bp.begin(), bp.end(), a) - bp.begin());
  std::size_t j = static_cast<std::size_t>(std::upper_bound(bq.begin(), bq.end(), a) - bq.begin());
  while (true) {
    const double ti = i < bp.size() ? bp[i] : b + 1.0;
    const double tj = j < bq.size() ? bq[j] : b + 1.0;
    const double t = std::min(ti, tj);
    if (t > b) break;
    sup = std::max(sup, dist(t));
    if (ti == t) ++i;
    if (tj == t) ++j;
  }
  return sup;
}

void write_csv(std::ostream& out, const CadlagPath& path) {
  out << "t";
  for (std::size_t k = 0; k < path.dimension(); ++k) out << ",x_" << (k + 1);
  out << '\n';
  for (std::size_t i = 0; i < path.segment_count(); ++i) {
    out << format_double(path.breakpoints()[i]);
    for (double v : path.segment_value(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace sde
