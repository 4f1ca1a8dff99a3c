// Reference trajectory generation: quintic point-to-point segments, a
// periodic joint-space circle, and the two-task schedule used by the
// benchmark.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "sogp/kernel.hpp"

namespace sogp {

struct RefPoint {
  Vector q;
  Vector qd;
  Vector qdd;
};

/// Per-joint fifth-order polynomial over [0, duration]. Row j of the
/// coefficient matrix holds a0..a5 for joint j.
class QuinticSegment {
 public:
  /// Rest-to-rest: position endpoints, zero velocity and acceleration at
  /// both ends.
  static QuinticSegment fit(const Vector& p0, const Vector& p1,
                            double duration) {
    const Index n = p0.size();
    return fit(p0, Vector::Zero(n), Vector::Zero(n), p1, Vector::Zero(n),
               Vector::Zero(n), duration);
  }

  /// General boundary-value fit with endpoint velocities and accelerations.
  static QuinticSegment fit(const Vector& p0, const Vector& v0,
                            const Vector& a0, const Vector& p1,
                            const Vector& v1, const Vector& a1,
                            double duration) {
    detail::require(duration > 0.0, "QuinticSegment: duration must be > 0");
    const Index n = p0.size();
    detail::require(v0.size() == n && a0.size() == n && p1.size() == n &&
                        v1.size() == n && a1.size() == n,
                    "QuinticSegment: boundary dimension mismatch");
    const double T = duration;
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    QuinticSegment seg;
    seg.duration_ = duration;
    seg.coeff_.resize(n, 6);
    for (Index j = 0; j < n; ++j) {
      const double dp = p1(j) - p0(j);
      seg.coeff_(j, 0) = p0(j);
      seg.coeff_(j, 1) = v0(j);
      seg.coeff_(j, 2) = 0.5 * a0(j);
      seg.coeff_(j, 3) = (20.0 * dp - (8.0 * v1(j) + 12.0 * v0(j)) * T -
                          (3.0 * a0(j) - a1(j)) * T2) /
                         (2.0 * T3);
      seg.coeff_(j, 4) = (-30.0 * dp + (14.0 * v1(j) + 16.0 * v0(j)) * T +
                          (3.0 * a0(j) - 2.0 * a1(j)) * T2) /
                         (2.0 * T4);
      seg.coeff_(j, 5) = (12.0 * dp - 6.0 * (v1(j) + v0(j)) * T -
                          (a0(j) - a1(j)) * T2) /
                         (2.0 * T5);
    }
    return seg;
  }

  RefPoint eval(double t) const {
    const Index n = coeff_.rows();
    RefPoint out{Vector(n), Vector(n), Vector(n)};
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    for (Index j = 0; j < n; ++j) {
      const auto& a = coeff_.row(j);
      out.q(j) = a(0) + a(1) * t + a(2) * t2 + a(3) * t3 + a(4) * t4 + a(5) * t5;
      out.qd(j) = a(1) + 2.0 * a(2) * t + 3.0 * a(3) * t2 + 4.0 * a(4) * t3 +
                  5.0 * a(5) * t4;
      out.qdd(j) = 2.0 * a(2) + 6.0 * a(3) * t + 12.0 * a(4) * t2 +
                   20.0 * a(5) * t3;
    }
    return out;
  }

  double duration() const { return duration_; }
  Index dim() const { return coeff_.rows(); }
  const Matrix& coefficients() const { return coeff_; }

 private:
  double duration_ = 0.0;
  Matrix coeff_;
};

/// Joint-space circle q(t) = center + r (cos(w t + phase), sin(w t + phase)).
class CircleSegment {
 public:
  CircleSegment(const Eigen::Vector2d& center, double radius,
                double angular_rate, double phase, double duration)
      : center_(center),
        radius_(radius),
        omega_(angular_rate),
        phase_(phase),
        duration_(duration) {
    detail::require(radius_ > 0.0, "CircleSegment: radius must be > 0");
    detail::require(omega_ != 0.0, "CircleSegment: angular rate must be != 0");
    detail::require(duration_ > 0.0, "CircleSegment: duration must be > 0");
  }

  RefPoint eval(double t) const {
    const double a = omega_ * t + phase_;
    RefPoint out{Vector(2), Vector(2), Vector(2)};
    out.q << center_(0) + radius_ * std::cos(a),
        center_(1) + radius_ * std::sin(a);
    out.qd << -radius_ * omega_ * std::sin(a), radius_ * omega_ * std::cos(a);
    out.qdd << -radius_ * omega_ * omega_ * std::cos(a),
        -radius_ * omega_ * omega_ * std::sin(a);
    return out;
  }

  double duration() const { return duration_; }
  Index dim() const { return 2; }

 private:
  Eigen::Vector2d center_;
  double radius_;
  double omega_;
  double phase_;
  double duration_;
};

/// Contiguous list of segments evaluated on absolute time.
class Schedule {
 public:
  void append(QuinticSegment seg) { push(std::move(seg)); }
  void append(CircleSegment seg) { push(std::move(seg)); }

  RefPoint eval(double t) const {
    detail::require(!entries_.empty(), "Schedule::eval: empty schedule");
    detail::require(t >= 0.0 && t <= total_,
                    "Schedule::eval: t outside [0, total_duration]");
    // last segment owns its right endpoint
    std::size_t idx = entries_.size() - 1;
    for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
      if (t < entries_[i + 1].start) {
        idx = i;
        break;
      }
    }
    const double local = t - entries_[idx].start;
    return std::visit([local](const auto& seg) { return seg.eval(local); },
                      entries_[idx].segment);
  }

  double total_duration() const { return total_; }
  std::size_t segments() const { return entries_.size(); }

  Index dim() const {
    detail::require(!entries_.empty(), "Schedule::dim: empty schedule");
    return std::visit([](const auto& seg) { return seg.dim(); },
                      entries_.front().segment);
  }

 private:
  struct Entry {
    double start;
    std::variant<QuinticSegment, CircleSegment> segment;
  };

  template <typename Seg>
  void push(Seg seg) {
    detail::require(entries_.empty() || seg.dim() == dim(),
                    "Schedule: segment dimension mismatch");
    entries_.push_back(Entry{total_, std::move(seg)});
    total_ += std::get<Seg>(entries_.back().segment).duration();
  }

  std::vector<Entry> entries_;
  double total_ = 0.0;
};

/// Parameters of the two-task benchmark schedule: a cycle over joint-space
/// waypoints (rest-to-rest quintics), a bridging quintic, then a circle
/// until the end.
struct ScheduleParams {
  Matrix waypoints;  // one waypoint per row
  double segment_duration = 5.0;
  double t_switch = 40.0;
  Eigen::Vector2d circle_center{0.5, -0.4};
  double circle_radius = 0.30;
  double circle_omega = 2.0 * std::numbers::pi / 3.0;
  double bridge_duration = 1.0;
  double total_duration = 60.0;

  ScheduleParams() {
    waypoints.resize(4, 2);
    waypoints << 0.405, -0.315, -0.27, 0.36, 0.225, 0.225, -0.36, -0.405;
  }

  void validate() const {
    detail::require(waypoints.rows() >= 2, "ScheduleParams: need >= 2 waypoints");
    detail::require(segment_duration > 0.0 && bridge_duration > 0.0,
                    "ScheduleParams: durations must be > 0");
    detail::require(t_switch > 0.0 &&
                        total_duration > t_switch + bridge_duration,
                    "ScheduleParams: switch/total times inconsistent");
    const double ratio = t_switch / segment_duration;
    detail::require(std::abs(ratio - std::round(ratio)) < 1e-9,
                    "ScheduleParams: segment_duration must divide t_switch");
  }
};

inline Schedule build_two_task_schedule(const ScheduleParams& p) {
  p.validate();
  detail::require(p.waypoints.cols() == 2,
                  "build_two_task_schedule: circle phase needs 2 joints");
  Schedule schedule;
  const Index n_waypoints = p.waypoints.rows();
  const auto count = static_cast<Index>(std::llround(p.t_switch / p.segment_duration));
  for (Index i = 0; i < count; ++i) {
    const Vector from = p.waypoints.row(i % n_waypoints).transpose();
    const Vector to = p.waypoints.row((i + 1) % n_waypoints).transpose();
    schedule.append(QuinticSegment::fit(from, to, p.segment_duration));
  }

  const double circle_duration =
      p.total_duration - p.t_switch - p.bridge_duration;
  CircleSegment circle(p.circle_center, p.circle_radius, p.circle_omega, 0.0,
                       circle_duration);
  const RefPoint circle_start = circle.eval(0.0);
  const Vector last_waypoint =
      p.waypoints.row(count % n_waypoints).transpose();
  schedule.append(QuinticSegment::fit(
      last_waypoint, Vector::Zero(2), Vector::Zero(2), circle_start.q,
      circle_start.qd, circle_start.qdd, p.bridge_duration));
  schedule.append(std::move(circle));
  return schedule;
}

inline Schedule default_two_task_schedule(double scale = 1.0) {
  detail::require(scale > 0.0, "default_two_task_schedule: scale must be > 0");
  ScheduleParams p;
  p.waypoints *= scale;
  p.circle_center *= scale;
  p.circle_radius *= scale;
  return build_two_task_schedule(p);
}

}  // namespace sogp
