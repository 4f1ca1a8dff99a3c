#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sogp/trajectory.hpp"

using namespace sogp;

namespace {

// Independent route: solve the 6x6 boundary-condition system directly.
Eigen::Matrix<double, 6, 1> quintic_oracle(double p0, double v0, double a0,
                                           double p1, double v1, double a1,
                                           double T) {
  Eigen::Matrix<double, 6, 6> system;
  Eigen::Matrix<double, 6, 1> rhs;
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  system << 1, 0, 0, 0, 0, 0,
            0, 1, 0, 0, 0, 0,
            0, 0, 2, 0, 0, 0,
            1, T, T2, T3, T4, T5,
            0, 1, 2 * T, 3 * T2, 4 * T3, 5 * T4,
            0, 0, 2, 6 * T, 12 * T2, 20 * T3;
  rhs << p0, v0, a0, p1, v1, a1;
  return system.fullPivLu().solve(rhs);
}

Vector vec1(double x) {
  Vector v(1);
  v << x;
  return v;
}

}  // namespace

TEST_CASE("rest-to-rest quintic matches 10t^3 - 15t^4 + 6t^5") {
  const QuinticSegment seg = QuinticSegment::fit(vec1(0.0), vec1(1.0), 1.0);
  const Matrix& c = seg.coefficients();
  REQUIRE(c.rows() == 1);
  CHECK_THAT(c(0, 0), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(c(0, 1), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(c(0, 2), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(c(0, 3), Catch::Matchers::WithinAbs(10.0, 1e-12));
  CHECK_THAT(c(0, 4), Catch::Matchers::WithinAbs(-15.0, 1e-12));
  CHECK_THAT(c(0, 5), Catch::Matchers::WithinAbs(6.0, 1e-12));

  for (double t : {0.1, 0.35, 0.5, 0.8}) {
    const RefPoint r = seg.eval(t);
    const double expect = 10 * t * t * t - 15 * t * t * t * t +
                          6 * t * t * t * t * t;
    CHECK_THAT(r.q(0), Catch::Matchers::WithinAbs(expect, 1e-12));
  }
}

TEST_CASE("quintic coefficients agree with the 6x6 linear-system oracle") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::uniform_real_distribution<double> dur(0.3, 6.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double p0 = val(rng), v0 = val(rng), a0 = val(rng);
    const double p1 = val(rng), v1 = val(rng), a1 = val(rng);
    const double T = dur(rng);
    const QuinticSegment seg = QuinticSegment::fit(
        vec1(p0), vec1(v0), vec1(a0), vec1(p1), vec1(v1), vec1(a1), T);
    const auto oracle = quintic_oracle(p0, v0, a0, p1, v1, a1, T);
    for (int j = 0; j < 6; ++j)
      CHECK_THAT(seg.coefficients()(0, j),
                 Catch::Matchers::WithinAbs(oracle(j), 1e-9));
  }
}

TEST_CASE("rest-to-rest quintic halves the move at mid-time") {
  Vector p0(2), p1(2);
  p0 << -1.0, 2.0;
  p1 << 3.0, -2.0;
  const QuinticSegment seg = QuinticSegment::fit(p0, p1, 4.0);
  const RefPoint mid = seg.eval(2.0);
  CHECK_THAT(mid.q(0), Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(mid.q(1), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("quintic boundary conditions hold to 1e-12") {
  Vector p0(2), p1(2);
  p0 << 0.3, -0.8;
  p1 << -0.5, 0.6;
  const QuinticSegment seg = QuinticSegment::fit(p0, p1, 2.5);
  const RefPoint start = seg.eval(0.0);
  const RefPoint end = seg.eval(2.5);
  CHECK((start.q - p0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((end.q - p1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(start.qd.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(end.qd.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(start.qdd.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(end.qdd.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("quintic fit rejects non-positive durations") {
  CHECK_THROWS_AS(QuinticSegment::fit(vec1(0.0), vec1(1.0), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(QuinticSegment::fit(vec1(0.0), vec1(1.0), -1.0),
                  std::invalid_argument);
}

TEST_CASE("circle segment has constant acceleration magnitude r w^2") {
  const CircleSegment circle({0.5, -0.4}, 0.3, 2.0, 0.0, 10.0);
  for (double t : {0.0, 0.7, 3.3, 9.99}) {
    const RefPoint r = circle.eval(t);
    CHECK_THAT(r.qdd.norm(), Catch::Matchers::WithinAbs(0.3 * 4.0, 1e-12));
    CHECK_THAT((r.q - Vector(Eigen::Vector2d(0.5, -0.4))).norm(),
               Catch::Matchers::WithinAbs(0.3, 1e-12));
  }
  CHECK_THROWS_AS(CircleSegment({0, 0}, 0.0, 1.0, 0.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(CircleSegment({0, 0}, 0.3, 0.0, 0.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("schedule evaluation starts each quintic segment at rest") {
  const Schedule schedule = default_two_task_schedule();
  const RefPoint r0 = schedule.eval(0.0);
  CHECK(r0.qd.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r0.qdd.cwiseAbs().maxCoeff() < 1e-12);
  const RefPoint r5 = schedule.eval(5.0);  // second waypoint segment start
  CHECK(r5.qd.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic derivatives match central differences") {
  const Schedule schedule = default_two_task_schedule();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> time(0.01, 59.99);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const double t = time(rng);
    const RefPoint c = schedule.eval(t);
    const RefPoint plus = schedule.eval(t + h);
    const RefPoint minus = schedule.eval(t - h);
    const Vector qd_fd = (plus.q - minus.q) / (2.0 * h);
    const Vector qdd_fd = (plus.q - 2.0 * c.q + minus.q) / (h * h);
    // O(h^2) away from seams; seams contribute at most O(h) once in a while
    CHECK((qd_fd - c.qd).cwiseAbs().maxCoeff() < 1e-4);
    CHECK((qdd_fd - c.qdd).cwiseAbs().maxCoeff() < 1e-2);
  }
}

TEST_CASE("default schedule: 60 s total, switch at 40 s, continuous seams") {
  const Schedule schedule = default_two_task_schedule();
  CHECK_THAT(schedule.total_duration(), Catch::Matchers::WithinAbs(60.0, 1e-12));

  // seams: waypoint boundaries every 5 s, bridge at 40 s, circle at 41 s
  const double eps = 1e-9;
  for (double seam : {5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 41.0}) {
    const RefPoint before = schedule.eval(seam - eps);
    const RefPoint after = schedule.eval(seam + eps);
    CHECK((before.q - after.q).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((before.qd - after.qd).cwiseAbs().maxCoeff() < 1e-6);
  }

  // exact continuity of the construction at the seams themselves
  ScheduleParams params;
  const Schedule built = build_two_task_schedule(params);
  const RefPoint bridge_end = built.eval(40.0 + params.bridge_duration);
  const CircleSegment circle(params.circle_center, params.circle_radius,
                             params.circle_omega, 0.0, 19.0);
  const RefPoint circle_start = circle.eval(0.0);
  CHECK((bridge_end.q - circle_start.q).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((bridge_end.qd - circle_start.qd).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("schedule rejects out-of-range evaluation times") {
  const Schedule schedule = default_two_task_schedule();
  CHECK_THROWS_AS(schedule.eval(-0.001), std::invalid_argument);
  CHECK_THROWS_AS(schedule.eval(60.001), std::invalid_argument);
  CHECK_NOTHROW(schedule.eval(0.0));
  CHECK_NOTHROW(schedule.eval(60.0));
}

TEST_CASE("reference stays bounded over the whole schedule") {
  const Schedule schedule = default_two_task_schedule();
  double max_q = 0, max_qd = 0, max_qdd = 0;
  for (int k = 0; k <= 6000; ++k) {
    const RefPoint r = schedule.eval(k * 0.01);
    max_q = std::max(max_q, r.q.cwiseAbs().maxCoeff());
    max_qd = std::max(max_qd, r.qd.cwiseAbs().maxCoeff());
    max_qdd = std::max(max_qdd, r.qdd.cwiseAbs().maxCoeff());
  }
  CHECK(max_q < 2.0);
  CHECK(max_qd < 5.0);
  CHECK(max_qdd < 10.0);
}

TEST_CASE("schedule parameter validation") {
  ScheduleParams p;
  CHECK_NOTHROW(p.validate());
  p.segment_duration = 3.0;  // does not divide t_switch = 40
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = ScheduleParams{};
  p.total_duration = 40.5;  // leaves no room for the circle
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(default_two_task_schedule(0.0), std::invalid_argument);
}
