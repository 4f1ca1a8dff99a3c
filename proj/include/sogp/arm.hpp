// Planar two-link revolute arm under gravity: closed-form dynamics,
// fixed-step integration and noisy position measurement.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>

#include "sogp/kernel.hpp"

namespace sogp {

/// Physical parameters of the arm. Angle convention: q = 0 lays a link
/// along +x, gravity pulls along -y. Viscous friction is the unmodeled
/// term the learned controller has to pick up.
struct ArmParams {
  double m1 = 1.0;   // link masses [kg]
  double m2 = 1.0;
  double l1 = 0.5;   // link lengths [m]
  double l2 = 0.5;
  double lc1 = 0.25; // joint-to-COM distances [m]
  double lc2 = 0.25;
  double i1 = 1.0 * 0.5 * 0.5 / 12.0;  // link inertia about COM [kg m^2]
  double i2 = 1.0 * 0.5 * 0.5 / 12.0;
  double gravity = 9.81;
  Eigen::Vector2d friction{0.1, 0.1};  // viscous [N m s / rad]

  /// COM at mid-link, thin-rod inertia about the COM.
  static ArmParams uniform_rods(double m1, double m2, double l1, double l2,
                                double gravity,
                                const Eigen::Vector2d& friction) {
    ArmParams p;
    p.m1 = m1;
    p.m2 = m2;
    p.l1 = l1;
    p.l2 = l2;
    p.lc1 = 0.5 * l1;
    p.lc2 = 0.5 * l2;
    p.i1 = m1 * l1 * l1 / 12.0;
    p.i2 = m2 * l2 * l2 / 12.0;
    p.gravity = gravity;
    p.friction = friction;
    return p;
  }

  void validate() const {
    detail::require(m1 > 0 && m2 > 0 && l1 > 0 && l2 > 0 && lc1 > 0 &&
                        lc2 > 0 && i1 > 0 && i2 > 0,
                    "ArmParams: masses, lengths and inertias must be > 0");
    detail::require(friction(0) >= 0 && friction(1) >= 0,
                    "ArmParams: friction must be >= 0");
  }
};

struct ArmState {
  Eigen::Vector2d q{0.0, 0.0};
  Eigen::Vector2d qd{0.0, 0.0};
  double t = 0.0;
};

inline Eigen::Matrix2d mass_matrix(const ArmParams& p,
                                   const Eigen::Vector2d& q) {
  const double c2 = std::cos(q(1));
  const double m11 = p.i1 + p.i2 + p.m1 * p.lc1 * p.lc1 +
                     p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 +
                             2.0 * p.l1 * p.lc2 * c2);
  const double m12 = p.i2 + p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2);
  const double m22 = p.i2 + p.m2 * p.lc2 * p.lc2;
  Eigen::Matrix2d m;
  m << m11, m12, m12, m22;
  return m;
}

/// Christoffel-symbol Coriolis matrix (makes dM/dt - 2C skew-symmetric).
inline Eigen::Matrix2d coriolis_matrix(const ArmParams& p,
                                       const Eigen::Vector2d& q,
                                       const Eigen::Vector2d& qd) {
  const double h = p.m2 * p.l1 * p.lc2 * std::sin(q(1));
  Eigen::Matrix2d c;
  c << -h * qd(1), -h * (qd(0) + qd(1)), h * qd(0), 0.0;
  return c;
}

inline Eigen::Vector2d gravity_torque(const ArmParams& p,
                                      const Eigen::Vector2d& q) {
  const double c1 = std::cos(q(0));
  const double c12 = std::cos(q(0) + q(1));
  return {(p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * c1 +
              p.m2 * p.lc2 * p.gravity * c12,
          p.m2 * p.lc2 * p.gravity * c12};
}

inline Eigen::Vector2d joint_acceleration(const ArmParams& p,
                                          const Eigen::Vector2d& q,
                                          const Eigen::Vector2d& qd,
                                          const Eigen::Vector2d& tau) {
  const Eigen::Vector2d rhs = tau - coriolis_matrix(p, q, qd) * qd -
                              gravity_torque(p, q) -
                              p.friction.cwiseProduct(qd);
  return mass_matrix(p, q).inverse() * rhs;
}

inline Eigen::Vector2d forward_dynamics(const ArmParams& p, const ArmState& s,
                                        const Eigen::Vector2d& tau) {
  return joint_acceleration(p, s.q, s.qd, tau);
}

inline Eigen::Vector2d inverse_dynamics(const ArmParams& p,
                                        const Eigen::Vector2d& q,
                                        const Eigen::Vector2d& qd,
                                        const Eigen::Vector2d& qdd) {
  return mass_matrix(p, q) * qdd + coriolis_matrix(p, q, qd) * qd +
         gravity_torque(p, q) + p.friction.cwiseProduct(qd);
}

/// Kinetic plus potential energy; conserved under zero torque and zero
/// friction, which the tests exploit as an integrator oracle.
inline double mechanical_energy(const ArmParams& p, const ArmState& s) {
  const double kinetic = 0.5 * s.qd.dot(mass_matrix(p, s.q) * s.qd);
  const double s1 = std::sin(s.q(0));
  const double s12 = std::sin(s.q(0) + s.q(1));
  const double potential =
      p.m1 * p.gravity * p.lc1 * s1 +
      p.m2 * p.gravity * (p.l1 * s1 + p.lc2 * s12);
  return kinetic + potential;
}

/// One classical fourth-order step with the torque held over the interval.
inline ArmState step(const ArmParams& p, const ArmState& s,
                     const Eigen::Vector2d& tau, double dt) {
  detail::require(dt > 0.0, "step: dt must be > 0");
  const Eigen::Vector2d k1q = s.qd;
  const Eigen::Vector2d k1v = joint_acceleration(p, s.q, s.qd, tau);
  const Eigen::Vector2d k2q = s.qd + 0.5 * dt * k1v;
  const Eigen::Vector2d k2v =
      joint_acceleration(p, s.q + 0.5 * dt * k1q, s.qd + 0.5 * dt * k1v, tau);
  const Eigen::Vector2d k3q = s.qd + 0.5 * dt * k2v;
  const Eigen::Vector2d k3v =
      joint_acceleration(p, s.q + 0.5 * dt * k2q, s.qd + 0.5 * dt * k2v, tau);
  const Eigen::Vector2d k4q = s.qd + dt * k3v;
  const Eigen::Vector2d k4v =
      joint_acceleration(p, s.q + dt * k3q, s.qd + dt * k3v, tau);

  ArmState next;
  next.q = s.q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
  next.qd = s.qd + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  next.t = s.t + dt;
  if (!next.q.allFinite() || !next.qd.allFinite())
    throw std::runtime_error("step: simulation diverged at t = " +
                             std::to_string(next.t));
  return next;
}

/// Position measurement with additive white noise N(0, noise_var) per
/// joint. noise_var = 0 returns the state exactly and does not touch the
/// generator.
inline Eigen::Vector2d measure(const ArmState& s, double noise_var,
                               std::mt19937_64& rng) {
  detail::require(noise_var >= 0.0, "measure: noise_var must be >= 0");
  if (noise_var == 0.0) return s.q;
  std::normal_distribution<double> noise(0.0, std::sqrt(noise_var));
  Eigen::Vector2d out;
  out(0) = s.q(0) + noise(rng);
  out(1) = s.q(1) + noise(rng);
  return out;
}

}  // namespace sogp
