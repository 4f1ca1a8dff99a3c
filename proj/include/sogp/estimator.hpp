// Velocity/acceleration estimation from noisy joint positions.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "sogp/kernel.hpp"

namespace sogp {

enum class EstimatorMode { exact, finite_difference, linear_eso };

/// Simulator ground truth, consumed by the exact estimator mode.
struct TrueState {
  Eigen::Vector2d q{0.0, 0.0};
  Eigen::Vector2d qd{0.0, 0.0};
  Eigen::Vector2d qdd{0.0, 0.0};
};

struct StateEstimate {
  Eigen::Vector2d q{0.0, 0.0};
  Eigen::Vector2d v{0.0, 0.0};
  Eigen::Vector2d a{0.0, 0.0};
};

/// Per-joint observer turning noisy positions into (q, v, a) estimates.
///
/// exact             passes simulator truth through (testing only).
/// finite_difference causal first/second differences behind a first-order
///                   low-pass with the given cutoff.
/// linear_eso        third-order observer per joint with gains
///                   (3w, 3w^2, w^3) set by the bandwidth w. The velocity
///                   output is the raw observer state (the control loop
///                   needs its full bandwidth); the acceleration output is
///                   smoothed by a one-pole filter at w/16, since it only
///                   feeds model training and the raw state carries the
///                   torque jitter of the closed loop.
class StateEstimator {
 public:
  explicit StateEstimator(EstimatorMode mode, double eso_bandwidth = 800.0,
                          double fd_cutoff_hz = 40.0)
      : mode_(mode), omega_(eso_bandwidth), fd_cutoff_hz_(fd_cutoff_hz) {
    detail::require(eso_bandwidth > 0.0,
                    "StateEstimator: bandwidth must be > 0");
    detail::require(fd_cutoff_hz > 0.0,
                    "StateEstimator: cutoff must be > 0");
  }

  EstimatorMode mode() const { return mode_; }

  void reset(const Eigen::Vector2d& q0) {
    z1_ = q0;
    z2_.setZero();
    z3_.setZero();
    a_out_.setZero();
    prev_q_ = q0;
    v_filt_.setZero();
    a_filt_.setZero();
    initialized_ = true;
  }

  StateEstimate step(const Eigen::Vector2d& q_meas, double dt,
                     const std::optional<TrueState>& truth = std::nullopt) {
    detail::require(dt > 0.0, "StateEstimator::step: dt must be > 0");
    if (mode_ == EstimatorMode::exact) {
      detail::require(truth.has_value(),
                      "StateEstimator::step: exact mode needs ground truth");
      return {truth->q, truth->qd, truth->qdd};
    }
    if (!initialized_) reset(q_meas);

    if (mode_ == EstimatorMode::linear_eso) {
      // One fourth-order step of the observer ODE with the measurement held
      // over the interval; keeps high bandwidths stable at coarse dt where
      // a forward-Euler step would not be.
      Eigen::Matrix<double, 6, 1> z;
      z << z1_, z2_, z3_;
      const auto deriv = [&](const Eigen::Matrix<double, 6, 1>& s) {
        Eigen::Matrix<double, 6, 1> d;
        const Eigen::Vector2d err = q_meas - s.segment<2>(0);
        d.segment<2>(0) = s.segment<2>(2) + 3.0 * omega_ * err;
        d.segment<2>(2) = s.segment<2>(4) + 3.0 * omega_ * omega_ * err;
        d.segment<2>(4) = omega_ * omega_ * omega_ * err;
        return d;
      };
      const auto k1 = deriv(z);
      const auto k2 = deriv((z + 0.5 * dt * k1).eval());
      const auto k3 = deriv((z + 0.5 * dt * k2).eval());
      const auto k4 = deriv((z + dt * k3).eval());
      z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      z1_ = z.segment<2>(0);
      z2_ = z.segment<2>(2);
      z3_ = z.segment<2>(4);
      const double acc_pole = omega_ / 16.0;
      const double blend = dt * acc_pole / (1.0 + dt * acc_pole);
      a_out_ += blend * (z3_ - a_out_);
      // the observer supplies the derivatives; position comes straight
      // from the measurement
      return {q_meas, z2_, a_out_};
    }

    // finite differences with a shared low-pass constant
    const double alpha = dt / (dt + 1.0 / (2.0 * std::numbers::pi * fd_cutoff_hz_));
    const Eigen::Vector2d v_raw = (q_meas - prev_q_) / dt;
    const Eigen::Vector2d v_prev = v_filt_;
    v_filt_ += alpha * (v_raw - v_filt_);
    const Eigen::Vector2d a_raw = (v_filt_ - v_prev) / dt;
    a_filt_ += alpha * (a_raw - a_filt_);
    prev_q_ = q_meas;
    return {q_meas, v_filt_, a_filt_};
  }

 private:
  EstimatorMode mode_;
  double omega_;
  double fd_cutoff_hz_;
  bool initialized_ = false;
  // observer state
  Eigen::Vector2d z1_{0.0, 0.0}, z2_{0.0, 0.0}, z3_{0.0, 0.0};
  Eigen::Vector2d a_out_{0.0, 0.0};
  // finite-difference state
  Eigen::Vector2d prev_q_{0.0, 0.0}, v_filt_{0.0, 0.0}, a_filt_{0.0, 0.0};
};

}  // namespace sogp
