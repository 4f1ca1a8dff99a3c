// Learning computed-torque controller: a bank of per-joint online GPs
// supplies the feedforward torque on top of PD feedback.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sogp/model.hpp"

namespace sogp {

struct ControllerConfig {
  Vector kp;  // diagonal proportional gains
  Vector kd;  // diagonal derivative gains
  double ramp_duration = 0.6;
  double warmup_duration = 2.0;
  int update_stride = 7;  // train the bank on every k-th observed sample

  void validate() const {
    detail::require(kp.size() == kd.size() && kp.size() >= 1,
                    "ControllerConfig: gain dimension mismatch");
    detail::require(kp.minCoeff() > 0.0 && kd.minCoeff() > 0.0,
                    "ControllerConfig: gains must be > 0");
    detail::require(update_stride >= 1,
                    "ControllerConfig: update_stride must be >= 1");
    detail::require(ramp_duration >= 0.0 && warmup_duration >= 0.0,
                    "ControllerConfig: durations must be >= 0");
  }
};

/// z-scores training targets and inverse-transforms predictions. The scale
/// is floored so constant warmup data cannot produce a zero divisor.
class TargetNormalizer {
 public:
  TargetNormalizer() = default;
  TargetNormalizer(double mean, double scale) : mean_(mean), scale_(scale) {
    detail::require(scale_ > 0.0, "TargetNormalizer: scale must be > 0");
  }

  static TargetNormalizer fit(const std::vector<double>& samples) {
    detail::require(samples.size() >= 2,
                    "TargetNormalizer::fit: need at least 2 samples");
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(samples.size());
    return TargetNormalizer(mean, std::max(std::sqrt(var), 1e-6));
  }

  double normalize(double y) const { return (y - mean_) / scale_; }
  double denormalize(double z) const { return mean_ + scale_ * z; }
  double mean() const { return mean_; }
  double scale() const { return scale_; }

 private:
  double mean_ = 0.0;
  double scale_ = 1.0;
};

/// One online GP per joint, all over the same 3n-dimensional input
/// (positions, velocities, accelerations), plus the target normalizers and
/// the stride counter for polled updates. Models share no state, so the
/// per-joint updates are independent.
struct GpBank {
  std::vector<SogpModel> models;
  std::vector<TargetNormalizer> normalizers;
  std::int64_t observe_calls = 0;

  GpBank(int n_joints, const KernelParams& params, Index capacity,
         double eps_tol, DeletionPolicy policy) {
    detail::require(n_joints >= 1, "GpBank: need at least one joint");
    detail::require(params.dim() == 3 * n_joints,
                    "GpBank: kernel dimension must be 3 * n_joints");
    models.reserve(static_cast<std::size_t>(n_joints));
    for (int i = 0; i < n_joints; ++i)
      models.emplace_back(params, capacity, eps_tol, policy);
    normalizers.assign(static_cast<std::size_t>(n_joints), TargetNormalizer());
  }

  int joints() const { return static_cast<int>(models.size()); }
  Index input_dim() const { return models.front().dim(); }
};

struct TorqueCommand {
  Vector tau;
  Vector tau_ff;   // ramp-scaled feedforward actually applied
  Vector tau_fb;
  Vector gp_mean;  // denormalized bank prediction before the ramp
  double min_raw_variance = std::numeric_limits<double>::infinity();
};

/// 0 during warmup, then a linear rise to 1 over ramp_duration.
inline double feedforward_ramp(const ControllerConfig& cfg, double t) {
  if (t < cfg.warmup_duration) return 0.0;
  if (cfg.ramp_duration <= 0.0) return 1.0;
  return std::clamp((t - cfg.warmup_duration) / cfg.ramp_duration, 0.0, 1.0);
}

/// Control law: PD feedback on the estimated state plus the ramped GP
/// feedforward evaluated at the desired state.
inline TorqueCommand compute_torque(const ControllerConfig& cfg,
                                    const GpBank& bank, const Vector& q_des,
                                    const Vector& qd_des, const Vector& qdd_des,
                                    const Vector& q_hat, const Vector& v_hat,
                                    double t) {
  const Index n = cfg.kp.size();
  detail::require(q_des.size() == n && qd_des.size() == n &&
                      qdd_des.size() == n && q_hat.size() == n &&
                      v_hat.size() == n,
                  "compute_torque: dimension mismatch");
  detail::require(bank.joints() == n, "compute_torque: bank/gain mismatch");

  TorqueCommand cmd;
  const Vector e = q_des - q_hat;
  const Vector edot = qd_des - v_hat;
  cmd.tau_fb = cfg.kp.cwiseProduct(e) + cfg.kd.cwiseProduct(edot);

  Vector gp_input(3 * n);
  gp_input << q_des, qd_des, qdd_des;
  cmd.gp_mean.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Prediction p = bank.models[static_cast<std::size_t>(i)].predict(gp_input);
    cmd.gp_mean(i) =
        bank.normalizers[static_cast<std::size_t>(i)].denormalize(p.mean);
    cmd.min_raw_variance = std::min(cmd.min_raw_variance, p.raw_variance);
  }
  cmd.tau_ff = feedforward_ramp(cfg, t) * cmd.gp_mean;
  cmd.tau = cmd.tau_ff + cmd.tau_fb;
  return cmd;
}

/// Polled training: every update_stride-th call feeds the estimated state
/// and the normalized applied torque to each joint's model; other calls
/// only advance the counter. Returns the per-joint reports when an update
/// ran.
inline std::optional<std::vector<UpdateReport>> observe(
    const ControllerConfig& cfg, GpBank& bank, const Vector& q_hat,
    const Vector& v_hat, const Vector& a_hat, const Vector& tau_applied) {
  const Index n = bank.joints();
  detail::require(q_hat.size() == n && v_hat.size() == n &&
                      a_hat.size() == n && tau_applied.size() == n,
                  "observe: dimension mismatch");
  ++bank.observe_calls;
  if (bank.observe_calls % cfg.update_stride != 0) return std::nullopt;

  Vector input(3 * n);
  input << q_hat, v_hat, a_hat;
  std::vector<UpdateReport> reports;
  reports.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double target = bank.normalizers[idx].normalize(tau_applied(i));
    reports.push_back(bank.models[idx].update(input, target));
  }
  return reports;
}

/// Fits the per-joint normalizers from torques collected during warmup.
inline void fit_normalizer(GpBank& bank,
                           const std::vector<Vector>& warmup_targets) {
  detail::require(warmup_targets.size() >= 10,
                  "fit_normalizer: need at least 10 warmup samples");
  const Index n = bank.joints();
  for (Index i = 0; i < n; ++i) {
    std::vector<double> column;
    column.reserve(warmup_targets.size());
    for (const Vector& tau : warmup_targets) {
      detail::require(tau.size() == n, "fit_normalizer: dimension mismatch");
      column.push_back(tau(i));
    }
    bank.normalizers[static_cast<std::size_t>(i)] = TargetNormalizer::fit(column);
  }
}

}  // namespace sogp
