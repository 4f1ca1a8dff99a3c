// Fast invariant checks runnable from the CLI, grouped by subsystem.
#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "sogp/arm.hpp"
#include "sogp/batch_gp.hpp"
#include "sogp/model.hpp"
#include "sogp/trajectory.hpp"

namespace sogp {

namespace selftest_detail {

inline KernelParams random_params(std::mt19937_64& rng, Index d) {
  std::uniform_real_distribution<double> scale(0.2, 2.0);
  KernelParams p;
  p.sigma_s2 = 1.0;
  p.sigma_n2 = 0.04;
  p.lengthscale_diag = Vector::NullaryExpr(d, [&] { return scale(rng); });
  return p;
}

inline Matrix random_inputs(std::mt19937_64& rng, Index n, Index d) {
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  return Matrix::NullaryExpr(n, d, [&] { return coord(rng); });
}

inline bool kernel_group(std::mt19937_64& rng) {
  const KernelParams p = random_params(rng, 3);
  for (int i = 0; i < 100; ++i) {
    const Vector a = random_inputs(rng, 1, 3).row(0).transpose();
    const Vector b = random_inputs(rng, 1, 3).row(0).transpose();
    const double kab = kernel_eval(p, a, b);
    if (kab != kernel_eval(p, b, a)) return false;
    if (!(kab > 0.0 && kab <= p.sigma_s2)) return false;
  }
  for (int i = 0; i < 10; ++i) {
    const Matrix x = random_inputs(rng, 12, 3);
    const Matrix gram = gram_matrix(p, x);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.eigenvalues().minCoeff() < -1e-10) return false;
  }
  return true;
}

inline bool batch_equivalence_group(std::mt19937_64& rng) {
  for (int trial = 0; trial < 3; ++trial) {
    const Index n = 15, d = 4;
    const KernelParams p = random_params(rng, d);
    const Matrix x = random_inputs(rng, n, d);
    std::normal_distribution<double> target(0.0, 1.0);
    const Vector y = Vector::NullaryExpr(n, [&] { return target(rng); });

    SogpModel online(p, n, 0.0, DeletionPolicy::position_info());
    for (Index i = 0; i < n; ++i) online.update(x.row(i).transpose(), y(i));
    const BatchGp batch = BatchGp::fit(p, x, y);
    for (int i = 0; i < 20; ++i) {
      const Vector q = random_inputs(rng, 1, d).row(0).transpose();
      const auto [mean, variance] = batch.predict(q);
      const Prediction pred = online.predict(q);
      if (std::abs(pred.mean - mean) > 1e-8) return false;
      if (std::abs(pred.raw_variance - variance) > 1e-8) return false;
    }
  }
  return true;
}

inline bool deletion_group(std::mt19937_64& rng) {
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 12, d = 3;
    const KernelParams p = random_params(rng, d);
    const Matrix x = random_inputs(rng, n, d);
    std::normal_distribution<double> target(0.0, 1.0);
    SogpModel model(p, n, 0.0, DeletionPolicy::position_info());
    for (Index i = 0; i < n; ++i) model.update(x.row(i).transpose(), target(rng));
    std::uniform_int_distribution<Index> pick(0, model.size() - 1);
    model.delete_index(pick(rng));
    if (model.inverse_gram_residual() > 1e-8) return false;
    const Matrix gram = gram_matrix(p, model.basis());
    const Matrix direct = gram.inverse();
    if ((model.q_matrix() - direct).cwiseAbs().maxCoeff() > 1e-8) return false;
  }
  return true;
}

inline bool policy_limit_group(std::mt19937_64& rng) {
  const Index d = 2, capacity = 5;
  const KernelParams p = random_params(rng, d);
  const Matrix x = random_inputs(rng, 40, d);
  std::normal_distribution<double> target(0.0, 1.0);
  Vector y(40);
  for (Index i = 0; i < 40; ++i) y(i) = target(rng);

  SogpModel fs1(p, capacity, 1e-6, DeletionPolicy::forgetting(1));
  SogpModel ops(p, capacity, 1e-6, DeletionPolicy::oldest_point());
  SogpModel fsbig(p, capacity, 1e-6,
                  DeletionPolicy::forgetting(1000000000));
  SogpModel pis(p, capacity, 1e-6, DeletionPolicy::position_info());
  for (Index i = 0; i < 40; ++i) {
    const auto a = fs1.update(x.row(i).transpose(), y(i));
    const auto b = ops.update(x.row(i).transpose(), y(i));
    const auto c = fsbig.update(x.row(i).transpose(), y(i));
    const auto e = pis.update(x.row(i).transpose(), y(i));
    if (a.deleted_index != b.deleted_index) return false;
    if (c.deleted_index != e.deleted_index) return false;
  }
  for (int i = 0; i < 10; ++i) {
    const Vector q = random_inputs(rng, 1, d).row(0).transpose();
    if (std::abs(fs1.predict(q).mean - ops.predict(q).mean) > 1e-12)
      return false;
    if (std::abs(fsbig.predict(q).mean - pis.predict(q).mean) > 1e-12)
      return false;
  }
  return true;
}

inline bool dynamics_group(std::mt19937_64& rng) {
  const ArmParams p;
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  std::uniform_real_distribution<double> rate(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    ArmState s;
    s.q << angle(rng), angle(rng);
    s.qd << rate(rng), rate(rng);
    const Eigen::Vector2d tau(rate(rng), rate(rng));
    const Eigen::Vector2d qdd = forward_dynamics(p, s, tau);
    const Eigen::Vector2d back = inverse_dynamics(p, s.q, s.qd, qdd);
    if ((back - tau).cwiseAbs().maxCoeff() > 1e-10) return false;
  }
  ArmParams frictionless = p;
  frictionless.friction.setZero();
  ArmState s;
  s.q << 0.4, -0.9;
  s.qd << 0.0, 0.0;
  const double e0 = mechanical_energy(frictionless, s);
  for (int i = 0; i < 10000; ++i)
    s = step(frictionless, s, Eigen::Vector2d::Zero(), 1e-4);
  const double drift =
      std::abs(mechanical_energy(frictionless, s) - e0) / std::abs(e0);
  return drift < 1e-6;
}

inline bool trajectory_group(std::mt19937_64&) {
  const Schedule schedule = default_two_task_schedule();
  if (std::abs(schedule.total_duration() - 60.0) > 1e-12) return false;
  // position/velocity continuity across every seam
  for (double seam : {2.5, 5.0, 40.0, 41.0}) {
    const RefPoint before = schedule.eval(seam - 1e-7);
    const RefPoint after = schedule.eval(seam + 1e-7);
    if ((before.q - after.q).cwiseAbs().maxCoeff() > 1e-5) return false;
    if ((before.qd - after.qd).cwiseAbs().maxCoeff() > 1e-4) return false;
  }
  const QuinticSegment seg =
      QuinticSegment::fit(Vector::Zero(2), Vector::Ones(2), 2.0);
  const RefPoint end = seg.eval(2.0);
  return (end.q - Vector::Ones(2)).cwiseAbs().maxCoeff() < 1e-12 &&
         end.qd.cwiseAbs().maxCoeff() < 1e-12 &&
         end.qdd.cwiseAbs().maxCoeff() < 1e-12;
}

}  // namespace selftest_detail

/// Runs every invariant group, printing one pass/fail line each.
/// Returns the number of failing groups.
inline int run_selftest(std::ostream& os) {
  using Group = std::function<bool(std::mt19937_64&)>;
  const std::vector<std::pair<std::string, Group>> groups = {
      {"kernel", selftest_detail::kernel_group},
      {"batch-equivalence", selftest_detail::batch_equivalence_group},
      {"deletion-algebra", selftest_detail::deletion_group},
      {"policy-limits", selftest_detail::policy_limit_group},
      {"arm-dynamics", selftest_detail::dynamics_group},
      {"trajectory", selftest_detail::trajectory_group},
  };
  int failures = 0;
  std::mt19937_64 rng(7);
  for (const auto& [name, group] : groups) {
    bool ok = false;
    try {
      ok = group(rng);
    } catch (const std::exception& ex) {
      os << "[FAIL] " << name << " (exception: " << ex.what() << ")\n";
      ++failures;
      continue;
    }
    os << (ok ? "[PASS] " : "[FAIL] ") << name << '\n';
    if (!ok) ++failures;
  }
  return failures;
}

}  // namespace sogp
