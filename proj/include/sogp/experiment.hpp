// Benchmark experiment runner: closed-loop simulation of the learning
// controller over the two-task schedule, metric collection and CSV output.
#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sogp/arm.hpp"
#include "sogp/control.hpp"
#include "sogp/estimator.hpp"
#include "sogp/model.hpp"
#include "sogp/trajectory.hpp"

namespace sogp {

// Tolerance on ||Q K - I||_inf enforced by the in-run invariant checks.
inline constexpr double kInverseGramTolerance = 1e-8;
// Width of the windowed RMSE series.
inline constexpr double kMetricWindowSeconds = 1.0;

enum class Scheme { pd, pis, ops, fs };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::pd: return "pd";
    case Scheme::pis: return "pis";
    case Scheme::ops: return "ops";
    case Scheme::fs: return "fs";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& name) {
  if (name == "pd") return Scheme::pd;
  if (name == "pis") return Scheme::pis;
  if (name == "ops") return Scheme::ops;
  if (name == "fs") return Scheme::fs;
  throw std::invalid_argument("unknown scheme '" + name +
                              "' (expected pd|pis|ops|fs)");
}

/// Full description of one benchmark run. Defaults follow the benchmark
/// protocol: capacity 45, eps_tol 0.01, forgetting period 15, sigma_s = 1,
/// sigma_n = 0.2, stride-7 polling, 1 ms steps, 1e-14 position noise,
/// 2 s warmup and a 0.6 s feedforward ramp.
struct ExperimentConfig {
  Scheme scheme = Scheme::fs;
  std::int64_t h = 15;
  Index bv_capacity = 45;
  double eps_tol = 0.01;
  bool signed_deletion_score = false;

  double sigma_s2 = 1.0;
  double sigma_n2 = 0.04;
  Vector lengthscales;  // metric diagonal over (q, qd, qdd) blocks

  Vector kp;
  Vector kd;
  double ramp_duration = 0.6;
  double warmup_duration = 2.0;
  int update_stride = 7;

  double arm_m1 = 1.0, arm_m2 = 1.0;
  double arm_l1 = 0.5, arm_l2 = 0.5;
  double gravity = 9.81;
  Eigen::Vector2d arm_friction{0.1, 0.1};

  double noise_var = 1e-14;
  EstimatorMode estimator_mode = EstimatorMode::linear_eso;
  double estimator_bandwidth = 800.0;
  double fd_cutoff_hz = 40.0;

  ScheduleParams schedule;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  std::string out_prefix;  // empty: no files written
  int trace_decimation = 10;
  std::string save_models_prefix;  // write per-joint snapshots after the run
  std::string load_models_prefix;  // restore per-joint snapshots before it

  // diagnostics
  int invariant_check_interval = 0;  // bank updates between checks; 0 = off
  bool collect_update_timings = false;

  ExperimentConfig() {
    lengthscales.resize(6);
    lengthscales << 0.5, 0.5, 0.5, 0.5, 0.2, 0.2;
    kp.resize(2);
    kp << 200.0, 200.0;
    kd.resize(2);
    kd << 20.0, 20.0;
  }

  ArmParams arm_params() const {
    return ArmParams::uniform_rods(arm_m1, arm_m2, arm_l1, arm_l2, gravity,
                                   arm_friction);
  }

  KernelParams kernel_params() const {
    KernelParams p;
    p.sigma_s2 = sigma_s2;
    p.sigma_n2 = sigma_n2;
    p.lengthscale_diag = lengthscales;
    return p;
  }

  DeletionPolicy deletion_policy() const {
    DeletionPolicy policy;
    switch (scheme) {
      case Scheme::pis: policy = DeletionPolicy::position_info(); break;
      case Scheme::ops: policy = DeletionPolicy::oldest_point(); break;
      case Scheme::fs:
      case Scheme::pd: policy = DeletionPolicy::forgetting(h); break;
    }
    policy.signed_score = signed_deletion_score;
    return policy;
  }

  ControllerConfig controller_config() const {
    return ControllerConfig{kp, kd, ramp_duration, warmup_duration,
                            update_stride};
  }

  void validate() const {
    kernel_params().validate();
    arm_params().validate();
    controller_config().validate();
    schedule.validate();
    deletion_policy().validate();
    detail::require(lengthscales.size() == 6,
                    "ExperimentConfig: expected 6 lengthscales (3 per joint)");
    detail::require(kp.size() == 2 && kd.size() == 2,
                    "ExperimentConfig: expected 2 joints");
    detail::require(bv_capacity >= 1, "ExperimentConfig: bv_capacity >= 1");
    detail::require(eps_tol >= 0.0, "ExperimentConfig: eps_tol >= 0");
    detail::require(dt > 0.0, "ExperimentConfig: dt must be > 0");
    detail::require(trace_decimation >= 1,
                    "ExperimentConfig: trace_decimation >= 1");
    detail::require(noise_var >= 0.0, "ExperimentConfig: noise_var >= 0");
    detail::require(invariant_check_interval >= 0,
                    "ExperimentConfig: invariant_check_interval >= 0");
    if (scheme != Scheme::pd)
      detail::require(warmup_duration >= 10.0 * dt,
                      "ExperimentConfig: warmup too short to fit the "
                      "normalizer (need >= 10 samples)");
  }
};

/// Pooled RMSE over the stacked scalar components of the error vectors.
inline double rmse(const std::vector<Vector>& errors) {
  detail::require(!errors.empty(), "rmse: empty input");
  double sum = 0.0;
  std::int64_t count = 0;
  for (const Vector& e : errors) {
    sum += e.squaredNorm();
    count += e.size();
  }
  return std::sqrt(sum / static_cast<double>(count));
}

inline Vector rmse_per_joint(const std::vector<Vector>& errors) {
  detail::require(!errors.empty(), "rmse_per_joint: empty input");
  const Index n = errors.front().size();
  Vector sum = Vector::Zero(n);
  for (const Vector& e : errors) {
    detail::require(e.size() == n, "rmse_per_joint: ragged input");
    sum += e.cwiseAbs2();
  }
  return (sum / static_cast<double>(errors.size())).cwiseSqrt();
}

/// Everything measured during one run. Trace rows are decimated flat
/// vectors laid out as [t, qd, q, e, tau_ff, tau_fb, e_m, bv_size], each
/// block n_joints wide.
struct RunMetrics {
  int n_joints = 2;
  double warmup_end = 0.0;
  double t_switch = 0.0;
  double total_duration = 0.0;

  std::vector<double> window_start;
  std::vector<double> window_tracking_rmse;
  std::vector<double> window_modeling_rmse;

  // column 0 = task 1 (waypoints), column 1 = task 2 (switch onward)
  Matrix per_joint_tracking_rmse;
  Matrix per_joint_modeling_rmse;
  Eigen::MatrixXi per_joint_deletions;
  std::array<double, 2> task_tracking_rmse{0.0, 0.0};
  std::array<double, 2> task_modeling_rmse{0.0, 0.0};
  double total_tracking_rmse = 0.0;
  double total_modeling_rmse = 0.0;

  std::int64_t bank_updates = 0;
  std::int64_t points_admitted = 0;
  std::int64_t deletions_oldest = 0;
  std::int64_t deletions_score = 0;
  double min_raw_variance = std::numeric_limits<double>::infinity();

  std::int64_t invariant_checks = 0;
  std::int64_t invariant_violations = 0;
  double max_inverse_gram_residual = 0.0;

  std::vector<double> update_durations_us;
  std::vector<Vector> trace;
  std::vector<Index> final_bv_sizes;
};

namespace detail {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct SquaredAccumulator {
  double sum = 0.0;
  std::int64_t components = 0;
  std::int64_t samples = 0;

  void add(const Vector& e) {
    sum += e.squaredNorm();
    components += e.size();
    ++samples;
  }
  double pooled_rmse() const {
    return components == 0 ? 0.0
                           : std::sqrt(sum / static_cast<double>(components));
  }
};

}  // namespace detail

inline void write_trace_csv(const std::string& path,
                            const std::vector<Vector>& rows, int n_joints) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_trace_csv: cannot open " + path);
  os << 't';
  const char* blocks[] = {"qd", "q", "e", "tauff", "taufb", "em", "bv_size"};
  for (const char* b : blocks)
    for (int j = 1; j <= n_joints; ++j) os << ',' << b << j;
  os << '\n';
  for (const Vector& row : rows) {
    for (Index i = 0; i < row.size(); ++i) {
      if (i > 0) os << ',';
      os << detail::format_number(row(i));
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("write_trace_csv: write failed: " + path);
}

/// Per-joint, per-task summary: one row per (joint, task, metric).
inline void write_summary_csv(const std::string& path, const RunMetrics& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_summary_csv: cannot open " + path);
  os << "joint,task,metric,value\n";
  for (int j = 0; j < m.n_joints; ++j) {
    for (int task = 0; task < 2; ++task) {
      os << j + 1 << ',' << task + 1 << ",tracking_rmse,"
         << detail::format_number(m.per_joint_tracking_rmse(j, task)) << '\n';
      os << j + 1 << ',' << task + 1 << ",modeling_rmse,"
         << detail::format_number(m.per_joint_modeling_rmse(j, task)) << '\n';
      os << j + 1 << ',' << task + 1 << ",deletions,"
         << m.per_joint_deletions(j, task) << '\n';
    }
  }
  if (!os) throw std::runtime_error("write_summary_csv: write failed: " + path);
}

/// Runs one closed-loop experiment. Deterministic for a fixed seed: two
/// runs with the same config produce byte-identical CSV files.
inline RunMetrics run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Schedule schedule = build_two_task_schedule(cfg.schedule);
  const ArmParams arm = cfg.arm_params();
  const ControllerConfig ctrl = cfg.controller_config();
  const int n = static_cast<int>(cfg.kp.size());
  const bool learning = cfg.scheme != Scheme::pd;

  GpBank bank(n, cfg.kernel_params(), cfg.bv_capacity, cfg.eps_tol,
              cfg.deletion_policy());
  if (!cfg.load_models_prefix.empty()) {
    for (int j = 0; j < n; ++j) {
      const std::string path = cfg.load_models_prefix + "_joint" +
                               std::to_string(j + 1) + ".sogp";
      std::ifstream is(path);
      if (!is)
        throw std::runtime_error("run_experiment: cannot open snapshot " +
                                 path);
      SogpModel restored = SogpModel::load_snapshot(is);
      detail::require(restored.dim() == 3 * n,
                      "run_experiment: snapshot dimension mismatch");
      bank.models[static_cast<std::size_t>(j)] = std::move(restored);
    }
  }
  StateEstimator estimator(cfg.estimator_mode, cfg.estimator_bandwidth,
                           cfg.fd_cutoff_hz);
  std::mt19937_64 rng(cfg.seed);

  const RefPoint ref0 = schedule.eval(0.0);
  ArmState state;
  state.q = ref0.q;
  state.qd.setZero();
  estimator.reset(state.q);
  StateEstimate est{state.q, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};

  const double total = schedule.total_duration();
  const double t_switch = cfg.schedule.t_switch;
  const auto steps = static_cast<std::int64_t>(std::llround(total / cfg.dt));
  detail::require(steps >= 1, "run_experiment: schedule shorter than dt");

  RunMetrics metrics;
  metrics.n_joints = n;
  metrics.warmup_end = cfg.warmup_duration;
  metrics.t_switch = t_switch;
  metrics.total_duration = total;

  const auto n_windows = static_cast<std::size_t>(std::max(
      0.0, std::floor((total - cfg.warmup_duration) / kMetricWindowSeconds +
                      1e-9)));
  std::vector<detail::SquaredAccumulator> win_track(n_windows),
      win_model(n_windows);
  std::array<detail::SquaredAccumulator, 2> task_track, task_model;
  detail::SquaredAccumulator total_track, total_model;
  Matrix task_joint_track_sq = Matrix::Zero(n, 2);
  Matrix task_joint_model_sq = Matrix::Zero(n, 2);
  Eigen::VectorXd task_samples = Eigen::VectorXd::Zero(2);
  metrics.per_joint_deletions = Eigen::MatrixXi::Zero(n, 2);

  std::vector<Vector> warmup_targets;
  bool normalizer_ready = false;

  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const RefPoint ref = schedule.eval(t);

    if (learning && !normalizer_ready && t >= cfg.warmup_duration) {
      fit_normalizer(bank, warmup_targets);
      normalizer_ready = true;
    }

    const TorqueCommand cmd =
        compute_torque(ctrl, bank, ref.q, ref.qd, ref.qdd,
                       Vector(est.q), Vector(est.v), t);
    metrics.min_raw_variance =
        std::min(metrics.min_raw_variance, cmd.min_raw_variance);

    // sample the loop at time t, before stepping
    const Vector e = ref.q - Vector(state.q);
    const Vector e_m = cmd.tau - cmd.gp_mean;
    if (t >= cfg.warmup_duration) {
      const int task = t < t_switch ? 0 : 1;
      task_track[task].add(e);
      task_model[task].add(e_m);
      total_track.add(e);
      total_model.add(e_m);
      task_joint_track_sq.col(task) += e.cwiseAbs2();
      task_joint_model_sq.col(task) += e_m.cwiseAbs2();
      task_samples(task) += 1.0;
      const auto w = static_cast<std::size_t>(
          std::floor((t - cfg.warmup_duration) / kMetricWindowSeconds));
      if (w < n_windows) {
        win_track[w].add(e);
        win_model[w].add(e_m);
      }
    }
    if (k % cfg.trace_decimation == 0) {
      Vector row(1 + 7 * n);
      row(0) = t;
      row.segment(1, n) = ref.q;
      row.segment(1 + n, n) = Vector(state.q);
      row.segment(1 + 2 * n, n) = e;
      row.segment(1 + 3 * n, n) = cmd.tau_ff;
      row.segment(1 + 4 * n, n) = cmd.tau_fb;
      row.segment(1 + 5 * n, n) = e_m;
      for (int j = 0; j < n; ++j)
        row(1 + 6 * n + j) =
            static_cast<double>(bank.models[static_cast<std::size_t>(j)].size());
      metrics.trace.push_back(std::move(row));
    }

    state = step(arm, state, cmd.tau, cfg.dt);
    const Eigen::Vector2d q_meas = measure(state, cfg.noise_var, rng);
    std::optional<TrueState> truth;
    if (cfg.estimator_mode == EstimatorMode::exact)
      truth = TrueState{state.q, state.qd,
                        joint_acceleration(arm, state.q, state.qd, cmd.tau)};
    est = estimator.step(q_meas, cfg.dt, truth);

    if (learning) {
      if (t >= cfg.warmup_duration) {
        const bool will_update =
            (bank.observe_calls + 1) % cfg.update_stride == 0;
        std::chrono::steady_clock::time_point t0;
        if (cfg.collect_update_timings && will_update)
          t0 = std::chrono::steady_clock::now();
        const auto reports = observe(ctrl, bank, Vector(est.q), Vector(est.v),
                                     Vector(est.a), cmd.tau);
        if (reports) {
          if (cfg.collect_update_timings) {
            const auto t1 = std::chrono::steady_clock::now();
            metrics.update_durations_us.push_back(
                std::chrono::duration<double, std::micro>(t1 - t0).count());
          }
          ++metrics.bank_updates;
          const int task = t < t_switch ? 0 : 1;
          for (int j = 0; j < n; ++j) {
            const UpdateReport& rep = (*reports)[static_cast<std::size_t>(j)];
            if (rep.added) ++metrics.points_admitted;
            if (rep.deleted_index) {
              metrics.per_joint_deletions(j, task) += 1;
              if (rep.deletion_branch == DeletionBranch::oldest)
                ++metrics.deletions_oldest;
              else
                ++metrics.deletions_score;
            }
          }
          if (cfg.invariant_check_interval > 0 &&
              metrics.bank_updates % cfg.invariant_check_interval == 0) {
            for (const SogpModel& model : bank.models) {
              const double residual = model.inverse_gram_residual();
              ++metrics.invariant_checks;
              metrics.max_inverse_gram_residual =
                  std::max(metrics.max_inverse_gram_residual, residual);
              if (residual > kInverseGramTolerance)
                ++metrics.invariant_violations;
            }
          }
        }
      } else {
        warmup_targets.push_back(cmd.tau);
      }
    }
  }

  metrics.window_start.reserve(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    metrics.window_start.push_back(cfg.warmup_duration +
                                   static_cast<double>(w) *
                                       kMetricWindowSeconds);
    metrics.window_tracking_rmse.push_back(win_track[w].pooled_rmse());
    metrics.window_modeling_rmse.push_back(win_model[w].pooled_rmse());
  }
  for (int task = 0; task < 2; ++task) {
    metrics.task_tracking_rmse[static_cast<std::size_t>(task)] =
        task_track[static_cast<std::size_t>(task)].pooled_rmse();
    metrics.task_modeling_rmse[static_cast<std::size_t>(task)] =
        task_model[static_cast<std::size_t>(task)].pooled_rmse();
  }
  metrics.total_tracking_rmse = total_track.pooled_rmse();
  metrics.total_modeling_rmse = total_model.pooled_rmse();
  metrics.per_joint_tracking_rmse.resize(n, 2);
  metrics.per_joint_modeling_rmse.resize(n, 2);
  for (int task = 0; task < 2; ++task) {
    const double count = std::max(task_samples(task), 1.0);
    metrics.per_joint_tracking_rmse.col(task) =
        (task_joint_track_sq.col(task) / count).cwiseSqrt();
    metrics.per_joint_modeling_rmse.col(task) =
        (task_joint_model_sq.col(task) / count).cwiseSqrt();
  }
  for (const SogpModel& model : bank.models)
    metrics.final_bv_sizes.push_back(model.size());

  if (!cfg.out_prefix.empty()) {
    write_trace_csv(cfg.out_prefix + "_trace.csv", metrics.trace, n);
    write_summary_csv(cfg.out_prefix + "_summary.csv", metrics);
  }
  if (!cfg.save_models_prefix.empty()) {
    for (int j = 0; j < n; ++j) {
      const std::string path = cfg.save_models_prefix + "_joint" +
                               std::to_string(j + 1) + ".sogp";
      std::ofstream os(path);
      if (!os)
        throw std::runtime_error("run_experiment: cannot write snapshot " +
                                 path);
      bank.models[static_cast<std::size_t>(j)].save_snapshot(os);
    }
  }
  return metrics;
}

struct SchemeOutcome {
  Scheme scheme = Scheme::pis;
  std::optional<RunMetrics> metrics;
  std::string error;
};

struct ComparisonReport {
  std::vector<SchemeOutcome> outcomes;
  std::optional<Scheme> winner_task1;
  std::optional<Scheme> winner_task2;
};

inline void write_comparison_csv(const std::string& path,
                                 const ComparisonReport& report,
                                 int n_joints) {
  std::ofstream os(path);
  if (!os)
    throw std::runtime_error("write_comparison_csv: cannot open " + path);
  os << "joint";
  for (const SchemeOutcome& o : report.outcomes)
    os << ',' << scheme_name(o.scheme) << "_task1,"
       << scheme_name(o.scheme) << "_task2";
  os << '\n';
  const auto cell = [&](const SchemeOutcome& o, int joint, int task) {
    if (!o.metrics) return std::string("nan");
    if (joint < n_joints)
      return detail::format_number(
          o.metrics->per_joint_tracking_rmse(joint, task));
    return detail::format_number(
        o.metrics->per_joint_tracking_rmse.col(task).sum());
  };
  for (int j = 0; j <= n_joints; ++j) {
    os << (j < n_joints ? std::to_string(j + 1) : std::string("sum"));
    for (const SchemeOutcome& o : report.outcomes)
      os << ',' << cell(o, j, 0) << ',' << cell(o, j, 1);
    os << '\n';
  }
  if (!os)
    throw std::runtime_error("write_comparison_csv: write failed: " + path);
}

/// Runs the three deletion schemes with identical settings and seed (the
/// noise sequences match sample for sample) and picks the per-task winner
/// by pooled tracking RMSE. A failing scheme is reported but does not
/// abort the others.
inline ComparisonReport compare_schemes(const ExperimentConfig& base) {
  ComparisonReport report;
  for (Scheme scheme : {Scheme::pis, Scheme::fs, Scheme::ops}) {
    ExperimentConfig cfg = base;
    cfg.scheme = scheme;
    if (!base.out_prefix.empty())
      cfg.out_prefix = base.out_prefix + "_" + scheme_name(scheme);
    SchemeOutcome outcome;
    outcome.scheme = scheme;
    try {
      outcome.metrics = run_experiment(cfg);
    } catch (const std::exception& ex) {
      outcome.error = ex.what();
    }
    report.outcomes.push_back(std::move(outcome));
  }
  for (int task = 0; task < 2; ++task) {
    const SchemeOutcome* best = nullptr;
    for (const SchemeOutcome& o : report.outcomes) {
      if (!o.metrics) continue;
      if (!best || o.metrics->task_tracking_rmse[static_cast<std::size_t>(
                       task)] < best->metrics->task_tracking_rmse
                                    [static_cast<std::size_t>(task)])
        best = &o;
    }
    if (best) {
      if (task == 0)
        report.winner_task1 = best->scheme;
      else
        report.winner_task2 = best->scheme;
    }
  }
  if (!base.out_prefix.empty())
    write_comparison_csv(base.out_prefix + "_compare.csv", report,
                         static_cast<int>(base.kp.size()));
  return report;
}

}  // namespace sogp
