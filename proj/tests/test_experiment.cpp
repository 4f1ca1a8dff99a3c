#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "sogp/arm.hpp"
#include "sogp/config.hpp"
#include "sogp/experiment.hpp"

using namespace sogp;

namespace {

Vector vecn(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// 8 s miniature of the two-task run
ExperimentConfig short_cfg() {
  ExperimentConfig cfg;
  cfg.schedule.segment_duration = 2.5;
  cfg.schedule.t_switch = 5.0;
  cfg.schedule.bridge_duration = 1.0;
  cfg.schedule.total_duration = 8.0;
  cfg.schedule.circle_radius = 0.2;
  cfg.schedule.circle_omega = 2.0;
  cfg.schedule.circle_center << 0.3, -0.3;
  cfg.warmup_duration = 1.0;
  cfg.ramp_duration = 0.3;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("pooled rmse over stacked components") {
  CHECK(rmse({vecn({0.0, 0.0}), vecn({0.0, 0.0})}) == 0.0);
  CHECK_THAT(rmse({vecn({-2.5, -2.5}), vecn({-2.5, -2.5})}),
             Catch::Matchers::WithinAbs(2.5, 1e-15));
  CHECK_THAT(rmse({vecn({3.0, 4.0})}),
             Catch::Matchers::WithinAbs(std::sqrt(12.5), 1e-12));
  CHECK_THAT(rmse({vecn({3.0, 4.0})}),
             Catch::Matchers::WithinAbs(3.535534, 1e-6));
  CHECK_THROWS_AS(rmse({}), std::invalid_argument);
}

TEST_CASE("per-joint rmse") {
  const Vector r = rmse_per_joint({vecn({3.0, 0.0}), vecn({-3.0, 4.0})});
  CHECK_THAT(r(0), Catch::Matchers::WithinAbs(3.0, 1e-12));
  CHECK_THAT(r(1), Catch::Matchers::WithinAbs(4.0 / std::sqrt(2.0), 1e-12));
  CHECK_THROWS_AS(rmse_per_joint({}), std::invalid_argument);
}

TEST_CASE("flat config parsing: comments, whitespace, overrides") {
  std::istringstream is(
      "# full line comment\n"
      "scheme = ops\n"
      "\n"
      "  h=4   # trailing comment\n"
      "kp = 150, 250\n"
      "lengthscales = 0.5 0.5 0.5 0.5 0.2 0.2\n"
      "seed = 9\n");
  const auto entries = parse_flat_config(is);
  const ExperimentConfig cfg = config_from_map(entries);
  CHECK(cfg.scheme == Scheme::ops);
  CHECK(cfg.h == 4);
  CHECK(cfg.kp(0) == 150.0);
  CHECK(cfg.kp(1) == 250.0);
  CHECK(cfg.seed == 9);
}

TEST_CASE("config rejects unknown keys and malformed values") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(apply_config_key(cfg, "not_a_key", "1"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_key(cfg, "eps_tol", "zero"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_key(cfg, "h", "2.5"), std::invalid_argument);
  CHECK_THROWS_AS(apply_config_key(cfg, "scheme", "rls"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_key(cfg, "circle_center", "1,2,3"),
                  std::invalid_argument);

  std::istringstream bad("just a line without equals\n");
  CHECK_THROWS_AS(parse_flat_config(bad), std::invalid_argument);
}

TEST_CASE("default configuration carries the benchmark protocol values") {
  const ExperimentConfig cfg;
  CHECK(cfg.scheme == Scheme::fs);
  CHECK(cfg.h == 15);
  CHECK(cfg.bv_capacity == 45);
  CHECK(cfg.eps_tol == 0.01);
  CHECK(cfg.sigma_s2 == 1.0);
  CHECK(cfg.sigma_n2 == 0.04);  // sigma_n = 0.2
  CHECK(cfg.update_stride == 7);
  CHECK(cfg.dt == 1e-3);
  CHECK(cfg.noise_var == 1e-14);
  CHECK(cfg.warmup_duration == 2.0);
  CHECK(cfg.ramp_duration == 0.6);
  CHECK(cfg.lengthscales == vecn({0.5, 0.5, 0.5, 0.5, 0.2, 0.2}));
  CHECK(cfg.kp == vecn({200.0, 200.0}));
  CHECK(cfg.kd == vecn({20.0, 20.0}));
  CHECK(cfg.schedule.t_switch == 40.0);
  CHECK(cfg.schedule.total_duration == 60.0);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("trace CSV has the contracted header and row count") {
  ExperimentConfig cfg = short_cfg();
  cfg.out_prefix = "/tmp/sogp_test_run";
  const RunMetrics m = run_experiment(cfg);

  const std::string trace = slurp("/tmp/sogp_test_run_trace.csv");
  const std::string expected_header =
      "t,qd1,qd2,q1,q2,e1,e2,tauff1,tauff2,taufb1,taufb2,em1,em2,"
      "bv_size1,bv_size2";
  CHECK(trace.substr(0, expected_header.size()) == expected_header);

  // 8000 steps, decimation 10
  const auto rows = static_cast<long>(std::count(trace.begin(), trace.end(), '\n')) - 1;
  CHECK(rows == 800);
  CHECK(m.trace.size() == 800);
}

TEST_CASE("summary CSV holds joints x tasks x metrics rows") {
  ExperimentConfig cfg = short_cfg();
  cfg.out_prefix = "/tmp/sogp_test_sum";
  run_experiment(cfg);
  const std::string summary = slurp("/tmp/sogp_test_sum_summary.csv");
  std::istringstream is(summary);
  std::string line;
  std::getline(is, line);
  CHECK(line == "joint,task,metric,value");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2 * 2 * 3);
}

TEST_CASE("fixed seed reproduces byte-identical CSV output") {
  ExperimentConfig cfg = short_cfg();
  cfg.seed = 42;
  cfg.out_prefix = "/tmp/sogp_det_a";
  run_experiment(cfg);
  cfg.out_prefix = "/tmp/sogp_det_b";
  run_experiment(cfg);
  CHECK(slurp("/tmp/sogp_det_a_trace.csv") == slurp("/tmp/sogp_det_b_trace.csv"));
  CHECK(slurp("/tmp/sogp_det_a_summary.csv") ==
        slurp("/tmp/sogp_det_b_summary.csv"));
}

TEST_CASE("pd-only steady tracking error matches the droop fixed point") {
  // hold one pose: every waypoint identical, circle reduced to a crawl
  ExperimentConfig cfg = short_cfg();
  cfg.scheme = Scheme::pd;
  cfg.estimator_mode = EstimatorMode::exact;
  cfg.noise_var = 0.0;
  Matrix hold(4, 2);
  const Eigen::Vector2d pose(0.3, -0.5);
  for (int i = 0; i < 4; ++i) hold.row(i) = pose.transpose();
  cfg.schedule.waypoints = hold;

  const RunMetrics m = run_experiment(cfg);

  // independent fixed point of Kp (q_d - q) = g(q)
  const ArmParams arm = cfg.arm_params();
  Eigen::Vector2d q = pose;
  for (int it = 0; it < 200; ++it)
    q = pose - gravity_torque(arm, q).cwiseQuotient(Eigen::Vector2d(cfg.kp));
  const Eigen::Vector2d e_ss = pose - q;
  const double expected = std::sqrt(e_ss.squaredNorm() / 2.0);

  // last pre-switch window is fully settled
  double settled = -1.0;
  for (std::size_t i = 0; i < m.window_start.size(); ++i)
    if (m.window_start[i] + 1.0 <= cfg.schedule.t_switch)
      settled = m.window_tracking_rmse[i];
  REQUIRE(settled >= 0.0);
  CHECK_THAT(settled, Catch::Matchers::WithinRel(expected, 1e-3));
}

TEST_CASE("windowed series tiles warmup to total with no gaps") {
  ExperimentConfig cfg = short_cfg();
  const RunMetrics m = run_experiment(cfg);
  REQUIRE(m.window_start.size() == 7);  // [1,8) in 1 s windows
  for (std::size_t i = 0; i < m.window_start.size(); ++i)
    CHECK_THAT(m.window_start[i],
               Catch::Matchers::WithinAbs(1.0 + double(i), 1e-12));
  CHECK(m.window_tracking_rmse.size() == 7);
  CHECK(m.window_modeling_rmse.size() == 7);
}

TEST_CASE("compare runs the three schemes on one seed and picks winners") {
  ExperimentConfig cfg = short_cfg();
  cfg.seed = 7;
  cfg.out_prefix = "/tmp/sogp_cmp";
  const ComparisonReport report = compare_schemes(cfg);
  REQUIRE(report.outcomes.size() == 3);
  CHECK(report.outcomes[0].scheme == Scheme::pis);
  CHECK(report.outcomes[1].scheme == Scheme::fs);
  CHECK(report.outcomes[2].scheme == Scheme::ops);
  for (const SchemeOutcome& o : report.outcomes) {
    CHECK(o.metrics.has_value());
    CHECK(o.error.empty());
  }
  CHECK(report.winner_task1.has_value());
  CHECK(report.winner_task2.has_value());

  const std::string table = slurp("/tmp/sogp_cmp_compare.csv");
  CHECK(table.substr(0, 6) == "joint,");
  CHECK(table.find("pis_task1,pis_task2") != std::string::npos);
  CHECK(table.find("\nsum,") != std::string::npos);
}

TEST_CASE("forgetting with h = 1 reproduces the oldest-point run end to end") {
  ExperimentConfig base = short_cfg();
  base.seed = 3;

  ExperimentConfig fs1 = base;
  fs1.scheme = Scheme::fs;
  fs1.h = 1;
  fs1.out_prefix = "/tmp/sogp_fs1";
  run_experiment(fs1);

  ExperimentConfig ops = base;
  ops.scheme = Scheme::ops;
  ops.out_prefix = "/tmp/sogp_ops1";
  run_experiment(ops);

  CHECK(slurp("/tmp/sogp_fs1_trace.csv") == slurp("/tmp/sogp_ops1_trace.csv"));
  CHECK(slurp("/tmp/sogp_fs1_summary.csv") ==
        slurp("/tmp/sogp_ops1_summary.csv"));
}

TEST_CASE("a diverging configuration is reported per scheme, not thrown") {
  ExperimentConfig cfg = short_cfg();
  cfg.kp = vecn({1e9, 1e9});  // destabilizes the loop
  cfg.kd = vecn({1e-3, 1e-3});
  const ComparisonReport report = compare_schemes(cfg);
  REQUIRE(report.outcomes.size() == 3);
  for (const SchemeOutcome& o : report.outcomes) {
    CHECK_FALSE(o.metrics.has_value());
    CHECK_FALSE(o.error.empty());
  }
  CHECK_FALSE(report.winner_task1.has_value());
}

TEST_CASE("model snapshots can be saved by a run and restored by the next") {
  ExperimentConfig cfg = short_cfg();
  cfg.save_models_prefix = "/tmp/sogp_snap";
  const RunMetrics first = run_experiment(cfg);
  REQUIRE(first.final_bv_sizes.size() == 2);
  CHECK(first.final_bv_sizes[0] > 0);

  std::ifstream snap("/tmp/sogp_snap_joint1.sogp");
  REQUIRE(snap.good());
  const SogpModel restored = SogpModel::load_snapshot(snap);
  CHECK(restored.size() == first.final_bv_sizes[0]);

  ExperimentConfig next = short_cfg();
  next.load_models_prefix = "/tmp/sogp_snap";
  CHECK_NOTHROW(run_experiment(next));
}

TEST_CASE("run rejects a warmup too short to fit the normalizer") {
  ExperimentConfig cfg = short_cfg();
  cfg.warmup_duration = 0.005;  // 5 samples at 1 ms
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  cfg.scheme = Scheme::pd;  // no normalizer needed without learning
  CHECK_NOTHROW(run_experiment(cfg));
}

TEST_CASE("scheme names round-trip") {
  for (Scheme s : {Scheme::pd, Scheme::pis, Scheme::ops, Scheme::fs})
    CHECK(parse_scheme(scheme_name(s)) == s);
  CHECK_THROWS_AS(parse_scheme("bogus"), std::invalid_argument);
}
