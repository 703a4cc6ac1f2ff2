#include "splash/bench.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "splash/config.h"
#include "splash/dataio.h"
#include "splash/rng.h"
#include "splash/sgd.h"

using namespace splash;

TEST_CASE("config file parsing") {
  const char* path = "/tmp/splash_test_config.txt";
  {
    std::ofstream f(path);
    f << "# comment line\n"
      << "task = lr\n"
      << "seed = 42\n"
      << "iterations = 3\n"
      << "threads = auto\n"
      << "dim = 12\n"
      << "classes = 3\n";
  }
  const auto config = load_config_file(path);
  CHECK(config.task == "lr");
  CHECK(config.seed == 42);
  CHECK(config.iterations == 3);
  CHECK(config.threads_auto);
  CHECK(config.param_int("dim", 0) == 12);
  CHECK(config.param_int("classes", 0) == 3);
  CHECK(config.param_int("partitions", 8) == 8);  // fallback
  validate_config(config);
}

TEST_CASE("config rejects unknown keys and bad values") {
  ExperimentConfig config;
  CHECK_THROWS_AS(apply_config_entry(config, "no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(config, "iterations", "zero"),
                  ConfigError);
  CHECK_THROWS_AS(apply_config_entry(config, "threads", "-2"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(config, "weight_policy", "magic"),
                  ConfigError);
  apply_config_entry(config, "task", "unknown-task");
  CHECK_THROWS_AS(validate_config(config), ConfigError);
  CHECK_THROWS_AS(load_config_file("/tmp/definitely_missing_config.cfg"),
                  ConfigError);
}

TEST_CASE("baseline combiner examples") {
  const std::vector<std::vector<double>> deltas{{1.0}, {2.0}, {3.0}};
  CHECK(baseline_combiner(BaselineMode::Accumulate, deltas, {0.0})[0] == 6.0);
  CHECK(baseline_combiner(BaselineMode::Average, deltas, {0.0})[0] == 2.0);
  // m = 1: both modes coincide
  const std::vector<std::vector<double>> one{{1.5}};
  CHECK(baseline_combiner(BaselineMode::Accumulate, one, {1.0})[0] ==
        baseline_combiner(BaselineMode::Average, one, {1.0})[0]);
  CHECK_THROWS_AS(baseline_combiner(BaselineMode::Average, {}, {0.0}),
                  UsageError);
}

TEST_CASE("accumulation of contractive updates replays the divergence rule") {
  // with every local update equal to (w* - w_old), accumulation lands at
  // (m-1)(w* - w_old) + w*: the distance grows by a factor m - 1 >= m - 2
  const std::vector<double> w_old{0.0, 0.0};
  const std::vector<double> w_star{1.0, -2.0};
  for (int m : {3, 5, 30}) {
    std::vector<std::vector<double>> deltas(
        m, {w_star[0] - w_old[0], w_star[1] - w_old[1]});
    const auto v = baseline_combiner(BaselineMode::Accumulate, deltas, w_old);
    double dist_new = 0.0, dist_old = 0.0;
    for (size_t i = 0; i < 2; ++i) {
      dist_new += (v[i] - w_star[i]) * (v[i] - w_star[i]);
      dist_old += (w_old[i] - w_star[i]) * (w_old[i] - w_star[i]);
    }
    CHECK(std::sqrt(dist_new) ==
          doctest::Approx((m - 1) * std::sqrt(dist_old)));
    CHECK(std::sqrt(dist_new) >= (m - 2) * std::sqrt(dist_old));
  }
}

TEST_CASE("toy experiment smoke: distances reproduce the figure ranking") {
  ToyConfig config;
  config.replications = 8;  // the full 50 runs in the acceptance suite
  const auto result = toy_experiment(config);
  REQUIRE(result.per_seed.size() == 8);
  CHECK(result.median_loss_accumulated > result.median_loss_averaged);
  CHECK(result.median_dist_accumulated > result.median_dist_start);
  // position-space ranking: accumulate >> average >> combine
  for (const auto& r : result.per_seed) {
    const auto d2 = [&](const std::vector<double>& w) {
      const double a = w[0] - r.minimizer[0];
      const double b = w[1] - r.minimizer[1];
      return std::sqrt(a * a + b * b);
    };
    CHECK(r.dist_accumulated > d2(r.averaged));
    CHECK(d2(r.averaged) > d2(r.combined));
    // weighted locals trade bias for variance
    CHECK(r.weighted_local_mean_loss > r.unit_local_mean_loss);
  }
  const std::string json = result.to_json_string();
  CHECK(json.find("\"loss_combined\"") != std::string::npos);
}

TEST_CASE("rate lab on a tiny grid has a negative slope and sane cells") {
  RateConfig config;
  config.t_grid = {1, 2};
  config.m_grid = {1, 2};
  config.n_grid = {100, 200};
  config.trials = 60;
  config.pool = 400;
  const auto result = rate_experiment(config);
  REQUIRE(result.cells.size() == 8);
  CHECK(result.slope < -0.5);
  CHECK(result.slope > -1.5);
  for (const auto& c : result.cells) {
    CHECK(c.mse > 0.0);
    CHECK(c.std_error > 0.0);
    CHECK(c.trials == 60);
  }
  // doubling any axis reduces the error
  CHECK(doubling_ratio(result, "T", 50.0) < 1.0);
  CHECK(doubling_ratio(result, "n", 50.0) < 1.0);
  CHECK(result.csv().find("T,m,n,mse") == 0);
}

TEST_CASE("rate lab refuses an oversized grid with an estimate") {
  RateConfig config;
  config.trials = 1000000;
  try {
    rate_experiment(config);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("budget") != std::string::npos);
  }
}

TEST_CASE("run_task lr produces deterministic metrics") {
  ExperimentConfig config;
  config.task = "lr";
  config.seed = 5;
  config.iterations = 3;
  config.threads = 2;
  config.params["dim"] = "10";
  config.params["classes"] = "3";
  config.params["samples"] = "200";
  config.params["partitions"] = "4";

  const auto r1 = run_task(config);
  const auto r2 = run_task(config);
  CHECK(r1.metrics_csv() == r2.metrics_csv());
  CHECK(r1.metrics.size() == 6);  // 3 parallel + 3 baseline
  // training loss decreases from log K
  CHECK(r1.metrics[0].metric == "train_loss");
  CHECK(r1.metrics[0].value < std::log(3.0));
  // baseline series tagged m=1
  CHECK(r1.metrics[3].metric == "baseline_train_loss");
  CHECK(r1.metrics[3].m == 1);
  const std::string csv = r1.metrics_csv();
  CHECK(csv.rfind("iteration,metric,value,m\n", 0) == 0);
}

TEST_CASE("run_task cf improves held-out mse over iterations") {
  ExperimentConfig config;
  config.task = "cf";
  config.seed = 3;
  config.iterations = 4;
  config.threads = 2;
  config.params["dim"] = "8";
  config.params["users"] = "60";
  config.params["items"] = "30";
  config.params["rank"] = "3";
  config.params["ratings_per_user"] = "12";
  config.params["partitions"] = "4";
  const auto result = run_task(config);
  std::vector<double> series;
  for (const auto& m : result.metrics)
    if (m.metric == "test_mse") series.push_back(m.value);
  REQUIRE(series.size() == 4);
  CHECK(series.back() < series.front());
}

TEST_CASE("run_task lda auto mode records tuning results") {
  ExperimentConfig config;
  config.task = "lda";
  config.seed = 9;
  config.iterations = 4;
  config.threads_auto = true;
  config.params["topics"] = "4";
  config.params["vocab"] = "60";
  config.params["docs"] = "40";
  config.params["tokens_per_doc"] = "20";
  config.params["test_docs"] = "6";
  config.params["oversample"] = "2";
  config.params["foldin_sweeps"] = "5";
  config.params["partitions"] = "12";
  const auto result = run_task(config);
  CHECK(!result.tunes.empty());
  CHECK(result.m_trajectory.size() == 4);
  std::vector<double> series;
  for (const auto& m : result.metrics)
    if (m.metric == "predictive_loglik") series.push_back(m.value);
  REQUIRE(series.size() == 4);
  for (double v : series) CHECK(std::isfinite(v));
}

TEST_CASE("timing report accounts for nearly all wall time") {
  ExperimentConfig config;
  config.task = "lda";
  config.seed = 4;
  config.iterations = 4;
  config.threads = 2;
  config.params["topics"] = "10";
  config.params["vocab"] = "400";
  config.params["docs"] = "150";
  config.params["tokens_per_doc"] = "100";
  config.params["test_docs"] = "8";
  config.params["oversample"] = "5";
  config.params["foldin_sweeps"] = "2";
  config.params["partitions"] = "4";
  const auto result = run_task(config);
  REQUIRE(result.reports.size() == 4);
  // per-iteration fraction of wall time covered by compute + wait + combine;
  // the median tolerates an occasional scheduling hiccup on a busy host
  std::vector<double> fractions;
  for (const auto& r : result.reports) {
    double slowest = 0.0;
    for (const auto& w : r.workers)
      slowest = std::max(slowest, w.compute_ms + w.wait_ms);
    fractions.push_back((slowest + r.combine_ms) / r.wall_ms);
  }
  std::sort(fractions.begin(), fractions.end());
  const double median = 0.5 * (fractions[1] + fractions[2]);
  CHECK(median >= 0.95);
}

TEST_CASE("SPLASH_THREADS environment variable overrides the config") {
  ExperimentConfig config;
  config.task = "lr";
  config.seed = 2;
  config.iterations = 1;
  config.threads = 2;
  config.params["dim"] = "6";
  config.params["classes"] = "2";
  config.params["samples"] = "60";
  config.params["partitions"] = "4";
  setenv("SPLASH_THREADS", "3", 1);
  const auto result = run_task(config);
  unsetenv("SPLASH_THREADS");
  REQUIRE(result.m_trajectory.size() == 1);
  CHECK(result.m_trajectory[0] == 3);
  const auto plain = run_task(config);
  CHECK(plain.m_trajectory[0] == 2);
}

TEST_CASE("m=1 sampled engine agrees with an independent sequential run") {
  // one iteration at m=1 with n draws is plain sequential SGD over n
  // with-replacement samples; an independent implementation with its own
  // random stream must land on the same mean-squared error up to
  // Monte-Carlo noise
  const size_t pool_size = 400;
  const int n = 400;
  const int trials = 150;
  const auto pool = synth_toy(pool_size, 21);
  const auto w_star = toy_minimizer(pool);
  const double lambda = 0.02;

  // engine side
  SgdOptions sgd;
  sgd.schedule = StepSchedule::inv_t(lambda);
  sgd.step_mode = WeightedStepMode::MEtaT;
  ProjectionBall ball;
  ball.radius = 10.0;
  sgd.projection = ball;
  GradientFn grad = [](const Element& e, WeightsView& w) {
    const auto& x = std::get<std::vector<double>>(e);
    return SparseGrad{{0, w[0] - x[0]}, {1, 0.01 * (w[1] - x[1])}};
  };
  std::vector<Element> elems;
  for (const auto& x : pool) elems.emplace_back(x);
  auto ds = ParamDataset::create(std::move(elems), 1, 21);
  declare_sgd_state(ds, sgd, {-1.0, -1.0});
  const VarStore initial = ds.shared();
  auto process = make_sgd_process(sgd, grad);
  RunOptions opts;
  opts.draws_per_worker = n;
  double engine_mse = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    ds.install_shared(initial);
    ds.run_iteration(process, 1, opts);
    const auto& w = ds.shared_mutable().get_array("w");
    const double d0 = w[0] - w_star[0], d1 = w[1] - w_star[1];
    engine_mse += d0 * d0 + d1 * d1;
  }
  engine_mse /= trials;

  // standalone oracle with its own draws
  auto g = rng::make_engine(99123);
  double oracle_mse = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    double w0 = -1.0, w1 = -1.0;
    for (int t = 1; t <= n; ++t) {
      const auto& x = pool[rng::uniform_below(g, pool_size)];
      const double eta = 2.0 / (lambda * t);
      w0 -= eta * (w0 - x[0]);
      w1 -= eta * 0.01 * (w1 - x[1]);
      const double norm = std::sqrt(w0 * w0 + w1 * w1);
      if (norm > 10.0) {
        w0 *= 10.0 / norm;
        w1 *= 10.0 / norm;
      }
    }
    const double d0 = w0 - w_star[0], d1 = w1 - w_star[1];
    oracle_mse += d0 * d0 + d1 * d1;
  }
  oracle_mse /= trials;

  // agreement within generous Monte-Carlo tolerance
  CHECK(engine_mse / oracle_mse > 0.55);
  CHECK(engine_mse / oracle_mse < 1.8);
}
