#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splash/autotune.h"
#include "splash/config.h"
#include "splash/engine.h"

namespace splash {

// ---------------------------------------------------------------------------
// Toy comparison of parallelization strategies on the 2-d weighted quadratic
// loss l(w; x) = (x - w)^T diag(1, 1/100) (x - w): exact minimizer (a),
// sequential SGD (b), unit-weight local solutions (c) with their average (d)
// and accumulation (e), weighted local solutions (f), and the reweighted
// combine (g).
// ---------------------------------------------------------------------------

struct ToyConfig {
  size_t samples = 3000;
  int threads = 30;
  int replications = 50;
  uint64_t base_seed = 1;
};

struct ToySeedResult {
  std::vector<double> minimizer, sequential, averaged, accumulated, combined;
  double loss_minimizer = 0.0, loss_sequential = 0.0, loss_averaged = 0.0,
         loss_accumulated = 0.0, loss_combined = 0.0;
  // local-solution summaries for the bias/variance contrast between the
  // unit-weight (c) and weighted (f) locals
  double unit_local_mean_loss = 0.0, weighted_local_mean_loss = 0.0;
  double dist_accumulated = 0.0;  // distance of (e) to the minimizer
  double dist_start = 0.0;        // distance of w0 to the minimizer
};

struct ToyResult {
  ToyConfig config;
  std::vector<ToySeedResult> per_seed;
  double median_loss_minimizer = 0.0, median_loss_sequential = 0.0,
         median_loss_averaged = 0.0, median_loss_accumulated = 0.0,
         median_loss_combined = 0.0;
  double median_dist_accumulated = 0.0, median_dist_start = 0.0;

  std::string to_json_string() const;
};

ToyResult toy_experiment(const ToyConfig& config);

// The two naive combiners: v_old + sum(deltas) and v_old + mean(deltas).
enum class BaselineMode { Accumulate, Average };
std::vector<double> baseline_combiner(BaselineMode mode,
                                      const std::vector<std::vector<double>>& deltas,
                                      const std::vector<double>& v_old);

// Toy loss helpers (shared with the acceptance suite).
double toy_loss(const std::vector<std::vector<double>>& data,
                const std::vector<double>& w);
std::vector<double> toy_minimizer(const std::vector<std::vector<double>>& data);

// ---------------------------------------------------------------------------
// Convergence-rate lab: Monte-Carlo mean-squared error of the combined
// iterate on a strongly convex quadratic with eta_t = 2 / (lambda t),
// with-replacement sampling and per-step projection, over a (T, m, n) grid.
// ---------------------------------------------------------------------------

struct RateConfig {
  std::vector<int> t_grid{1, 2, 4};
  std::vector<int> m_grid{1, 2, 4};
  std::vector<int> n_grid{250, 500, 1000};
  int trials = 300;
  size_t pool = 1000;
  uint64_t seed = 1;
  double ball_radius = 10.0;
  // refuse grids whose total step budget exceeds this
  uint64_t max_total_steps = 4ull * 1000 * 1000 * 1000;
};

struct RateCell {
  int T = 0, m = 0, n = 0;
  double mse = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

struct RateResult {
  RateConfig config;
  std::vector<RateCell> cells;
  double slope = 0.0;  // log-log regression of MSE on T*m*n

  const RateCell& cell(int T, int m, int n) const;
  std::string to_json_string() const;
  std::string csv() const;
};

RateResult rate_experiment(const RateConfig& config);
double loglog_slope(const std::vector<RateCell>& cells);

// Geometric-mean MSE ratio when doubling one axis ("T", "m" or "n"),
// restricted to cell pairs with n / m >= min_n_over_m on both sides.
double doubling_ratio(const RateResult& result, const std::string& axis,
                      double min_n_over_m = 125.0);

// ---------------------------------------------------------------------------
// Desk-scale task harness: lr / cf / lda with fixed or auto-tuned thread
// counts, per-iteration metrics, and a single-thread baseline series.
// ---------------------------------------------------------------------------

struct IterationMetric {
  uint64_t iteration = 0;
  std::string metric;
  double value = 0.0;
  int m = 1;
};

struct ExperimentResult {
  std::string task;
  uint64_t seed = 0;
  std::vector<IterationMetric> metrics;
  std::vector<SyncReport> reports;
  std::vector<TuneResult> tunes;
  std::vector<int> m_trajectory;

  std::string to_json_string() const;
  // deterministic contents: iteration,metric,value,m
  std::string metrics_csv() const;
  // wall-clock decomposition per iteration, informational
  std::string timing_csv() const;
};

ExperimentResult run_task(const ExperimentConfig& config);

// Writes result JSON, metrics CSV and timing CSV under config.out_dir.
void write_experiment_outputs(const ExperimentConfig& config,
                              const ExperimentResult& result);

}  // namespace splash
