#include "splash/bench.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "splash/collab_filter.h"
#include "splash/dataio.h"
#include "splash/lda.h"
#include "splash/logistic.h"
#include "splash/rng.h"
#include "splash/sgd.h"

namespace splash {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double median(std::vector<double> v) {
  if (v.empty()) throw UsageError("median of empty set");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// the toy objective's curvature matrix diag(1, 1/100)
constexpr double kToyA0 = 1.0;
constexpr double kToyA1 = 0.01;

// Gradient of the half-quadratic (1/2)(x-w)^T A (x-w): the loss orderings
// the experiments check are scale-invariant, and this normalization makes
// the first unit step land exactly on its sample (eta_1 = 1).
GradientFn toy_gradient() {
  return [](const Element& e, WeightsView& w) {
    const auto& x = std::get<std::vector<double>>(e);
    return SparseGrad{{0, kToyA0 * (w[0] - x[0])},
                      {1, kToyA1 * (w[1] - x[1])}};
  };
}

std::vector<Element> toy_elements(const std::vector<std::vector<double>>& d) {
  std::vector<Element> out;
  out.reserve(d.size());
  for (const auto& x : d) out.emplace_back(x);
  return out;
}

double dist2d(const std::vector<double>& a, const std::vector<double>& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

double toy_loss(const std::vector<std::vector<double>>& data,
                const std::vector<double>& w) {
  double total = 0.0;
  for (const auto& x : data) {
    const double d0 = x[0] - w[0];
    const double d1 = x[1] - w[1];
    total += kToyA0 * d0 * d0 + kToyA1 * d1 * d1;
  }
  return total / static_cast<double>(data.size());
}

std::vector<double> toy_minimizer(
    const std::vector<std::vector<double>>& data) {
  // common curvature matrix: the minimizer of the mean loss is the mean
  std::vector<double> mean(2, 0.0);
  for (const auto& x : data) {
    mean[0] += x[0];
    mean[1] += x[1];
  }
  mean[0] /= static_cast<double>(data.size());
  mean[1] /= static_cast<double>(data.size());
  return mean;
}

std::vector<double> baseline_combiner(
    BaselineMode mode, const std::vector<std::vector<double>>& deltas,
    const std::vector<double>& v_old) {
  if (deltas.empty())
    throw UsageError("baseline_combiner: need at least one local update");
  std::vector<double> out = v_old;
  for (const auto& d : deltas) {
    if (d.size() != v_old.size())
      throw ShapeError("baseline_combiner: shape mismatch");
    for (size_t i = 0; i < d.size(); ++i) out[i] += d[i];
  }
  if (mode == BaselineMode::Average) {
    const double m = static_cast<double>(deltas.size());
    for (size_t i = 0; i < out.size(); ++i)
      out[i] = v_old[i] + (out[i] - v_old[i]) / m;
  }
  return out;
}

ToyResult toy_experiment(const ToyConfig& config) {
  ToyResult result;
  result.config = config;
  const std::vector<double> w0{-1.0, -1.0};

  for (int rep = 0; rep < config.replications; ++rep) {
    const uint64_t seed = config.base_seed + static_cast<uint64_t>(rep);
    const auto data = synth_toy(config.samples, seed);
    ToySeedResult r;
    r.minimizer = toy_minimizer(data);
    r.loss_minimizer = toy_loss(data, r.minimizer);
    r.dist_start = dist2d(w0, r.minimizer);

    SgdOptions sgd;
    sgd.schedule = StepSchedule::inv_sqrt();

    // (b) sequential SGD over the full pass
    {
      auto ds = ParamDataset::create(toy_elements(data), 1, seed);
      declare_sgd_state(ds, sgd, w0);
      ds.run_iteration(make_sgd_process(sgd, toy_gradient()), 1);
      r.sequential = ds.shared_mutable().get_array("w");
      r.loss_sequential = toy_loss(data, r.sequential);
    }

    // (c)-(e): unit-weight locals and the two naive combiners
    {
      auto ds = ParamDataset::create(toy_elements(data), config.threads, seed);
      declare_sgd_state(ds, sgd, w0);
      RunOptions opts;
      opts.weight_mode = WeightMode::Unit;
      opts.capture_combine_report = true;
      ds.run_iteration(make_sgd_process(sgd, toy_gradient()), config.threads,
                       opts);
      const CombineReport& report = ds.last_combine_report();
      std::vector<std::vector<double>> deltas;
      double local_loss = 0.0;
      for (int i = 0; i < config.threads; ++i) {
        const auto local = report.thread_local_value("w", i);
        local_loss += toy_loss(data, local);
        std::vector<double> delta(2);
        for (size_t j = 0; j < 2; ++j) delta[j] = local[j] - w0[j];
        deltas.push_back(std::move(delta));
      }
      r.unit_local_mean_loss = local_loss / config.threads;
      r.averaged = baseline_combiner(BaselineMode::Average, deltas, w0);
      r.accumulated = baseline_combiner(BaselineMode::Accumulate, deltas, w0);
      r.loss_averaged = toy_loss(data, r.averaged);
      r.loss_accumulated = toy_loss(data, r.accumulated);
      r.dist_accumulated = dist2d(r.accumulated, r.minimizer);
    }

    // (f)-(g): weighted locals and the reweighted combine
    {
      auto ds = ParamDataset::create(toy_elements(data), config.threads, seed);
      declare_sgd_state(ds, sgd, w0);
      RunOptions opts;
      opts.capture_combine_report = true;
      ds.run_iteration(make_sgd_process(sgd, toy_gradient()), config.threads,
                       opts);
      const CombineReport& report = ds.last_combine_report();
      double local_loss = 0.0;
      for (int i = 0; i < config.threads; ++i)
        local_loss += toy_loss(data, report.thread_local_value("w", i));
      r.weighted_local_mean_loss = local_loss / config.threads;
      r.combined = ds.shared_mutable().get_array("w");
      r.loss_combined = toy_loss(data, r.combined);
    }

    result.per_seed.push_back(std::move(r));
  }

  auto med = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : result.per_seed) v.push_back(field(r));
    return median(std::move(v));
  };
  result.median_loss_minimizer =
      med([](const ToySeedResult& r) { return r.loss_minimizer; });
  result.median_loss_sequential =
      med([](const ToySeedResult& r) { return r.loss_sequential; });
  result.median_loss_averaged =
      med([](const ToySeedResult& r) { return r.loss_averaged; });
  result.median_loss_accumulated =
      med([](const ToySeedResult& r) { return r.loss_accumulated; });
  result.median_loss_combined =
      med([](const ToySeedResult& r) { return r.loss_combined; });
  result.median_dist_accumulated =
      med([](const ToySeedResult& r) { return r.dist_accumulated; });
  result.median_dist_start =
      med([](const ToySeedResult& r) { return r.dist_start; });
  return result;
}

std::string ToyResult::to_json_string() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["task"] = "toy";
  j["samples"] = config.samples;
  j["threads"] = config.threads;
  j["replications"] = config.replications;
  j["seed"] = config.base_seed;
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& r : per_seed) {
    seeds.push_back({{"minimizer", r.minimizer},
                     {"sequential", r.sequential},
                     {"averaged", r.averaged},
                     {"accumulated", r.accumulated},
                     {"combined", r.combined},
                     {"loss_minimizer", r.loss_minimizer},
                     {"loss_sequential", r.loss_sequential},
                     {"loss_averaged", r.loss_averaged},
                     {"loss_accumulated", r.loss_accumulated},
                     {"loss_combined", r.loss_combined},
                     {"unit_local_mean_loss", r.unit_local_mean_loss},
                     {"weighted_local_mean_loss", r.weighted_local_mean_loss},
                     {"dist_accumulated", r.dist_accumulated},
                     {"dist_start", r.dist_start}});
  }
  j["per_seed"] = std::move(seeds);
  j["median"] = {{"loss_minimizer", median_loss_minimizer},
                 {"loss_sequential", median_loss_sequential},
                 {"loss_averaged", median_loss_averaged},
                 {"loss_accumulated", median_loss_accumulated},
                 {"loss_combined", median_loss_combined},
                 {"dist_accumulated", median_dist_accumulated},
                 {"dist_start", median_dist_start}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// rate lab
// ---------------------------------------------------------------------------

const RateCell& RateResult::cell(int T, int m, int n) const {
  for (const auto& c : cells)
    if (c.T == T && c.m == m && c.n == n) return c;
  throw UsageError("rate result: no such cell");
}

RateResult rate_experiment(const RateConfig& config) {
  uint64_t total_steps = 0;
  for (int T : config.t_grid)
    for (int m : config.m_grid)
      for (int n : config.n_grid)
        total_steps += uint64_t(T) * m * n * config.trials;
  if (total_steps > config.max_total_steps)
    throw ConfigError("rate: grid needs " + std::to_string(total_steps) +
                      " sample steps, over the budget of " +
                      std::to_string(config.max_total_steps) +
                      "; shrink the grid or the trial count");

  const auto pool = synth_toy(config.pool, config.seed);
  const auto w_star = toy_minimizer(pool);
  const std::vector<double> w0{-1.0, -1.0};

  // curvature diag(2, 0.02): strong convexity lambda = 0.02
  const double lambda = 2.0 * kToyA1;
  SgdOptions sgd;
  sgd.schedule = StepSchedule::inv_t(lambda);
  sgd.step_mode = WeightedStepMode::MEtaT;
  ProjectionBall ball;
  ball.radius = config.ball_radius;
  sgd.projection = ball;

  RateResult result;
  result.config = config;

  for (int T : config.t_grid) {
    for (int m : config.m_grid) {
      for (int n : config.n_grid) {
        auto ds = ParamDataset::create(toy_elements(pool), 1, config.seed);
        declare_sgd_state(ds, sgd, w0);
        const VarStore initial = ds.shared();
        auto process = make_sgd_process(sgd, toy_gradient());
        RunOptions opts;
        opts.draws_per_worker = static_cast<uint32_t>(n);

        double sum = 0.0, sum_sq = 0.0;
        for (int trial = 0; trial < config.trials; ++trial) {
          ds.install_shared(initial);
          for (int k = 0; k < T; ++k) ds.run_iteration(process, m, opts);
          const auto& w = ds.shared_mutable().get_array("w");
          const double d0 = w[0] - w_star[0];
          const double d1 = w[1] - w_star[1];
          const double err = d0 * d0 + d1 * d1;
          sum += err;
          sum_sq += err * err;
        }
        RateCell cell;
        cell.T = T;
        cell.m = m;
        cell.n = n;
        cell.trials = config.trials;
        cell.mse = sum / config.trials;
        const double var =
            std::max(0.0, sum_sq / config.trials - cell.mse * cell.mse);
        cell.std_error = std::sqrt(var / config.trials);
        result.cells.push_back(cell);
      }
    }
  }
  result.slope = loglog_slope(result.cells);
  return result;
}

double loglog_slope(const std::vector<RateCell>& cells) {
  if (cells.size() < 2) throw UsageError("slope needs at least two cells");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(cells.size());
  for (const auto& c : cells) {
    const double x = std::log(double(c.T) * c.m * c.n);
    const double y = std::log(c.mse);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double doubling_ratio(const RateResult& result, const std::string& axis,
                      double min_n_over_m) {
  double log_sum = 0.0;
  int pairs = 0;
  for (const auto& low : result.cells) {
    int T = low.T, m = low.m, n = low.n;
    if (axis == "T")
      T *= 2;
    else if (axis == "m")
      m *= 2;
    else if (axis == "n")
      n *= 2;
    else
      throw UsageError("doubling_ratio: axis must be T, m or n");
    const RateCell* high = nullptr;
    for (const auto& c : result.cells)
      if (c.T == T && c.m == m && c.n == n) high = &c;
    if (!high) continue;
    if (double(low.n) / low.m < min_n_over_m) continue;
    if (double(high->n) / high->m < min_n_over_m) continue;
    log_sum += std::log(high->mse / low.mse);
    ++pairs;
  }
  if (pairs == 0) throw UsageError("doubling_ratio: no eligible cell pairs");
  return std::exp(log_sum / pairs);
}

std::string RateResult::to_json_string() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["task"] = "rate";
  j["seed"] = config.seed;
  j["pool"] = config.pool;
  j["trials"] = config.trials;
  j["slope"] = slope;
  nlohmann::json jc = nlohmann::json::array();
  for (const auto& c : cells)
    jc.push_back({{"T", c.T},
                  {"m", c.m},
                  {"n", c.n},
                  {"mse", c.mse},
                  {"std_error", c.std_error},
                  {"trials", c.trials}});
  j["cells"] = std::move(jc);
  return j.dump(2);
}

std::string RateResult::csv() const {
  std::ostringstream out;
  out << "T,m,n,mse,std_error,trials\n";
  for (const auto& c : cells)
    out << c.T << ',' << c.m << ',' << c.n << ',' << fmt_double(c.mse) << ','
        << fmt_double(c.std_error) << ',' << c.trials << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// task harness
// ---------------------------------------------------------------------------

namespace {

int resolve_threads(const ExperimentConfig& config, bool& auto_mode) {
  auto_mode = config.threads_auto;
  int threads = config.threads;
  if (const char* env = std::getenv("SPLASH_THREADS")) {
    const std::string v(env);
    if (v == "auto") {
      auto_mode = true;
    } else {
      threads = std::atoi(env);
      if (threads < 1)
        throw ConfigError("SPLASH_THREADS must be 'auto' or a positive int");
      auto_mode = false;
    }
  }
  if (auto_mode) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw > 0 ? static_cast<int>(hw) : 2;
  }
  return threads;
}

struct TaskSetup {
  ParamDataset dataset;
  ProcessFn process;
  LossFn tune_loss;                       // per-element loss for the tuner
  std::function<double(ParamDataset&)> metric;  // per-iteration series
  std::string metric_name;
};

TaskSetup setup_lr(const ExperimentConfig& config, uint32_t partitions) {
  LogisticModel model;
  std::vector<LabeledPoint> points;
  if (config.dataset.empty() || config.dataset == "synth") {
    model.dim = static_cast<uint32_t>(config.param_int("dim", 20));
    model.classes = static_cast<uint32_t>(config.param_int("classes", 5));
    points = synth_classification(
        static_cast<size_t>(config.param_int("samples", 2000)), model.dim,
        model.classes, config.seed);
  } else {
    model.dim = static_cast<uint32_t>(config.param_int("dim", 784));
    model.classes = static_cast<uint32_t>(config.param_int("classes", 10));
    const std::string text = read_file_maybe_gzip(config.dataset);
    std::istringstream in(text);
    points = parse_libsvm(in);
    if (points.empty()) throw DataError("lr: dataset has no examples");
  }

  std::vector<Element> elements;
  elements.reserve(points.size());
  for (auto& p : points) elements.emplace_back(std::move(p));

  SgdOptions sgd;
  sgd.schedule = StepSchedule::adagrad(config.param_double("eta0", 0.1));

  TaskSetup setup{
      ParamDataset::create(std::move(elements), partitions, config.seed),
      make_sgd_process(sgd, make_lr_gradient(model)),
      make_lr_loss(model),
      {},
      "train_loss"};
  declare_sgd_state(setup.dataset, sgd,
                    std::vector<double>(model.weight_len(), 0.0));
  LossFn loss = make_lr_loss(model);
  setup.metric = [loss](ParamDataset& ds) { return ds.mean_loss(loss); };
  return setup;
}

TaskSetup setup_cf(const ExperimentConfig& config, uint32_t partitions) {
  CfModel model;
  model.dim = static_cast<uint32_t>(config.param_int("dim", 100));
  model.lambda = config.param_double("lambda", 0.02);
  model.adagrad_eta0 = config.param_double("eta0", 0.1);

  std::vector<RatingTriple> triples;
  if (config.dataset.empty() || config.dataset == "synth") {
    triples = synth_ratings(
        static_cast<uint32_t>(config.param_int("users", 200)),
        static_cast<uint32_t>(config.param_int("items", 100)),
        static_cast<uint32_t>(config.param_int("rank", 5)),
        config.param_double("noise", 0.05),
        static_cast<uint32_t>(config.param_int("ratings_per_user", 30)),
        config.seed);
  } else {
    const std::string text = read_file_maybe_gzip(config.dataset);
    std::istringstream in(text);
    triples = parse_ratings(in);
    if (triples.empty()) throw DataError("cf: dataset has no ratings");
  }

  const auto split =
      split_ratings(triples, config.seed, config.param_double("test_fraction", 0.1));
  uint32_t num_items = 0;
  for (const auto& t : triples) num_items = std::max(num_items, t.item + 1);

  auto bundles = group_ratings_by_user(split.train);
  if (bundles.empty()) throw DataError("cf: no training users after split");

  // test users: observed = their training ratings, held out = test ratings
  std::map<int64_t, CfTestUser> testers;
  for (const auto& t : split.test) {
    testers[t.user].user = t.user;
    testers[t.user].heldout.emplace_back(t.item, t.rating);
  }
  for (const auto& b : bundles) {
    auto it = testers.find(b.user);
    if (it != testers.end()) it->second.observed = b.ratings;
  }
  std::vector<CfTestUser> test_users;
  for (auto& [user, tu] : testers)
    if (!tu.observed.empty()) test_users.push_back(std::move(tu));
  if (test_users.empty())
    throw DataError("cf: no test users with observed ratings");

  std::vector<Element> elements;
  elements.reserve(bundles.size());
  for (auto& b : bundles) elements.emplace_back(std::move(b));

  TaskSetup setup{
      ParamDataset::create(std::move(elements), partitions, config.seed),
      make_cf_process(model),
      {},
      {},
      "test_mse"};
  declare_cf_state(setup.dataset, model, num_items, config.seed);

  setup.tune_loss = [model](VarStore& vars, const Element& e) {
    const auto& bundle = std::get<RatingBundle>(e);
    ItemLookup lookup = [&vars, &model](uint32_t j) {
      return vars.get_array(model.item_key(j));
    };
    const auto u = cf_solve_user(model, bundle.ratings, lookup);
    double mse = 0.0;
    for (const auto& [j, r] : bundle.ratings) {
      const auto vj = lookup(j);
      double pred = 0.0;
      for (uint32_t i = 0; i < model.dim; ++i) pred += u[i] * vj[i];
      mse += (pred - r) * (pred - r);
    }
    return mse / static_cast<double>(bundle.ratings.size());
  };
  setup.metric = [model, test_users](ParamDataset& ds) {
    return cf_predict_loss(model, ds.shared_mutable(), test_users);
  };
  return setup;
}

TaskSetup setup_lda(const ExperimentConfig& config, uint32_t partitions) {
  LdaModel model;
  model.topics = static_cast<uint32_t>(config.param_int("topics", 20));
  model.alpha = config.param_double("alpha", 0.1);
  model.beta = config.param_double("beta", 0.1);
  model.oversample = config.param_int("oversample", 10);

  Corpus corpus;
  if (config.dataset.empty() || config.dataset == "synth") {
    corpus = synth_corpus(
        static_cast<uint32_t>(config.param_int("docs", 220)),
        static_cast<uint32_t>(config.param_int("vocab", 1000)), model.topics,
        static_cast<uint32_t>(config.param_int("tokens_per_doc", 60)),
        config.seed);
  } else {
    const std::string text = read_file_maybe_gzip(config.dataset);
    std::istringstream in(text);
    corpus = parse_bow(in);
  }
  model.vocab = corpus.vocab_size;

  const uint32_t test_docs =
      static_cast<uint32_t>(config.param_int("test_docs", 20));
  const auto split = split_corpus(corpus, test_docs);
  const auto eval_docs = lda_make_test_docs(split.test_docs, config.seed);
  const int foldin = config.param_int("foldin_sweeps", 20);

  auto ds = ParamDataset::create_grouped(
      lda_tokens_from_corpus(split.train),
      [](const Element& e) { return uint64_t(std::get<Token>(e).doc); },
      partitions, config.seed);
  declare_lda_state(ds, model, split.train.num_docs);

  TaskSetup setup{std::move(ds), make_lda_process(model), {}, {},
                  "predictive_loglik"};
  setup.tune_loss = [model](VarStore& vars, const Element& e) {
    // negative log-likelihood of one token under current counts
    const auto& token = std::get<Token>(e);
    const double q = model.scale();
    const double beta_w = model.beta * static_cast<double>(model.vocab);
    const auto& ndk = vars.get_array(model.doc_key(token.doc));
    double doc_total = 0.0;
    for (double v : ndk) doc_total += std::max(v, 0.0) / q;
    double p = 0.0;
    for (uint32_t k = 0; k < model.topics; ++k) {
      const double theta =
          (std::max(ndk[k], 0.0) / q + model.alpha) /
          (doc_total + model.topics * model.alpha);
      const double phi =
          (std::max(vars.get(model.word_topic_key,
                             size_t(token.word) * model.topics + k),
                    0.0) /
               q +
           model.beta) /
          (vars.get(model.topic_key, k) / q + beta_w);
      p += theta * phi;
    }
    return -std::log(std::max(p, 1e-300));
  };
  const uint64_t eval_seed = config.seed;
  setup.metric = [model, eval_docs, foldin, eval_seed](ParamDataset& ds2) {
    return lda_predictive_loglik(model, ds2.shared_mutable(), eval_docs,
                                 eval_seed, foldin);
  };
  return setup;
}

TaskSetup make_setup(const ExperimentConfig& config, uint32_t partitions) {
  if (config.task == "lr") return setup_lr(config, partitions);
  if (config.task == "cf") return setup_cf(config, partitions);
  if (config.task == "lda") return setup_lda(config, partitions);
  throw ConfigError("run_task: task must be lr, cf or lda");
}

}  // namespace

ExperimentResult run_task(const ExperimentConfig& config) {
  validate_config(config);
  bool auto_mode = false;
  const int threads = resolve_threads(config, auto_mode);

  const uint32_t partitions = static_cast<uint32_t>(config.param_int(
      "partitions", std::max(8, 4 * threads)));
  if (!auto_mode && static_cast<uint32_t>(threads) > partitions)
    throw ConfigError("run_task: threads exceed partitions");

  RunOptions opts;
  if (config.weight_policy == "unit") opts.weight_mode = WeightMode::Unit;

  ExperimentResult result;
  result.task = config.task;
  result.seed = config.seed;

  TaskSetup setup = make_setup(config, partitions);

  auto record = [&result](const std::string& name, uint64_t iter, double value,
                          int m) {
    result.metrics.push_back({iter, name, value, m});
  };

  // main series
  {
    AutoTuner tuner(threads);
    for (int iter = 0; iter < config.iterations; ++iter) {
      int m_used = threads;
      if (auto_mode) {
        auto out = tuner.step(setup.dataset, setup.process,
                              setup.tune_loss ? &setup.tune_loss : nullptr,
                              opts);
        m_used = out.m_used;
        if (out.tuned)
          result.tunes.push_back(out.tune);
        else
          result.reports.push_back(out.sync);
      } else {
        result.reports.push_back(
            setup.dataset.run_iteration(setup.process, threads, opts));
      }
      result.m_trajectory.push_back(m_used);
      record(setup.metric_name, iter, setup.metric(setup.dataset), m_used);
    }
  }

  // single-thread baseline for comparison
  if (threads != 1 || auto_mode) {
    TaskSetup baseline = make_setup(config, partitions);
    for (int iter = 0; iter < config.iterations; ++iter) {
      baseline.dataset.run_iteration(baseline.process, 1, opts);
      record("baseline_" + setup.metric_name, iter,
             baseline.metric(baseline.dataset), 1);
    }
  }
  return result;
}

std::string ExperimentResult::to_json_string() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["task"] = task;
  j["seed"] = seed;
  nlohmann::json jm = nlohmann::json::array();
  for (const auto& m : metrics)
    jm.push_back({{"iteration", m.iteration},
                  {"metric", m.metric},
                  {"value", m.value},
                  {"m", m.m}});
  j["metrics"] = std::move(jm);
  j["m_trajectory"] = m_trajectory;
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : reports) jr.push_back(nlohmann::json::parse(r.to_json_string()));
  j["sync_reports"] = std::move(jr);
  nlohmann::json jt = nlohmann::json::array();
  for (const auto& t : tunes) jt.push_back(nlohmann::json::parse(t.to_json_string()));
  j["tune_results"] = std::move(jt);
  return j.dump(2);
}

std::string ExperimentResult::metrics_csv() const {
  std::ostringstream out;
  out << "iteration,metric,value,m\n";
  for (const auto& m : metrics)
    out << m.iteration << ',' << m.metric << ',' << fmt_double(m.value) << ','
        << m.m << '\n';
  return out.str();
}

std::string ExperimentResult::timing_csv() const {
  std::ostringstream out;
  out << "iteration,weight,threads,compute_ms_max,wait_ms_max,combine_ms,"
         "wall_ms\n";
  for (const auto& r : reports) {
    double cmax = 0.0, wmax = 0.0;
    for (const auto& w : r.workers) {
      cmax = std::max(cmax, w.compute_ms);
      wmax = std::max(wmax, w.wait_ms);
    }
    out << r.iteration << ',' << r.weight << ',' << r.threads << ','
        << fmt_double(cmax) << ',' << fmt_double(wmax) << ','
        << fmt_double(r.combine_ms) << ',' << fmt_double(r.wall_ms) << '\n';
  }
  return out.str();
}

void write_experiment_outputs(const ExperimentConfig& config,
                              const ExperimentResult& result) {
  const std::filesystem::path dir =
      config.out_dir.empty() ? "." : config.out_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / (result.task + "_result.json"));
    f << result.to_json_string() << '\n';
  }
  {
    std::ofstream f(dir / "metrics.csv");
    f << result.metrics_csv();
  }
  {
    std::ofstream f(dir / "timing.csv");
    f << result.timing_csv();
  }
}

}  // namespace splash
