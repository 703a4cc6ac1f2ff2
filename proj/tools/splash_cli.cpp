// Command-line frontend: the strategy-comparison toy experiment, the
// convergence-rate lab, desk-scale training tasks with fixed or auto-tuned
// thread counts, and format checks for the supported dataset files.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "splash/bench.h"
#include "splash/dataio.h"
#include "splash/errors.h"

namespace {

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void info(const std::string& msg) {
  if (g_log_level >= 1) std::cerr << msg << '\n';
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::create_directories(path.parent_path().empty()
                                          ? "."
                                          : path.parent_path());
  std::ofstream f(path);
  if (!f) throw splash::DataError("cannot write " + path.string());
  f << body;
}

struct CliFlags {
  std::string config_path;
  std::string dataset;
  std::string format;
  std::string out = ".";
  std::string threads;
  uint64_t seed = 0;
  int iterations = 0;
};

splash::ExperimentConfig build_config(const CLI::App* cmd,
                                      const CliFlags& flags,
                                      const std::string& task) {
  splash::ExperimentConfig config;
  if (!flags.config_path.empty())
    config = splash::load_config_file(flags.config_path);
  config.task = task;
  if (cmd->count("--seed")) config.seed = flags.seed;
  if (cmd->count("--iterations"))
    splash::apply_config_entry(config, "iterations",
                               std::to_string(flags.iterations));
  if (cmd->count("--threads"))
    splash::apply_config_entry(config, "threads", flags.threads);
  if (cmd->count("--dataset")) config.dataset = flags.dataset;
  if (cmd->count("--format")) config.format = flags.format;
  if (cmd->count("--out") || config.out_dir.empty())
    config.out_dir = flags.out;
  return config;
}

void add_common_flags(CLI::App* cmd, CliFlags& flags) {
  cmd->add_option("--config", flags.config_path, "config file (key = value)");
  cmd->add_option("--seed", flags.seed, "random seed");
  cmd->add_option("--threads", flags.threads, "thread count or 'auto'");
  cmd->add_option("--iterations", flags.iterations, "iterations to run");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--dataset", flags.dataset, "dataset path or 'synth'");
  cmd->add_option("--format", flags.format, "libsvm | ratings | bow");
}

int run_toy(const splash::ExperimentConfig& config) {
  splash::ToyConfig toy;
  toy.base_seed = config.seed;
  toy.samples = size_t(config.param_int("samples", 3000));
  toy.replications = config.param_int("replications", 50);
  if (!config.threads_auto && config.threads > 1) toy.threads = config.threads;
  info("toy: " + std::to_string(toy.replications) + " replications of " +
       std::to_string(toy.samples) + " samples on " +
       std::to_string(toy.threads) + " threads");
  const auto result = splash::toy_experiment(toy);
  write_file(std::filesystem::path(config.out_dir) / "toy_result.json",
             result.to_json_string() + "\n");
  info("toy: median losses  minimizer " +
       std::to_string(result.median_loss_minimizer) + "  sequential " +
       std::to_string(result.median_loss_sequential) + "  combine " +
       std::to_string(result.median_loss_combined) + "  average " +
       std::to_string(result.median_loss_averaged) + "  accumulate " +
       std::to_string(result.median_loss_accumulated));
  return 0;
}

int run_rate(const splash::ExperimentConfig& config) {
  splash::RateConfig rate;
  rate.seed = config.seed;
  rate.trials = config.param_int("trials", 300);
  rate.pool = size_t(config.param_int("pool", 1000));
  rate.ball_radius = config.param_double("ball_radius", 10.0);
  rate.t_grid = config.param_int_list("t_grid", rate.t_grid);
  rate.m_grid = config.param_int_list("m_grid", rate.m_grid);
  rate.n_grid = config.param_int_list("n_grid", rate.n_grid);
  info("rate: " + std::to_string(rate.t_grid.size() * rate.m_grid.size() *
                                 rate.n_grid.size()) +
       " cells x " + std::to_string(rate.trials) + " trials");
  const auto result = splash::rate_experiment(rate);
  write_file(std::filesystem::path(config.out_dir) / "rate_result.json",
             result.to_json_string() + "\n");
  write_file(std::filesystem::path(config.out_dir) / "rate_cells.csv",
             result.csv());
  info("rate: log-log slope " + std::to_string(result.slope));
  return 0;
}

int run_run(const splash::ExperimentConfig& config) {
  const auto result = splash::run_task(config);
  splash::write_experiment_outputs(config, result);
  if (!result.metrics.empty())
    info(config.task + ": final " + result.metrics.back().metric + " = " +
         std::to_string(result.metrics.back().value));
  return 0;
}

int run_tune(splash::ExperimentConfig config) {
  config.threads_auto = true;
  const auto result = splash::run_task(config);
  splash::write_experiment_outputs(config, result);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : result.tunes)
    j.push_back(nlohmann::json::parse(t.to_json_string()));
  write_file(std::filesystem::path(config.out_dir) / "tune_result.json",
             j.dump(2) + "\n");
  info("tune: m trajectory length " +
       std::to_string(result.m_trajectory.size()));
  return 0;
}

int run_parse_check(const std::string& format, const std::string& path,
                    const std::string& out) {
  const std::string text = splash::read_file_maybe_gzip(path);
  std::istringstream in(text);
  std::ostringstream canon;
  if (format == "libsvm") {
    const auto points = splash::parse_libsvm(in);
    splash::write_libsvm(canon, points);
    info("libsvm: " + std::to_string(points.size()) + " records");
  } else if (format == "ratings") {
    const auto triples = splash::parse_ratings(in);
    splash::write_ratings(canon, triples);
    info("ratings: " + std::to_string(triples.size()) + " records");
  } else if (format == "bow") {
    const auto corpus = splash::parse_bow(in);
    splash::write_bow(canon, corpus);
    info("bow: " + std::to_string(corpus.triples.size()) + " triples, " +
         std::to_string(corpus.num_docs) + " docs");
  } else {
    throw splash::ConfigError("parse-check: format must be libsvm, ratings "
                              "or bow");
  }
  if (!out.empty()) write_file(out, canon.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-machine engine for parallelizing stochastic "
               "algorithms via weighted samples and reweighted combining"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "quiet | info | debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));

  CliFlags toy_flags, rate_flags, run_flags, tune_flags;

  auto* toy_cmd = app.add_subcommand("toy", "strategy comparison experiment");
  add_common_flags(toy_cmd, toy_flags);

  auto* rate_cmd =
      app.add_subcommand("rate", "convergence-rate Monte Carlo lab");
  add_common_flags(rate_cmd, rate_flags);

  auto* run_cmd = app.add_subcommand("run", "train a built-in algorithm");
  std::string run_task_name;
  run_cmd->add_option("task", run_task_name, "lr | cf | lda")
      ->required()
      ->check(CLI::IsMember({"lr", "cf", "lda"}));
  add_common_flags(run_cmd, run_flags);

  auto* tune_cmd =
      app.add_subcommand("tune", "train with auto-tuned thread count");
  std::string tune_task_name;
  tune_cmd->add_option("task", tune_task_name, "lr | cf | lda")
      ->required()
      ->check(CLI::IsMember({"lr", "cf", "lda"}));
  add_common_flags(tune_cmd, tune_flags);

  auto* parse_cmd = app.add_subcommand("parse-check",
                                       "validate and canonicalize a dataset");
  std::string pc_format, pc_input, pc_out;
  parse_cmd->add_option("--format", pc_format, "libsvm | ratings | bow")
      ->required();
  parse_cmd->add_option("input", pc_input, "input file")->required();
  parse_cmd->add_option("--out", pc_out, "canonical output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }

  g_log_level = log_level == "quiet" ? 0 : log_level == "info" ? 1 : 2;

  try {
    if (toy_cmd->parsed()) return run_toy(build_config(toy_cmd, toy_flags, "toy"));
    if (rate_cmd->parsed())
      return run_rate(build_config(rate_cmd, rate_flags, "rate"));
    if (run_cmd->parsed())
      return run_run(build_config(run_cmd, run_flags, run_task_name));
    if (tune_cmd->parsed())
      return run_tune(build_config(tune_cmd, tune_flags, tune_task_name));
    if (parse_cmd->parsed()) return run_parse_check(pc_format, pc_input, pc_out);
  } catch (const splash::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const splash::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const splash::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
