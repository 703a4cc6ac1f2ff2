#include "splash/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace splash {

namespace {

const std::set<std::string> kCoreKeys = {
    "task",   "dataset",       "format", "seed",
    "threads", "iterations",   "weight_policy", "out",
};

// Task hyperparameters. One flat namespace, documented in the README.
const std::set<std::string> kParamKeys = {
    // toy
    "samples", "replications",
    // rate
    "pool", "trials", "t_grid", "m_grid", "n_grid", "ball_radius",
    // shared model keys
    "partitions", "eta0", "lambda", "dim", "classes",
    // cf synth
    "users", "items", "rank", "noise", "ratings_per_user", "test_fraction",
    // lda
    "topics", "vocab", "alpha", "beta", "oversample", "docs",
    "tokens_per_doc", "test_docs", "foldin_sweeps",
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

double ExperimentConfig::param_double(const std::string& key,
                                      double fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  double v;
  auto [p, ec] =
      std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || p != it->second.data() + it->second.size() ||
      !std::isfinite(v))
    throw ConfigError("config: bad numeric value for '" + key + "'");
  return v;
}

int ExperimentConfig::param_int(const std::string& key, int fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  int v;
  auto [p, ec] =
      std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || p != it->second.data() + it->second.size())
    throw ConfigError("config: bad integer value for '" + key + "'");
  return v;
}

std::string ExperimentConfig::param_str(const std::string& key,
                                        const std::string& fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::vector<int> ExperimentConfig::param_int_list(
    const std::string& key, const std::vector<int>& fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::vector<int> out;
  std::stringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    int v;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || v < 1)
      throw ConfigError("config: bad list value for '" + key + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
  return out;
}

void apply_config_entry(ExperimentConfig& config, const std::string& raw_key,
                        const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key.empty()) throw ConfigError("config: empty key");

  if (kCoreKeys.count(key)) {
    if (key == "task") {
      config.task = value;
    } else if (key == "dataset") {
      config.dataset = value;
    } else if (key == "format") {
      config.format = value;
    } else if (key == "out") {
      config.out_dir = value;
    } else if (key == "seed") {
      uint64_t v;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size())
        throw ConfigError("config: bad seed '" + value + "'");
      config.seed = v;
    } else if (key == "iterations") {
      int v;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size() || v < 1)
        throw ConfigError("config: iterations must be a positive integer");
      config.iterations = v;
    } else if (key == "threads") {
      if (value == "auto") {
        config.threads_auto = true;
      } else {
        int v;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || p != value.data() + value.size() || v < 1)
          throw ConfigError("config: threads must be 'auto' or >= 1");
        config.threads = v;
        config.threads_auto = false;
      }
    } else if (key == "weight_policy") {
      if (value != "reweighted" && value != "unit")
        throw ConfigError("config: weight_policy must be reweighted or unit");
      config.weight_policy = value;
    }
    return;
  }

  if (kParamKeys.count(key)) {
    config.params[key] = value;
    return;
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  ExperimentConfig config;
  std::string line;
  size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " +
                        std::to_string(line_no));
    apply_config_entry(config, t.substr(0, eq), t.substr(eq + 1));
  }
  return config;
}

void validate_config(const ExperimentConfig& config) {
  static const std::set<std::string> tasks = {"toy", "rate", "lr", "cf",
                                              "lda"};
  if (!tasks.count(config.task))
    throw ConfigError("config: task must be one of toy, rate, lr, cf, lda");
  if (!config.format.empty() && config.format != "libsvm" &&
      config.format != "ratings" && config.format != "bow")
    throw ConfigError("config: format must be libsvm, ratings or bow");
  if (config.iterations < 1)
    throw ConfigError("config: iterations must be >= 1");
  if (!config.threads_auto && config.threads < 1)
    throw ConfigError("config: threads must be >= 1");
}

}  // namespace splash
