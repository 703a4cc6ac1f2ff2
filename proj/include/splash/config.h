#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "splash/errors.h"

namespace splash {

// Parsed experiment configuration. Config files are flat "key = value" text
// with '#' comments; unknown keys are fatal. CLI flags override file values;
// the SPLASH_THREADS environment variable overrides both.
struct ExperimentConfig {
  std::string task;       // toy | rate | lr | cf | lda
  std::string dataset;    // file path, or "synth" for the built-in generator
  std::string format;     // libsvm | ratings | bow
  uint64_t seed = 1;
  int iterations = 10;
  int threads = 1;
  bool threads_auto = false;
  std::string weight_policy = "reweighted";  // reweighted | unit
  std::string out_dir;

  // task-specific hyperparameters, validated against the documented schema
  std::map<std::string, std::string> params;

  double param_double(const std::string& key, double fallback) const;
  int param_int(const std::string& key, int fallback) const;
  std::string param_str(const std::string& key,
                        const std::string& fallback) const;
  std::vector<int> param_int_list(const std::string& key,
                                  const std::vector<int>& fallback) const;
};

ExperimentConfig load_config_file(const std::string& path);

// Applies one key/value pair (also used for CLI overrides). Throws
// ConfigError for unknown keys or malformed values.
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

// Validates cross-field constraints for the chosen task.
void validate_config(const ExperimentConfig& config);

}  // namespace splash
