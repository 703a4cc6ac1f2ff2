#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "splash/varset.h"

namespace splash {

// Per-variable record of one worker's composed operations, representing the
// linear map v <- gamma * v + delta + tdelta. Scalars compose eagerly:
//   add d:        delta += d
//   multiply g:   gamma *= g; delta *= g; tdelta *= g
//   delayed t:    tdelta += t
// Arrays keep delta/tdelta divided by the current gamma ("pre-scaled") so a
// whole-array multiply only touches gamma; the true terms are materialized
// as gamma * stored on read.
struct KeyTransform {
  VarValue::Kind kind = VarValue::Kind::Scalar;
  double gamma = 1.0;
  double delta = 0.0;
  double tdelta = 0.0;
  std::unordered_map<uint32_t, double> delta_pre;
  std::unordered_map<uint32_t, double> tdelta_pre;

  double delta_at(uint32_t i) const {
    auto it = delta_pre.find(i);
    return it == delta_pre.end() ? 0.0 : gamma * it->second;
  }
  double tdelta_at(uint32_t i) const {
    auto it = tdelta_pre.find(i);
    return it == tdelta_pre.end() ? 0.0 : gamma * it->second;
  }
};

struct CombineReport;

// One worker's transform for all shared variables it touched during an
// iteration. Untouched keys are implicitly the identity (gamma=1, 0, 0).
class ThreadTransform {
 public:
  void compose_add(const std::string& key, VarValue::Kind kind,
                   std::optional<uint32_t> index, double delta);
  void compose_multiply(const std::string& key, VarValue::Kind kind,
                        double gamma);
  void compose_delayed(const std::string& key, VarValue::Kind kind,
                       std::optional<uint32_t> index, double tdelta);

  // Applies the composed map to every key of v_old; keys the transform never
  // touched pass through unchanged.
  VarStore apply(const VarStore& v_old) const;

  const KeyTransform* find(const std::string& key) const;
  bool empty() const { return entries_.empty(); }
  const std::unordered_map<std::string, KeyTransform>& entries() const {
    return entries_;
  }

  static double apply_scalar(const KeyTransform& t, double v) {
    return t.gamma * v + t.delta + t.tdelta;
  }

 private:
  KeyTransform& at(const std::string& key, VarValue::Kind kind,
                   const char* op);

  std::unordered_map<std::string, KeyTransform> entries_;
};

// Snapshot of one combine step, sufficient to reproduce v_new from the
// per-thread (gamma, delta, tdelta) terms. Serializable to JSON for the
// bench harness.
struct CombineReport {
  struct ThreadTerms {
    double gamma = 1.0;
    std::vector<double> delta;   // length 1 for scalars
    std::vector<double> tdelta;  // length 1 for scalars
  };
  struct KeyEntry {
    VarValue::Kind kind = VarValue::Kind::Scalar;
    std::vector<double> v_old;
    std::vector<double> v_new;
    std::vector<ThreadTerms> threads;
  };
  int num_threads = 0;
  bool sequential_fast_path = false;
  std::unordered_map<std::string, KeyEntry> keys;

  // Reconstructs thread i's local end-of-iteration value for a key:
  // gamma_i * v_old + delta_i + tdelta_i.
  std::vector<double> thread_local_value(const std::string& key,
                                         size_t thread) const;
  std::string to_json_string() const;
};

// The global update: v_new = (1/m) * sum_i(gamma_i * v_old + delta_i)
//                            + sum_i tdelta_i,
// evaluated per key/index with the thread sum taken in ascending thread
// order. Transforms missing a key contribute the identity. m = 1 reduces
// exactly to apply().
VarStore combine(const std::vector<const ThreadTransform*>& transforms,
                 const VarStore& v_old, CombineReport* report = nullptr);

}  // namespace splash
