#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "splash/sample.h"
#include "splash/transform.h"
#include "splash/varset.h"

namespace splash {

// A worker's view of the shared variables: a replica store plus the three
// operators. When a recorder is attached, every add/multiply is composed
// into the worker's ThreadTransform; delayed adds are queued on the sample
// currently being processed, scaled by 1/weight at declaration time.
class SharedVars {
 public:
  explicit SharedVars(VarStore store, ThreadTransform* recorder = nullptr)
      : store_(std::move(store)), recorder_(recorder) {}

  double get(const std::string& key) { return store_.get(key); }
  double get(const std::string& key, size_t index) {
    return store_.get(key, index);
  }
  const std::vector<double>& get_array(const std::string& key) {
    return store_.get_array(key);
  }
  bool contains(const std::string& key) const { return store_.contains(key); }

  void add(const std::string& key, double delta) {
    store_.add(key, delta);
    if (recorder_)
      recorder_->compose_add(key, VarValue::Kind::Scalar, std::nullopt, delta);
  }

  void add(const std::string& key, size_t index, double delta) {
    store_.add(key, index, delta);
    if (recorder_)
      recorder_->compose_add(key, VarValue::Kind::Array,
                             static_cast<uint32_t>(index), delta);
  }

  void multiply(const std::string& key, double gamma) {
    store_.multiply(key, gamma);
    if (recorder_)
      recorder_->compose_multiply(key, store_.kind_of(key), gamma);
  }

  void delayed_add(const std::string& key, double delta) {
    enqueue_delayed(key, std::nullopt, delta);
  }
  void delayed_add(const std::string& key, size_t index, double delta) {
    enqueue_delayed(key, static_cast<uint32_t>(index), delta);
  }

  // Engine hooks around one sample's processing window.
  void begin_sample(WeightedSample* sample, int weight) {
    current_ = sample;
    weight_ = weight;
  }
  void end_sample() { current_ = nullptr; }

  // Executes a drained pending op: applies it to the replica and records it
  // as a delayed term (the T part of the thread transform).
  void execute_delayed(const PendingOp& op) {
    if (op.index) {
      store_.add(op.key, *op.index, op.delta);
      if (recorder_)
        recorder_->compose_delayed(op.key, VarValue::Kind::Array, op.index,
                                   op.delta);
    } else {
      store_.add(op.key, op.delta);
      if (recorder_)
        recorder_->compose_delayed(op.key, VarValue::Kind::Scalar,
                                   std::nullopt, op.delta);
    }
  }

  VarStore& store() { return store_; }
  const VarStore& store() const { return store_; }
  ThreadTransform* recorder() { return recorder_; }

 private:
  void enqueue_delayed(const std::string& key, std::optional<uint32_t> index,
                       double delta) {
    if (!current_)
      throw UsageError("delayed_add: no sample is being processed");
    if (!std::isfinite(delta))
      throw NumericError("delayed_add: delta must be finite");
    // Validate target now so bad keys fail at declaration, not next pass.
    const VarValue::Kind kind = store_.kind_of(key);
    if (index) {
      if (kind != VarValue::Kind::Array)
        throw ShapeError("delayed_add: index given but '" + key +
                         "' is a scalar");
      if (*index >= store_.array_size(key))
        throw ShapeError("delayed_add: index out of bounds for '" + key + "'");
    } else if (kind != VarValue::Kind::Scalar) {
      throw ShapeError("delayed_add: array '" + key + "' needs an index");
    }
    current_->pending.push_back(
        PendingOp{key, index, delta / static_cast<double>(weight_)});
  }

  VarStore store_;
  ThreadTransform* recorder_ = nullptr;
  WeightedSample* current_ = nullptr;
  int weight_ = 1;
};

// Handle to the current sample's local variables. Valid only inside the
// owning sample's processing window; the engine toggles the guard.
class LocalVars {
 public:
  LocalVars() = default;

  void bind(VarStore* store) { store_ = store; }
  void unbind() { store_ = nullptr; }
  bool active() const { return store_ != nullptr; }

  bool has(const std::string& key) const {
    return checked().contains(key);
  }
  double get(const std::string& key) { return checked().get(key); }
  const std::vector<double>& get_array(const std::string& key) {
    return checked().get_array(key);
  }
  void set(const std::string& key, double v) { checked().assign_scalar(key, v); }
  void set(const std::string& key, std::vector<double> v) {
    checked().assign_array(key, std::move(v));
  }

 private:
  VarStore& checked() {
    if (!store_)
      throw UsageError("local variables accessed outside processing window");
    return *store_;
  }
  const VarStore& checked() const {
    if (!store_)
      throw UsageError("local variables accessed outside processing window");
    return *store_;
  }

  VarStore* store_ = nullptr;
};

}  // namespace splash
