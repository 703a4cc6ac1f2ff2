#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "splash/errors.h"

namespace splash {

// One stored value: a scalar, or an array of reals with lazy-multiply
// bookkeeping. For arrays, `global_mult` (V) is the product of all
// multipliers applied to the array and `elem_mult[i]` (Vi) is the product
// already folded into `values[i]`; the reconciled element value is
// values[i] * V / Vi. Multipliers are strictly positive.
struct VarValue {
  enum class Kind : uint8_t { Scalar, Array };

  Kind kind = Kind::Scalar;
  double scalar = 0.0;
  std::vector<double> values;
  double global_mult = 1.0;
  std::vector<double> elem_mult;

  static VarValue make_scalar(double v) {
    VarValue out;
    out.kind = Kind::Scalar;
    out.scalar = v;
    return out;
  }

  static VarValue make_array(std::vector<double> vals) {
    VarValue out;
    out.kind = Kind::Array;
    out.elem_mult.assign(vals.size(), 1.0);
    out.values = std::move(vals);
    return out;
  }
};

// Key-value storage for shared or local variables. A key's kind (scalar vs
// array, and array length) is fixed by define_*; assign_* replaces the value
// wholesale and is the local-variable write path. Array reads reconcile
// lazily; writes to element storage (values[] / elem_mult[]) are counted so
// the O(1) multiply guarantee can be asserted in tests.
class VarStore {
 public:
  bool contains(const std::string& key) const {
    return entries_.find(key) != entries_.end();
  }

  VarValue::Kind kind_of(const std::string& key) const;
  size_t array_size(const std::string& key) const;

  // Declaration: kind and array length are fixed after the first write.
  void define_scalar(const std::string& key, double v);
  void define_array(const std::string& key, std::vector<double> vals);

  // Local-variable style overwrite: replaces the entry, kind may change.
  void assign_scalar(const std::string& key, double v);
  void assign_array(const std::string& key, std::vector<double> vals);

  double get(const std::string& key);
  double get(const std::string& key, size_t index);
  // Reconciles every element and returns the array contents.
  const std::vector<double>& get_array(const std::string& key);

  void add(const std::string& key, double delta);
  void add(const std::string& key, size_t index, double delta);
  void multiply(const std::string& key, double gamma);

  uint64_t element_writes() const { return element_writes_; }

  size_t size() const { return entries_.size(); }
  std::vector<std::string> keys_sorted() const;
  const VarValue& entry(const std::string& key) const;
  const std::unordered_map<std::string, VarValue>& entries() const {
    return entries_;
  }
  void put_entry(const std::string& key, VarValue v) {
    entries_[key] = std::move(v);
  }
  void clear() { entries_.clear(); }

 private:
  VarValue& lookup(const std::string& key);
  const VarValue& lookup(const std::string& key) const;
  void reconcile(VarValue& v, size_t index);

  std::unordered_map<std::string, VarValue> entries_;
  uint64_t element_writes_ = 0;
};

}  // namespace splash
