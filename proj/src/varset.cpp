#include "splash/varset.h"

#include <algorithm>
#include <cmath>

namespace splash {

namespace {

void check_finite_delta(double delta) {
  if (!std::isfinite(delta)) throw NumericError("add: delta must be finite");
}

}  // namespace

VarValue::Kind VarStore::kind_of(const std::string& key) const {
  return lookup(key).kind;
}

size_t VarStore::array_size(const std::string& key) const {
  const VarValue& v = lookup(key);
  if (v.kind != VarValue::Kind::Array)
    throw ShapeError("array_size: '" + key + "' is a scalar");
  return v.values.size();
}

void VarStore::define_scalar(const std::string& key, double v) {
  if (key.empty()) throw UsageError("variable keys must be nonempty");
  if (!std::isfinite(v)) throw NumericError("define_scalar: value not finite");
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    if (it->second.kind != VarValue::Kind::Scalar)
      throw ShapeError("'" + key + "' is already an array");
    it->second.scalar = v;
    return;
  }
  entries_.emplace(key, VarValue::make_scalar(v));
}

void VarStore::define_array(const std::string& key, std::vector<double> vals) {
  if (key.empty()) throw UsageError("variable keys must be nonempty");
  for (double v : vals)
    if (!std::isfinite(v)) throw NumericError("define_array: value not finite");
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    if (it->second.kind != VarValue::Kind::Array)
      throw ShapeError("'" + key + "' is already a scalar");
    if (it->second.values.size() != vals.size())
      throw ShapeError("'" + key + "' length is fixed at " +
                       std::to_string(it->second.values.size()));
    it->second = VarValue::make_array(std::move(vals));
    element_writes_ += it->second.values.size();
    return;
  }
  element_writes_ += vals.size();
  entries_.emplace(key, VarValue::make_array(std::move(vals)));
}

void VarStore::assign_scalar(const std::string& key, double v) {
  if (key.empty()) throw UsageError("variable keys must be nonempty");
  entries_[key] = VarValue::make_scalar(v);
}

void VarStore::assign_array(const std::string& key, std::vector<double> vals) {
  if (key.empty()) throw UsageError("variable keys must be nonempty");
  element_writes_ += vals.size();
  entries_[key] = VarValue::make_array(std::move(vals));
}

VarValue& VarStore::lookup(const std::string& key) {
  auto it = entries_.find(key);
  if (it == entries_.end())
    throw MissingKeyError("unknown variable '" + key + "'");
  return it->second;
}

const VarValue& VarStore::lookup(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end())
    throw MissingKeyError("unknown variable '" + key + "'");
  return it->second;
}

const VarValue& VarStore::entry(const std::string& key) const {
  return lookup(key);
}

void VarStore::reconcile(VarValue& v, size_t index) {
  if (v.elem_mult[index] != v.global_mult) {
    v.values[index] *= v.global_mult / v.elem_mult[index];
    v.elem_mult[index] = v.global_mult;
    element_writes_ += 2;
  }
}

double VarStore::get(const std::string& key) {
  VarValue& v = lookup(key);
  if (v.kind != VarValue::Kind::Scalar)
    throw ShapeError("get: '" + key + "' is an array, index required");
  return v.scalar;
}

double VarStore::get(const std::string& key, size_t index) {
  VarValue& v = lookup(key);
  if (v.kind != VarValue::Kind::Array)
    throw ShapeError("get: index given but '" + key + "' is a scalar");
  if (index >= v.values.size())
    throw ShapeError("get: index " + std::to_string(index) +
                     " out of bounds for '" + key + "'");
  reconcile(v, index);
  return v.values[index];
}

const std::vector<double>& VarStore::get_array(const std::string& key) {
  VarValue& v = lookup(key);
  if (v.kind != VarValue::Kind::Array)
    throw ShapeError("get_array: '" + key + "' is a scalar");
  for (size_t i = 0; i < v.values.size(); ++i) reconcile(v, i);
  return v.values;
}

void VarStore::add(const std::string& key, double delta) {
  check_finite_delta(delta);
  VarValue& v = lookup(key);
  if (v.kind != VarValue::Kind::Scalar)
    throw ShapeError("add: '" + key + "' is an array, index required");
  v.scalar += delta;
}

void VarStore::add(const std::string& key, size_t index, double delta) {
  check_finite_delta(delta);
  VarValue& v = lookup(key);
  if (v.kind != VarValue::Kind::Array)
    throw ShapeError("add: index given but '" + key + "' is a scalar");
  if (index >= v.values.size())
    throw ShapeError("add: index " + std::to_string(index) +
                     " out of bounds for '" + key + "'");
  reconcile(v, index);
  v.values[index] += delta;
  element_writes_ += 1;
}

void VarStore::multiply(const std::string& key, double gamma) {
  if (!std::isfinite(gamma) || gamma <= 0.0)
    throw DomainError("multiply: gamma must be finite and > 0");
  VarValue& v = lookup(key);
  if (v.kind == VarValue::Kind::Scalar) {
    v.scalar *= gamma;
  } else {
    // Lazy scheme: only the global multiplier moves; elements are untouched.
    v.global_mult *= gamma;
  }
}

std::vector<std::string> VarStore::keys_sorted() const {
  std::vector<std::string> keys;
  keys.reserve(entries_.size());
  for (const auto& [k, _] : entries_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace splash
