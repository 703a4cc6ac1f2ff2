#include "splash/transform.h"

#include <cmath>

#include "json.hpp"

namespace splash {

KeyTransform& ThreadTransform::at(const std::string& key, VarValue::Kind kind,
                                  const char* op) {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    KeyTransform t;
    t.kind = kind;
    it = entries_.emplace(key, std::move(t)).first;
  } else if (it->second.kind != kind) {
    throw ShapeError(std::string(op) + ": kind mismatch for '" + key + "'");
  }
  return it->second;
}

void ThreadTransform::compose_add(const std::string& key, VarValue::Kind kind,
                                  std::optional<uint32_t> index,
                                  double delta) {
  KeyTransform& t = at(key, kind, "compose_add");
  if (kind == VarValue::Kind::Scalar) {
    if (index) throw ShapeError("compose_add: index on scalar '" + key + "'");
    t.delta += delta;
  } else {
    if (!index) throw ShapeError("compose_add: array '" + key + "' needs index");
    t.delta_pre[*index] += delta / t.gamma;
  }
}

void ThreadTransform::compose_multiply(const std::string& key,
                                       VarValue::Kind kind, double gamma) {
  if (!std::isfinite(gamma) || gamma <= 0.0)
    throw DomainError("compose_multiply: gamma must be finite and > 0");
  KeyTransform& t = at(key, kind, "compose_multiply");
  t.gamma *= gamma;
  if (kind == VarValue::Kind::Scalar) {
    t.delta *= gamma;
    t.tdelta *= gamma;
  }
  // Arrays: pre-scaled terms are untouched, keeping multiply O(1).
}

void ThreadTransform::compose_delayed(const std::string& key,
                                      VarValue::Kind kind,
                                      std::optional<uint32_t> index,
                                      double tdelta) {
  KeyTransform& t = at(key, kind, "compose_delayed");
  if (kind == VarValue::Kind::Scalar) {
    if (index)
      throw ShapeError("compose_delayed: index on scalar '" + key + "'");
    t.tdelta += tdelta;
  } else {
    if (!index)
      throw ShapeError("compose_delayed: array '" + key + "' needs index");
    t.tdelta_pre[*index] += tdelta / t.gamma;
  }
}

const KeyTransform* ThreadTransform::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

VarStore ThreadTransform::apply(const VarStore& v_old) const {
  std::vector<const ThreadTransform*> one{this};
  return combine(one, v_old);
}

namespace {

const KeyTransform kIdentityScalar{};

KeyTransform identity_of(VarValue::Kind kind) {
  KeyTransform t;
  t.kind = kind;
  return t;
}

}  // namespace

VarStore combine(const std::vector<const ThreadTransform*>& transforms,
                 const VarStore& v_old, CombineReport* report) {
  const size_t m = transforms.size();
  if (m == 0) throw UsageError("combine: need at least one transform");
  const double dm = static_cast<double>(m);

  // Every key a transform touched must exist in v_old.
  for (const ThreadTransform* t : transforms) {
    for (const auto& [key, kt] : t->entries()) {
      if (!v_old.contains(key))
        throw ShapeError("combine: transform touches unknown key '" + key +
                         "'");
      if (v_old.entry(key).kind != kt.kind)
        throw ShapeError("combine: kind mismatch for '" + key + "'");
    }
  }

  VarStore out;
  if (report) {
    report->num_threads = static_cast<int>(m);
    report->keys.clear();
  }

  for (const auto& [key, old_value] : v_old.entries()) {
    CombineReport::KeyEntry entry;
    entry.kind = old_value.kind;

    if (old_value.kind == VarValue::Kind::Scalar) {
      const double v = old_value.scalar;
      double acc = 0.0;
      double tsum = 0.0;
      for (size_t i = 0; i < m; ++i) {
        const KeyTransform* kt = transforms[i]->find(key);
        if (!kt) kt = &kIdentityScalar;
        acc += kt->gamma * v + kt->delta;
        tsum += kt->tdelta;
        if (report) {
          CombineReport::ThreadTerms terms;
          terms.gamma = kt->gamma;
          terms.delta = {kt->delta};
          terms.tdelta = {kt->tdelta};
          entry.threads.push_back(std::move(terms));
        }
      }
      const double v_new = acc / dm + tsum;
      out.define_scalar(key, v_new);
      if (report) {
        entry.v_old = {v};
        entry.v_new = {v_new};
        report->keys.emplace(key, std::move(entry));
      }
      continue;
    }

    // Array key. Reconcile v_old lazily-scaled elements first.
    VarStore scratch;
    scratch.put_entry(key, old_value);
    const std::vector<double> old_vals = scratch.get_array(key);
    const size_t len = old_vals.size();

    std::vector<const KeyTransform*> kts(m);
    const KeyTransform identity_array = identity_of(VarValue::Kind::Array);
    for (size_t i = 0; i < m; ++i) {
      const KeyTransform* kt = transforms[i]->find(key);
      kts[i] = kt ? kt : &identity_array;
      for (const auto& [idx, _] : kts[i]->delta_pre)
        if (idx >= len)
          throw ShapeError("combine: delta index out of bounds for '" + key +
                           "'");
      for (const auto& [idx, _] : kts[i]->tdelta_pre)
        if (idx >= len)
          throw ShapeError("combine: tdelta index out of bounds for '" + key +
                           "'");
    }

    std::vector<double> new_vals(len);
    for (size_t j = 0; j < len; ++j) {
      double acc = 0.0;
      double tsum = 0.0;
      for (size_t i = 0; i < m; ++i) {
        const KeyTransform* kt = kts[i];
        acc += kt->gamma * old_vals[j] +
               kt->delta_at(static_cast<uint32_t>(j));
        tsum += kt->tdelta_at(static_cast<uint32_t>(j));
      }
      new_vals[j] = acc / dm + tsum;
    }

    if (report) {
      entry.v_old = old_vals;
      entry.v_new = new_vals;
      for (size_t i = 0; i < m; ++i) {
        CombineReport::ThreadTerms terms;
        terms.gamma = kts[i]->gamma;
        terms.delta.resize(len, 0.0);
        terms.tdelta.resize(len, 0.0);
        for (const auto& [idx, pre] : kts[i]->delta_pre)
          terms.delta[idx] = kts[i]->gamma * pre;
        for (const auto& [idx, pre] : kts[i]->tdelta_pre)
          terms.tdelta[idx] = kts[i]->gamma * pre;
        entry.threads.push_back(std::move(terms));
      }
      report->keys.emplace(key, std::move(entry));
    }
    out.define_array(key, std::move(new_vals));
  }
  return out;
}

std::vector<double> CombineReport::thread_local_value(const std::string& key,
                                                      size_t thread) const {
  auto it = keys.find(key);
  if (it == keys.end())
    throw MissingKeyError("combine report has no key '" + key + "'");
  const KeyEntry& e = it->second;
  if (thread >= e.threads.size())
    throw UsageError("combine report: thread index out of range");
  const ThreadTerms& t = e.threads[thread];
  std::vector<double> out(e.v_old.size());
  for (size_t j = 0; j < out.size(); ++j)
    out[j] = t.gamma * e.v_old[j] + t.delta[j] + t.tdelta[j];
  return out;
}

std::string CombineReport::to_json_string() const {
  nlohmann::json j;
  j["num_threads"] = num_threads;
  j["sequential_fast_path"] = sequential_fast_path;
  nlohmann::json jk = nlohmann::json::object();
  for (const auto& [key, e] : keys) {
    nlohmann::json je;
    je["kind"] = e.kind == VarValue::Kind::Scalar ? "scalar" : "array";
    je["v_old"] = e.v_old;
    je["v_new"] = e.v_new;
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& t : e.threads) {
      jt.push_back({{"gamma", t.gamma},
                    {"delta", t.delta},
                    {"tdelta", t.tdelta}});
    }
    je["threads"] = std::move(jt);
    jk[key] = std::move(je);
  }
  j["keys"] = std::move(jk);
  return j.dump();
}

}  // namespace splash
