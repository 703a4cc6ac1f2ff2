#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "splash/errors.h"

namespace splash {

// Sparse feature vector: (index, value) pairs with strictly increasing
// indices and finite values. Indices are 0-based everywhere inside the
// library; parsers normalize from their format's convention.
struct SparseVector {
  std::vector<std::pair<uint32_t, double>> entries;

  double dot_dense(const std::vector<double>& w, size_t offset = 0) const {
    double s = 0.0;
    for (const auto& [i, v] : entries) s += w[offset + i] * v;
    return s;
  }
  bool operator==(const SparseVector&) const = default;
};

// Classification example for the multiclass logistic task.
struct LabeledPoint {
  SparseVector x;
  int32_t label = 0;
  bool operator==(const LabeledPoint&) const = default;
};

// One user's training ratings: the per-user summand of the marginal
// collaborative-filtering objective.
struct RatingBundle {
  int64_t user = 0;
  std::vector<std::pair<uint32_t, double>> ratings;  // (item, rating)
  bool operator==(const RatingBundle&) const = default;
};

// A word occurrence group for topic modeling: `count` occurrences of `word`
// in `doc`, both 0-based.
struct Token {
  uint32_t doc = 0;
  uint32_t word = 0;
  uint32_t count = 1;
  bool operator==(const Token&) const = default;
};

// The engine treats elements as opaque payloads; this variant covers the
// built-in algorithms plus plain numeric payloads for generic use.
using Element =
    std::variant<double, std::vector<double>, LabeledPoint, RatingBundle,
                 Token>;

}  // namespace splash
