#pragma once

#include <cstdint>
#include <string>

#include "splash/engine.h"
#include "splash/sgd.h"

namespace splash {

// Multiclass logistic regression on sparse features. Weights for the K
// classes live in one shared array of length classes * dim, block k at
// offset k * dim.
struct LogisticModel {
  uint32_t dim = 784;
  uint32_t classes = 10;
  std::string weight_key = "w";

  size_t weight_len() const {
    return static_cast<size_t>(dim) * classes;
  }
};

// -<w_y, x> + log sum_k exp<w_k, x>, computed with max subtraction.
double lr_loss(const LogisticModel& model, VarStore& vars, const Element& elem);

// Gradient blocks (softmax_k - 1{k=y}) x, sparse on the support of x.
SparseGrad lr_gradient(const LogisticModel& model, const Element& elem,
                       WeightsView& w);

GradientFn make_lr_gradient(LogisticModel model);
LossFn make_lr_loss(LogisticModel model);

}  // namespace splash
