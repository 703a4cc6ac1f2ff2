#include "splash/logistic.h"

#include <algorithm>
#include <cmath>

namespace splash {

namespace {

const LabeledPoint& as_point(const Element& elem) {
  const auto* lp = std::get_if<LabeledPoint>(&elem);
  if (!lp) throw DataError("logistic regression expects labeled points");
  return *lp;
}

void check_example(const LogisticModel& model, const LabeledPoint& p) {
  if (p.label < 0 || static_cast<uint32_t>(p.label) >= model.classes)
    throw DataError("label " + std::to_string(p.label) + " out of range [0, " +
                    std::to_string(model.classes) + ")");
  for (const auto& [i, _] : p.x.entries)
    if (i >= model.dim)
      throw DataError("feature index " + std::to_string(i) +
                      " out of range for dim " + std::to_string(model.dim));
}

}  // namespace

double lr_loss(const LogisticModel& model, VarStore& vars,
               const Element& elem) {
  const LabeledPoint& p = as_point(elem);
  check_example(model, p);

  std::vector<double> scores(model.classes, 0.0);
  for (uint32_t k = 0; k < model.classes; ++k) {
    const size_t offset = static_cast<size_t>(k) * model.dim;
    double s = 0.0;
    for (const auto& [i, v] : p.x.entries)
      s += vars.get(model.weight_key, offset + i) * v;
    scores[k] = s;
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - mx);
  return -scores[p.label] + mx + std::log(sum);
}

SparseGrad lr_gradient(const LogisticModel& model, const Element& elem,
                       WeightsView& w) {
  const LabeledPoint& p = as_point(elem);
  check_example(model, p);

  std::vector<double> scores(model.classes, 0.0);
  for (uint32_t k = 0; k < model.classes; ++k) {
    const size_t offset = static_cast<size_t>(k) * model.dim;
    double s = 0.0;
    for (const auto& [i, v] : p.x.entries) s += w[offset + i] * v;
    scores[k] = s;
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);

  SparseGrad grad;
  grad.reserve(p.x.entries.size() * model.classes);
  for (uint32_t k = 0; k < model.classes; ++k) {
    const double softmax = std::exp(scores[k] - mx) / z;
    const double coef =
        softmax - (k == static_cast<uint32_t>(p.label) ? 1.0 : 0.0);
    const size_t offset = static_cast<size_t>(k) * model.dim;
    for (const auto& [i, v] : p.x.entries)
      grad.emplace_back(static_cast<uint32_t>(offset + i), coef * v);
  }
  return grad;
}

GradientFn make_lr_gradient(LogisticModel model) {
  return [model](const Element& elem, WeightsView& w) {
    return lr_gradient(model, elem, w);
  };
}

LossFn make_lr_loss(LogisticModel model) {
  return [model](VarStore& vars, const Element& elem) {
    return lr_loss(model, vars, elem);
  };
}

}  // namespace splash
