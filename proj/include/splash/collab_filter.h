#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "splash/engine.h"

namespace splash {

// Collaborative filtering by SGD on the marginal objective over item
// vectors: each processed element is one user's rating bundle; the user
// vector is the exact ridge solve against the current item vectors, and each
// rated item takes one AdaGrad-scaled envelope-gradient step.
struct CfModel {
  uint32_t dim = 100;
  double lambda = 0.02;
  double adagrad_eta0 = 0.1;
  double adagrad_eps = 1e-8;

  std::string item_key(uint32_t j) const { return "v:" + std::to_string(j); }
  std::string acc_key(uint32_t j) const { return "acc:" + std::to_string(j); }
};

using ItemLookup = std::function<std::vector<double>(uint32_t)>;

// u* = argmin_u sum_j (<u, v_j> - r_j)^2 + lambda ||u||^2 via the d x d
// normal equations.
std::vector<double> cf_solve_user(
    const CfModel& model,
    const std::vector<std::pair<uint32_t, double>>& ratings,
    const ItemLookup& item);

// d/dv_j of the marginal objective at the inner minimizer u*:
// 2 (<u*, v_j> - r) u* + 2 lambda v_j.
std::vector<double> cf_envelope_gradient(const CfModel& model,
                                         const std::vector<double>& u,
                                         const std::vector<double>& v,
                                         double rating);

// Marginal objective term for one user at the current item vectors:
// min_u sum_j (<u,v_j> - r)^2 + lambda||u||^2 + lambda sum_j ||v_j||^2.
double cf_user_objective(const CfModel& model,
                         const std::vector<double>& u_star,
                         const std::vector<std::pair<uint32_t, double>>& ratings,
                         const ItemLookup& item);

ProcessFn make_cf_process(CfModel model);

// Item vectors initialized to random unit vectors with all coordinates
// positive, plus zeroed AdaGrad accumulators.
void declare_cf_state(ParamDataset& ds, const CfModel& model,
                      uint32_t num_items, uint64_t seed);

struct CfTestUser {
  int64_t user = 0;
  std::vector<std::pair<uint32_t, double>> observed;
  std::vector<std::pair<uint32_t, double>> heldout;
};

// Fits each test user's vector from its observed ratings and returns the
// mean squared error over all held-out ratings.
double cf_predict_loss(const CfModel& model, VarStore& vars,
                       const std::vector<CfTestUser>& users);

}  // namespace splash
