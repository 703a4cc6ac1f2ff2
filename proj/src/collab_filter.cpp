#include "splash/collab_filter.h"

#include <Eigen/Dense>
#include <cmath>

#include "splash/rng.h"

namespace splash {

namespace {

const RatingBundle& as_bundle(const Element& elem) {
  const auto* rb = std::get_if<RatingBundle>(&elem);
  if (!rb) throw DataError("collaborative filtering expects rating bundles");
  return *rb;
}

}  // namespace

std::vector<double> cf_solve_user(
    const CfModel& model,
    const std::vector<std::pair<uint32_t, double>>& ratings,
    const ItemLookup& item) {
  if (ratings.empty())
    throw UsageError("cf_solve_user: user has no observed ratings");
  const int d = static_cast<int>(model.dim);
  Eigen::MatrixXd A = model.lambda * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd v(d);
  for (const auto& [j, r] : ratings) {
    const std::vector<double> vj = item(j);
    if (vj.size() != model.dim)
      throw ShapeError("cf: item vector has wrong dimension");
    for (int i = 0; i < d; ++i) v[i] = vj[i];
    A.noalias() += v * v.transpose();
    b.noalias() += r * v;
  }

  Eigen::VectorXd u;
  if (model.lambda > 0.0) {
    u = A.ldlt().solve(b);
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
      throw NumericError(
          "cf: normal matrix is singular (lambda = 0 with rank-deficient "
          "ratings)");
    u = lu.solve(b);
  }
  for (int i = 0; i < d; ++i)
    if (!std::isfinite(u[i])) throw NumericError("cf: non-finite user vector");
  return std::vector<double>(u.data(), u.data() + d);
}

std::vector<double> cf_envelope_gradient(const CfModel& model,
                                         const std::vector<double>& u,
                                         const std::vector<double>& v,
                                         double rating) {
  double pred = 0.0;
  for (size_t i = 0; i < u.size(); ++i) pred += u[i] * v[i];
  std::vector<double> g(u.size());
  const double residual = pred - rating;
  for (size_t i = 0; i < u.size(); ++i)
    g[i] = 2.0 * residual * u[i] + 2.0 * model.lambda * v[i];
  return g;
}

double cf_user_objective(
    const CfModel& model, const std::vector<double>& u_star,
    const std::vector<std::pair<uint32_t, double>>& ratings,
    const ItemLookup& item) {
  double obj = 0.0;
  double unorm = 0.0;
  for (double ui : u_star) unorm += ui * ui;
  obj += model.lambda * unorm;
  for (const auto& [j, r] : ratings) {
    const std::vector<double> vj = item(j);
    double pred = 0.0, vnorm = 0.0;
    for (size_t i = 0; i < u_star.size(); ++i) {
      pred += u_star[i] * vj[i];
      vnorm += vj[i] * vj[i];
    }
    obj += (pred - r) * (pred - r) + model.lambda * vnorm;
  }
  return obj;
}

ProcessFn make_cf_process(CfModel model) {
  return [model](const Element& elem, int weight, SharedVars& shared,
                 LocalVars& /*local*/, std::mt19937_64& /*rng*/) {
    const RatingBundle& bundle = as_bundle(elem);
    if (bundle.ratings.empty())
      throw DataError("cf: rating bundle must be nonempty");

    ItemLookup lookup = [&shared, &model](uint32_t j) {
      return shared.get_array(model.item_key(j));
    };
    const std::vector<double> u = cf_solve_user(model, bundle.ratings, lookup);

    const double m = static_cast<double>(weight);
    for (const auto& [j, r] : bundle.ratings) {
      const std::string vkey = model.item_key(j);
      const std::string akey = model.acc_key(j);
      const std::vector<double> vj = shared.get_array(vkey);
      const std::vector<double> g = cf_envelope_gradient(model, u, vj, r);
      for (uint32_t i = 0; i < model.dim; ++i)
        shared.add(akey, i, m * g[i] * g[i]);
      for (uint32_t i = 0; i < model.dim; ++i) {
        const double acc = shared.get(akey, i);
        const double step =
            m * model.adagrad_eta0 / (model.adagrad_eps + std::sqrt(acc));
        shared.add(vkey, i, -step * g[i]);
      }
    }
  };
}

void declare_cf_state(ParamDataset& ds, const CfModel& model,
                      uint32_t num_items, uint64_t seed) {
  auto g = rng::make_engine(seed, {0xcf01});
  for (uint32_t j = 0; j < num_items; ++j) {
    std::vector<double> v(model.dim);
    double norm = 0.0;
    for (double& x : v) {
      x = std::abs(rng::gaussian(g));
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    ds.declare_array(model.item_key(j), std::move(v));
    ds.declare_array(model.acc_key(j), std::vector<double>(model.dim, 0.0));
  }
}

double cf_predict_loss(const CfModel& model, VarStore& vars,
                       const std::vector<CfTestUser>& users) {
  ItemLookup lookup = [&vars, &model](uint32_t j) {
    return vars.get_array(model.item_key(j));
  };
  double total = 0.0;
  size_t count = 0;
  for (const CfTestUser& user : users) {
    if (user.observed.empty() || user.heldout.empty()) continue;
    const std::vector<double> u = cf_solve_user(model, user.observed, lookup);
    for (const auto& [j, r] : user.heldout) {
      const std::vector<double> vj = lookup(j);
      double pred = 0.0;
      for (size_t i = 0; i < u.size(); ++i) pred += u[i] * vj[i];
      total += (pred - r) * (pred - r);
      ++count;
    }
  }
  if (count == 0)
    throw UsageError("cf_predict_loss: no held-out ratings to score");
  return total / static_cast<double>(count);
}

}  // namespace splash
