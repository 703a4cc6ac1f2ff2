#include "splash/collab_filter.h"

#include <cmath>

#include "doctest.h"
#include "splash/rng.h"
#include "test_util.h"

using namespace splash;

namespace {

ItemLookup fixed_items(std::vector<std::vector<double>> items) {
  return [items = std::move(items)](uint32_t j) { return items.at(j); };
}

}  // namespace

TEST_CASE("closed-form ridge for a single rating") {
  CfModel model;
  model.dim = 2;
  model.lambda = 0.02;
  const auto u =
      cf_solve_user(model, {{0, 1.0}}, fixed_items({{1.0, 0.0}}));
  CHECK(u[0] == doctest::Approx(1.0 / 1.02).epsilon(1e-12));
  CHECK(u[0] == doctest::Approx(0.980392).epsilon(1e-6));
  CHECK(u[1] == doctest::Approx(0.0));
}

TEST_CASE("huge regularizer drives the user vector to zero") {
  CfModel model;
  model.dim = 2;
  model.lambda = 1e9;
  const auto u =
      cf_solve_user(model, {{0, 1.0}}, fixed_items({{1.0, 0.5}}));
  CHECK(std::fabs(u[0]) < 1e-8);
  CHECK(std::fabs(u[1]) < 1e-8);
}

TEST_CASE("lambda = 0 with rank-deficient ratings is a numeric error") {
  CfModel model;
  model.dim = 2;
  model.lambda = 0.0;
  CHECK_THROWS_AS(
      cf_solve_user(model, {{0, 1.0}}, fixed_items({{1.0, 0.0}})),
      NumericError);
  // full-rank ratings solve fine without regularization
  const auto u = cf_solve_user(model, {{0, 1.0}, {1, 2.0}},
                               fixed_items({{1.0, 0.0}, {0.0, 1.0}}));
  CHECK(u[0] == doctest::Approx(1.0));
  CHECK(u[1] == doctest::Approx(2.0));
}

TEST_CASE("envelope gradient matches finite differences of the marginal "
          "objective") {
  CfModel model;
  model.dim = 3;
  model.lambda = 0.1;
  auto rg = rng::make_engine(31);
  const double h = 1e-5;
  for (int trial = 0; trial < 25; ++trial) {
    // |J| = 4 items
    std::vector<std::vector<double>> items(4, std::vector<double>(model.dim));
    std::vector<std::pair<uint32_t, double>> ratings;
    for (uint32_t j = 0; j < 4; ++j) {
      for (auto& v : items[j]) v = rng::gaussian(rg);
      ratings.emplace_back(j, rng::gaussian(rg));
    }

    // g(v) = min_u sum_j (<u,v_j> - r_j)^2 + lambda ||u||^2
    //        + lambda sum_j ||v_j||^2
    auto objective = [&](const std::vector<std::vector<double>>& vs) {
      const auto u = cf_solve_user(model, ratings, fixed_items(vs));
      return cf_user_objective(model, u, ratings, fixed_items(vs));
    };

    const auto u_star = cf_solve_user(model, ratings, fixed_items(items));
    const uint32_t j = uint32_t(rng::uniform_below(rg, 4));
    const auto grad = cf_envelope_gradient(model, u_star, items[j],
                                           ratings[j].second);
    for (uint32_t i = 0; i < model.dim; ++i) {
      auto bumped = items;
      bumped[j][i] += h;
      const double up = objective(bumped);
      bumped[j][i] -= 2.0 * h;
      const double down = objective(bumped);
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({1.0, std::fabs(fd), std::fabs(grad[i])});
      CHECK(std::fabs(grad[i] - fd) / denom < 1e-5);
    }
  }
}

TEST_CASE("prediction loss") {
  CfModel model;
  model.dim = 2;
  model.lambda = 0.0;

  SUBCASE("consistent model scores zero") {
    // items e1, e2; user factor (2, 3); ratings exactly <u, v>
    VarStore vars;
    vars.define_array(model.item_key(0), {1.0, 0.0});
    vars.define_array(model.item_key(1), {0.0, 1.0});
    vars.define_array(model.item_key(2), {1.0, 1.0});
    CfTestUser user;
    user.observed = {{0, 2.0}, {1, 3.0}};
    user.heldout = {{2, 5.0}};
    CHECK(cf_predict_loss(model, vars, {user}) ==
          doctest::Approx(0.0).epsilon(1e-18));
  }

  SUBCASE("single held-out rating off by one gives MSE 1") {
    CfModel m1;
    m1.dim = 1;
    m1.lambda = 0.0;
    VarStore vars;
    vars.define_array(m1.item_key(0), {1.0});
    vars.define_array(m1.item_key(1), {1.0});
    CfTestUser user;
    user.observed = {{0, 2.0}};
    user.heldout = {{1, 3.0}};  // prediction is 2
    CHECK(cf_predict_loss(m1, vars, {user}) == doctest::Approx(1.0));
  }

  SUBCASE("no held-out ratings is a usage error") {
    VarStore vars;
    vars.define_array(model.item_key(0), {1.0, 0.0});
    CfTestUser user;
    user.observed = {{0, 2.0}};
    CHECK_THROWS_AS(cf_predict_loss(model, vars, {user}), UsageError);
  }

  SUBCASE("matches a brute-force recomputation on a random instance") {
    CfModel m2;
    m2.dim = 3;
    m2.lambda = 0.05;
    auto rg = rng::make_engine(17);
    VarStore vars;
    std::vector<std::vector<double>> items(6, std::vector<double>(3));
    for (uint32_t j = 0; j < 6; ++j) {
      for (auto& v : items[j]) v = rng::gaussian(rg);
      vars.define_array(m2.item_key(j), items[j]);
    }
    std::vector<CfTestUser> users(5);
    for (auto& u : users) {
      for (uint32_t j = 0; j < 4; ++j)
        u.observed.emplace_back(j, rng::gaussian(rg));
      for (uint32_t j = 4; j < 6; ++j)
        u.heldout.emplace_back(j, rng::gaussian(rg));
    }
    const double got = cf_predict_loss(m2, vars, users);

    double total = 0.0;
    size_t count = 0;
    for (const auto& u : users) {
      const auto uv = cf_solve_user(m2, u.observed, fixed_items(items));
      for (const auto& [j, r] : u.heldout) {
        double pred = 0.0;
        for (uint32_t i = 0; i < 3; ++i) pred += uv[i] * items[j][i];
        total += (pred - r) * (pred - r);
        ++count;
      }
    }
    CHECK(got == doctest::Approx(total / double(count)).epsilon(1e-12));
  }
}

TEST_CASE("cf state initialization is positive and unit length") {
  auto ds = ParamDataset::create({Element{RatingBundle{0, {{0, 1.0}}}}}, 1, 3);
  CfModel model;
  model.dim = 8;
  declare_cf_state(ds, model, 5, 42);
  for (uint32_t j = 0; j < 5; ++j) {
    VarStore& s = ds.shared_mutable();
    const auto& v = s.get_array(model.item_key(j));
    double norm = 0.0;
    for (double x : v) {
      CHECK(x > 0.0);
      norm += x * x;
    }
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("cf process performs adagrad steps on each rated item") {
  CfModel model;
  model.dim = 2;
  model.lambda = 0.02;
  model.adagrad_eta0 = 0.1;
  std::vector<Element> elems{Element{RatingBundle{7, {{0, 1.0}, {1, -0.5}}}}};
  auto ds = ParamDataset::create(std::move(elems), 1, 9);
  declare_cf_state(ds, model, 2, 42);
  const auto v0_before = ds.shared().entry(model.item_key(0)).values;
  ds.run_iteration(make_cf_process(model), 1);
  const auto& v0 = ds.shared_mutable().get_array(model.item_key(0));
  const auto& acc = ds.shared_mutable().get_array(model.acc_key(0));
  CHECK(v0 != v0_before);
  CHECK(acc[0] > 0.0);

  // empty bundle is rejected
  auto bad = ParamDataset::create({Element{RatingBundle{1, {}}}}, 1, 1);
  declare_cf_state(bad, model, 1, 5);
  CHECK_THROWS_AS(bad.run_iteration(make_cf_process(model), 1), DataError);
}
