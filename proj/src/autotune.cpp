#include "splash/autotune.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "splash/rng.h"

namespace splash {

GroupAllocation allocate_groups(int M, int previous_count) {
  if (M < 1) throw UsageError("allocate_groups: M must be >= 1");
  if (previous_count < 1)
    throw UsageError("allocate_groups: previous_count must be >= 1");

  GroupAllocation out;
  out.total = M;
  out.previous = previous_count;

  // m0 = previous_count / 4 exactly; the first test 8 m0 <= remaining is
  // therefore 2 * previous_count <= M, and every later quantity is integral.
  int64_t assigned = 0;
  int64_t prev = 0;  // m_{i-1}, integral from the first group on
  bool first = true;
  while (assigned < M) {
    const int64_t remaining = M - assigned;
    int64_t next;
    if (first) {
      next = (2 * static_cast<int64_t>(previous_count) <= remaining)
                 ? previous_count
                 : remaining;
      first = false;
    } else {
      next = (8 * prev <= remaining) ? 4 * prev : remaining;
    }
    out.group_sizes.push_back(static_cast<int>(next));
    assigned += next;
    prev = next;
  }
  return out;
}

std::string TuneResult::to_json_string() const {
  nlohmann::json j;
  j["candidates"] = candidates;
  nlohmann::json losses = nlohmann::json::array();
  for (double l : test_loss) {
    if (std::isnan(l))
      losses.push_back(nullptr);
    else
      losses.push_back(l);
  }
  j["test_loss"] = std::move(losses);
  j["chosen"] = chosen;
  j["consecutive_wins"] = consecutive_wins;
  j["fallback_sequential"] = fallback_sequential;
  return j.dump();
}

namespace {

int pick_winner(const std::vector<int>& candidates,
                const std::vector<double>& losses) {
  int best = -1;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (std::isnan(losses[i])) continue;
    if (best < 0 || losses[i] < losses[best] ||
        (losses[i] == losses[best] && candidates[i] > candidates[best]))
      best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

TuneResult tune_iteration(ParamDataset& ds, const ProcessFn& process,
                          const LossFn* loss, int M, int previous_count,
                          const RunOptions& options) {
  const GroupAllocation alloc = allocate_groups(M, previous_count);
  TuneResult result;
  result.candidates = alloc.group_sizes;
  result.test_loss.assign(alloc.group_sizes.size(),
                          std::numeric_limits<double>::quiet_NaN());

  const uint32_t P = ds.num_partitions();
  std::vector<uint32_t> pool(P);
  std::iota(pool.begin(), pool.end(), 0);
  auto g = rng::make_engine(ds.seed(), {0x74e0, ds.iteration_counter()});
  rng::shuffle(pool, g);

  // No loss function: the largest candidate wins outright; only it trains.
  if (!loss) {
    int best = 0;
    for (size_t i = 1; i < alloc.group_sizes.size(); ++i)
      if (alloc.group_sizes[i] >= alloc.group_sizes[best])
        best = static_cast<int>(i);
    const int m = alloc.group_sizes[best];
    if (static_cast<uint32_t>(m) > P)
      throw UsageError("tune: candidate exceeds partition count");
    std::vector<uint32_t> train(pool.begin(), pool.begin() + m);
    TentativeRun run = ds.run_partitions_tentative(train, process, m, options);
    result.chosen = m;
    ds.install_shared(run.combined());
    run.commit();
    ds.advance_iteration();
    return result;
  }

  int64_t need = 0;
  for (int m : alloc.group_sizes) need += 2 * static_cast<int64_t>(m);

  if (need <= static_cast<int64_t>(P)) {
    // Parallel path: each group owns disjoint train and test partitions and
    // the groups run concurrently.
    struct Group {
      int m;
      std::vector<uint32_t> train, test;
      TentativeRun run;
      double loss = std::numeric_limits<double>::quiet_NaN();
      std::exception_ptr error;
    };
    std::vector<Group> groups(alloc.group_sizes.size());
    size_t cursor = 0;
    for (size_t i = 0; i < groups.size(); ++i) {
      groups[i].m = alloc.group_sizes[i];
      groups[i].train.assign(pool.begin() + cursor,
                             pool.begin() + cursor + groups[i].m);
      cursor += groups[i].m;
      groups[i].test.assign(pool.begin() + cursor,
                            pool.begin() + cursor + groups[i].m);
      cursor += groups[i].m;
    }

    std::vector<std::thread> threads;
    threads.reserve(groups.size());
    for (auto& grp : groups) {
      threads.emplace_back([&ds, &process, &options, loss, &grp] {
        try {
          grp.run = ds.run_partitions_tentative(grp.train, process, grp.m,
                                                options);
          VarStore vars = grp.run.combined();
          grp.loss = ds.mean_loss_on(grp.test, vars, *loss);
        } catch (...) {
          grp.error = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& grp : groups) {
      if (grp.error) {
        for (auto& other : groups)
          if (!other.run.resolved()) other.run.rollback();
        std::rethrow_exception(grp.error);
      }
    }

    for (size_t i = 0; i < groups.size(); ++i)
      result.test_loss[i] = groups[i].loss;
    const int best = pick_winner(result.candidates, result.test_loss);
    if (best < 0) throw NumericError("tune: every candidate failed to score");
    result.chosen = result.candidates[best];
    for (size_t i = 0; i < groups.size(); ++i) {
      if (static_cast<int>(i) == best) continue;
      groups[i].run.rollback();
    }
    ds.install_shared(groups[best].run.combined());
    groups[best].run.commit();
    ds.advance_iteration();
    return result;
  }

  // Fallback: evaluate candidates one at a time on a single train/test
  // split, rolling each back so every candidate starts from the same state.
  result.fallback_sequential = true;
  std::cerr << "tune: only " << P << " partitions for " << need
            << " requested; evaluating candidates sequentially\n";
  if (P < 2)
    throw UsageError("tune: need at least 2 partitions for cross-validation");
  const size_t train_count = P - P / 2;
  std::vector<uint32_t> train(pool.begin(), pool.begin() + train_count);
  std::vector<uint32_t> test(pool.begin() + train_count, pool.end());

  for (size_t i = 0; i < alloc.group_sizes.size(); ++i) {
    const int m = alloc.group_sizes[i];
    if (static_cast<size_t>(m) > train.size()) {
      std::cerr << "tune: candidate m=" << m
                << " exceeds train partitions, skipped\n";
      continue;
    }
    TentativeRun run = ds.run_partitions_tentative(train, process, m, options);
    VarStore vars = run.combined();
    result.test_loss[i] = ds.mean_loss_on(test, vars, *loss);
    run.rollback();
  }
  const int best = pick_winner(result.candidates, result.test_loss);
  if (best < 0)
    throw UsageError("tune: no feasible candidate for this partition count");
  result.chosen = result.candidates[best];

  TentativeRun winner =
      ds.run_partitions_tentative(train, process, result.chosen, options);
  ds.install_shared(winner.combined());
  winner.commit();
  ds.advance_iteration();
  return result;
}

AutoTuner::StepOutcome AutoTuner::step(ParamDataset& ds,
                                       const ProcessFn& process,
                                       const LossFn* loss,
                                       const RunOptions& options) {
  StepOutcome out;
  if (iterations_seen_ >= next_tune_) {
    out.tuned = true;
    out.tune = tune_iteration(ds, process, loss, max_threads_, current_,
                              options);
    if (out.tune.chosen == current_) {
      ++wins_;
    } else {
      current_ = out.tune.chosen;
      wins_ = 1;
    }
    out.tune.consecutive_wins = wins_;
    uint64_t interval = 1;
    if (wins_ >= 3) {
      const int k = std::min(wins_ - 2, 5);
      interval = std::min<uint64_t>(uint64_t(1) << k, 32);
    }
    next_tune_ = iterations_seen_ + interval;
  } else {
    out.sync = ds.run_iteration(process, current_, options);
  }
  out.m_used = current_;
  ++iterations_seen_;
  return out;
}

}  // namespace splash
