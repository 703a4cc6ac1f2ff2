#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splash/engine.h"

namespace splash {

// Candidate thread-count groups carved out of M available cores. Starting
// from a quarter of the previous count (kept exact: 4 m0 = previous), each
// group is 4x the last while 8 m_{i-1} still fits in the remaining cores;
// the final group absorbs the remainder. Sizes always sum to M.
struct GroupAllocation {
  std::vector<int> group_sizes;
  int total = 0;
  int previous = 0;
};

GroupAllocation allocate_groups(int M, int previous_count);

struct TuneResult {
  std::vector<int> candidates;
  std::vector<double> test_loss;  // NaN when no loss function was supplied
  int chosen = 1;
  int consecutive_wins = 0;
  bool fallback_sequential = false;

  std::string to_json_string() const;
};

// One tuning round: candidate groups train on disjoint random partitions
// from the same starting shared state, the candidate with the smallest mean
// test loss wins (ties to the larger count), and the winner's combined state
// is installed. Without a loss function the largest candidate is chosen.
// When fewer than 2 * sum(m_i) partitions exist, candidates are evaluated
// sequentially on one shared train/test split.
TuneResult tune_iteration(ParamDataset& ds, const ProcessFn& process,
                          const LossFn* loss, int M, int previous_count,
                          const RunOptions& options = {});

// Drives the retest schedule: tune every iteration until the same count wins
// 3 consecutive rounds, then back off geometrically (retest after 2, 4, 8,
// ... iterations, capped at 32).
class AutoTuner {
 public:
  explicit AutoTuner(int max_threads) : max_threads_(max_threads) {}

  struct StepOutcome {
    bool tuned = false;
    int m_used = 1;
    TuneResult tune;
    SyncReport sync;  // filled for non-tuning iterations
  };

  StepOutcome step(ParamDataset& ds, const ProcessFn& process,
                   const LossFn* loss, const RunOptions& options = {});

  int current() const { return current_; }
  int consecutive_wins() const { return wins_; }
  uint64_t next_tune_iteration() const { return next_tune_; }

 private:
  int max_threads_;
  int current_ = 1;
  int wins_ = 0;
  uint64_t next_tune_ = 0;
  uint64_t iterations_seen_ = 0;
};

}  // namespace splash
