#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "splash/sample.h"
#include "splash/shared_vars.h"
#include "splash/transform.h"

namespace splash {

// An ordered collection of weighted samples, exclusively owned by one worker
// during an iteration. Processing order within an iteration is a seeded
// permutation derived from (dataset seed, iteration, partition index).
struct Partition {
  uint32_t index = 0;
  uint64_t rng_seed = 0;
  std::vector<WeightedSample> samples;
};

struct WorkerTiming {
  double compute_ms = 0.0;
  double wait_ms = 0.0;
  uint64_t samples = 0;
};

// Timing decomposition of one iteration: per-worker compute, the latency
// waiting for the slowest worker, and the coordinator's combine step.
struct SyncReport {
  uint64_t iteration = 0;
  int weight = 1;
  int threads = 1;
  bool sequential_fast_path = false;
  std::vector<WorkerTiming> workers;
  double combine_ms = 0.0;
  double wall_ms = 0.0;
  uint64_t samples_total = 0;

  std::string to_json_string() const;
};

enum class WeightMode {
  Reweighted,  // weight = m, the execution model's default
  Unit,        // weight = 1, used by the naive-baseline experiments
};

struct RunOptions {
  WeightMode weight_mode = WeightMode::Reweighted;
  // When set, each worker draws this many samples from the full dataset with
  // replacement instead of taking a pass over its partitions. Delayed ops
  // and local variables are unavailable in this mode.
  std::optional<uint32_t> draws_per_worker;
  // Reshuffle each partition's processing order every iteration. When false,
  // the order is the seeded permutation of iteration 0.
  bool reshuffle_each_iteration = true;
  bool capture_combine_report = false;
};

// User algorithm contract: incrementally update shared/local variables from
// one weighted element. Must be deterministic given (element, weight, vars,
// rng stream); the engine supplies the seeded rng.
using ProcessFn = std::function<void(const Element&, int weight, SharedVars&,
                                     LocalVars&, std::mt19937_64&)>;
using MapFn = std::function<double(const Element&)>;
using ReduceFn = std::function<double(double, double)>;
using LossFn = std::function<double(VarStore&, const Element&)>;

class ParamDataset;

// Result of a tentative pass over a subset of partitions (the autotuner's
// training probes). Sample-side effects (local vars, pending queues) are
// journaled; exactly one of commit()/rollback() must be called.
class TentativeRun {
 public:
  TentativeRun() = default;
  TentativeRun(const TentativeRun&) = delete;
  TentativeRun& operator=(const TentativeRun&) = delete;
  TentativeRun(TentativeRun&&) = default;
  TentativeRun& operator=(TentativeRun&&) = default;
  // An unresolved run rolls back on destruction.
  ~TentativeRun() { undo(); }

  const VarStore& combined() const { return combined_; }
  const SyncReport& report() const { return report_; }
  void commit();
  void rollback();
  bool resolved() const { return resolved_; }

 private:
  friend class ParamDataset;
  struct JournalEntry {
    WeightedSample* sample;
    VarStore old_local;
    std::vector<PendingOp> old_pending;
  };
  void undo();

  VarStore combined_;
  SyncReport report_;
  std::vector<JournalEntry> journal_;
  bool resolved_ = false;
};

// The distributed dataset analogue: partitions of weighted samples plus the
// authoritative copy of the shared variables, which changes only at combine
// time.
class ParamDataset {
 public:
  static ParamDataset create(std::vector<Element> elements,
                             uint32_t num_partitions, uint64_t seed);
  // Like create, but elements with the same group id stay in one partition
  // (the topic-modeling tasks keep documents whole).
  static ParamDataset create_grouped(
      std::vector<Element> elements,
      const std::function<uint64_t(const Element&)>& group_of,
      uint32_t num_partitions, uint64_t seed);

  // Shared-variable declaration, coordinator side.
  void declare_scalar(const std::string& key, double v);
  void declare_array(const std::string& key, std::vector<double> vals);

  const VarStore& shared() const { return shared_; }
  VarStore& shared_mutable() { return shared_; }
  // Counted snapshot: the single authoritative read per iteration.
  VarStore snapshot_shared();
  void install_shared(VarStore v);
  uint64_t shared_reads() const { return shared_reads_; }
  uint64_t shared_writes() const { return shared_writes_; }

  // One iteration: m workers process disjoint partitions against replicas,
  // then the coordinator combines their transforms and installs the result.
  // On a process error the iteration aborts and the dataset (shared state,
  // local vars, pending queues) is left untouched.
  SyncReport run_iteration(const ProcessFn& process, int m,
                           const RunOptions& options = {});

  // Tentative pass over selected partitions from the current authoritative
  // snapshot. Does not install shared state or advance the iteration
  // counter; the caller commits or rolls back sample-side effects.
  TentativeRun run_partitions_tentative(const std::vector<uint32_t>& parts,
                                        const ProcessFn& process, int m,
                                        const RunOptions& options = {});

  // Deterministic fold over all samples: partition order, then stored sample
  // order.
  double map_reduce(const MapFn& map, const ReduceFn& reduce,
                    double init) const;
  double mean_loss(const LossFn& loss);
  double mean_loss_on(const std::vector<uint32_t>& parts, VarStore& vars,
                      const LossFn& loss) const;

  std::vector<uint8_t> checkpoint() const;
  static ParamDataset restore(const std::vector<uint8_t>& bytes);

  uint64_t iteration_counter() const { return iteration_; }
  void advance_iteration() { ++iteration_; }
  uint64_t seed() const { return seed_; }
  uint32_t num_partitions() const {
    return static_cast<uint32_t>(partitions_.size());
  }
  size_t size() const;
  const Partition& partition(uint32_t i) const { return partitions_.at(i); }
  Partition& partition_mutable(uint32_t i) { return partitions_.at(i); }

  // Drops all queued delayed operations (for samples that will never be
  // processed again).
  void drop_pending();

  const CombineReport& last_combine_report() const { return last_report_; }

  // Seeded order helpers, public so sequential oracles can replay the exact
  // engine order.
  static std::vector<size_t> processing_order(const Partition& p,
                                              uint64_t dataset_seed,
                                              uint64_t iteration,
                                              bool reshuffle);
  static std::mt19937_64 partition_rng(uint64_t dataset_seed,
                                       uint64_t iteration,
                                       uint32_t partition_index);

 private:
  ParamDataset() = default;

  struct PassResult {
    std::vector<ThreadTransform> transforms;
    SyncReport report;
    std::vector<TentativeRun::JournalEntry> journal;
    CombineReport combine_report;
    VarStore combined;
  };
  PassResult run_pass(const std::vector<uint32_t>& parts,
                      const ProcessFn& process, int m,
                      const RunOptions& options);

  std::vector<Partition> partitions_;
  VarStore shared_;
  uint64_t iteration_ = 0;
  uint64_t seed_ = 0;
  uint64_t shared_reads_ = 0;
  uint64_t shared_writes_ = 0;
  CombineReport last_report_;
};

}  // namespace splash
