#include "splash/engine.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "splash/bytes.h"
#include "splash/rng.h"

namespace splash {

namespace {

// Salt tags for seed derivation; changing these changes every seeded stream.
enum Salt : uint64_t {
  kAssignShuffle = 0x5a01,
  kPartitionSeed = 0x5a02,
  kOrderShuffle = 0x5a03,
  kProcessStream = 0x5a04,
  kWorkerDraws = 0x5a05,
};

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

void write_varstore(ByteWriter& w, const VarStore& store) {
  const auto keys = store.keys_sorted();
  w.u64(keys.size());
  for (const auto& key : keys) {
    const VarValue& v = store.entry(key);
    w.str(key);
    w.u8(static_cast<uint8_t>(v.kind));
    if (v.kind == VarValue::Kind::Scalar) {
      w.f64(v.scalar);
    } else {
      w.f64_vec(v.values);
      w.f64(v.global_mult);
      w.f64_vec(v.elem_mult);
    }
  }
}

VarStore read_varstore(ByteReader& r) {
  VarStore store;
  const uint64_t n = r.u64();
  for (uint64_t i = 0; i < n; ++i) {
    std::string key = r.str();
    const uint8_t kind = r.u8();
    VarValue v;
    if (kind == static_cast<uint8_t>(VarValue::Kind::Scalar)) {
      v = VarValue::make_scalar(r.f64());
    } else if (kind == static_cast<uint8_t>(VarValue::Kind::Array)) {
      v.kind = VarValue::Kind::Array;
      v.values = r.f64_vec();
      v.global_mult = r.f64();
      v.elem_mult = r.f64_vec();
      if (v.elem_mult.size() != v.values.size())
        throw FormatError("checkpoint: multiplier length mismatch");
    } else {
      throw FormatError("checkpoint: unknown value kind");
    }
    store.put_entry(key, std::move(v));
  }
  return store;
}

void write_element(ByteWriter& w, const Element& e) {
  w.u8(static_cast<uint8_t>(e.index()));
  if (const auto* d = std::get_if<double>(&e)) {
    w.f64(*d);
  } else if (const auto* v = std::get_if<std::vector<double>>(&e)) {
    w.f64_vec(*v);
  } else if (const auto* lp = std::get_if<LabeledPoint>(&e)) {
    w.u64(lp->x.entries.size());
    for (const auto& [i, val] : lp->x.entries) {
      w.u32(i);
      w.f64(val);
    }
    w.i64(lp->label);
  } else if (const auto* rb = std::get_if<RatingBundle>(&e)) {
    w.i64(rb->user);
    w.u64(rb->ratings.size());
    for (const auto& [j, r] : rb->ratings) {
      w.u32(j);
      w.f64(r);
    }
  } else if (const auto* t = std::get_if<Token>(&e)) {
    w.u32(t->doc);
    w.u32(t->word);
    w.u32(t->count);
  } else {
    throw FormatError("checkpoint: unhandled element alternative");
  }
}

Element read_element(ByteReader& r) {
  const uint8_t idx = r.u8();
  switch (idx) {
    case 0:
      return Element(r.f64());
    case 1:
      return Element(r.f64_vec());
    case 2: {
      LabeledPoint lp;
      const uint64_t n = r.u64();
      lp.x.entries.reserve(n);
      for (uint64_t i = 0; i < n; ++i) {
        const uint32_t k = r.u32();
        const double v = r.f64();
        lp.x.entries.emplace_back(k, v);
      }
      lp.label = static_cast<int32_t>(r.i64());
      return Element(std::move(lp));
    }
    case 3: {
      RatingBundle rb;
      rb.user = r.i64();
      const uint64_t n = r.u64();
      rb.ratings.reserve(n);
      for (uint64_t i = 0; i < n; ++i) {
        const uint32_t j = r.u32();
        const double v = r.f64();
        rb.ratings.emplace_back(j, v);
      }
      return Element(std::move(rb));
    }
    case 4: {
      Token t;
      t.doc = r.u32();
      t.word = r.u32();
      t.count = r.u32();
      return Element(t);
    }
    default:
      throw FormatError("checkpoint: unknown element alternative");
  }
}

void write_pending(ByteWriter& w, const std::vector<PendingOp>& ops) {
  w.u64(ops.size());
  for (const auto& op : ops) {
    w.str(op.key);
    w.u8(op.index ? 1 : 0);
    if (op.index) w.u32(*op.index);
    w.f64(op.delta);
  }
}

std::vector<PendingOp> read_pending(ByteReader& r) {
  std::vector<PendingOp> ops(r.u64());
  for (auto& op : ops) {
    op.key = r.str();
    if (r.u8()) op.index = r.u32();
    op.delta = r.f64();
  }
  return ops;
}

}  // namespace

std::string SyncReport::to_json_string() const {
  nlohmann::json j;
  j["iteration"] = iteration;
  j["weight"] = weight;
  j["threads"] = threads;
  j["sequential_fast_path"] = sequential_fast_path;
  j["combine_ms"] = combine_ms;
  j["wall_ms"] = wall_ms;
  j["samples_total"] = samples_total;
  nlohmann::json jw = nlohmann::json::array();
  for (const auto& w : workers) {
    jw.push_back({{"compute_ms", w.compute_ms},
                  {"wait_ms", w.wait_ms},
                  {"samples", w.samples}});
  }
  j["workers"] = std::move(jw);
  return j.dump();
}

void TentativeRun::commit() {
  if (resolved_) throw UsageError("tentative run already resolved");
  journal_.clear();
  resolved_ = true;
}

void TentativeRun::undo() {
  for (auto it = journal_.rbegin(); it != journal_.rend(); ++it) {
    it->sample->local = std::move(it->old_local);
    it->sample->pending = std::move(it->old_pending);
  }
  journal_.clear();
  resolved_ = true;
}

void TentativeRun::rollback() {
  if (resolved_) throw UsageError("tentative run already resolved");
  undo();
}

ParamDataset ParamDataset::create(std::vector<Element> elements,
                                  uint32_t num_partitions, uint64_t seed) {
  return create_grouped(std::move(elements), nullptr, num_partitions, seed);
}

ParamDataset ParamDataset::create_grouped(
    std::vector<Element> elements,
    const std::function<uint64_t(const Element&)>& group_of,
    uint32_t num_partitions, uint64_t seed) {
  if (elements.empty()) throw UsageError("create: elements must be nonempty");
  if (num_partitions < 1)
    throw UsageError("create: need at least one partition");

  ParamDataset ds;
  ds.seed_ = seed;
  ds.partitions_.resize(num_partitions);
  for (uint32_t p = 0; p < num_partitions; ++p) {
    ds.partitions_[p].index = p;
    ds.partitions_[p].rng_seed = rng::derive(seed, {kPartitionSeed, p});
  }

  auto shuffle_rng = rng::make_engine(seed, {kAssignShuffle});

  if (!group_of) {
    std::vector<size_t> order(elements.size());
    std::iota(order.begin(), order.end(), 0);
    rng::shuffle(order, shuffle_rng);
    for (size_t k = 0; k < order.size(); ++k) {
      const size_t src = order[k];
      WeightedSample s;
      s.id = static_cast<uint64_t>(src);
      s.element = std::move(elements[src]);
      ds.partitions_[k % num_partitions].samples.push_back(std::move(s));
    }
    return ds;
  }

  // Grouped: shuffle group ids (first-appearance order) and round-robin the
  // groups so that all elements of a group land in one partition.
  std::vector<uint64_t> group_ids;
  std::unordered_map<uint64_t, std::vector<size_t>> members;
  for (size_t i = 0; i < elements.size(); ++i) {
    const uint64_t g = group_of(elements[i]);
    auto [it, inserted] = members.try_emplace(g);
    if (inserted) group_ids.push_back(g);
    it->second.push_back(i);
  }
  rng::shuffle(group_ids, shuffle_rng);
  for (size_t k = 0; k < group_ids.size(); ++k) {
    Partition& part = ds.partitions_[k % num_partitions];
    for (size_t src : members[group_ids[k]]) {
      WeightedSample s;
      s.id = static_cast<uint64_t>(src);
      s.element = std::move(elements[src]);
      part.samples.push_back(std::move(s));
    }
  }
  return ds;
}

void ParamDataset::declare_scalar(const std::string& key, double v) {
  shared_.define_scalar(key, v);
}

void ParamDataset::declare_array(const std::string& key,
                                 std::vector<double> vals) {
  shared_.define_array(key, std::move(vals));
}

VarStore ParamDataset::snapshot_shared() {
  ++shared_reads_;
  return shared_;
}

void ParamDataset::install_shared(VarStore v) {
  shared_ = std::move(v);
  ++shared_writes_;
}

size_t ParamDataset::size() const {
  size_t n = 0;
  for (const auto& p : partitions_) n += p.samples.size();
  return n;
}

void ParamDataset::drop_pending() {
  for (auto& p : partitions_)
    for (auto& s : p.samples) s.pending.clear();
}

std::vector<size_t> ParamDataset::processing_order(const Partition& p,
                                                   uint64_t dataset_seed,
                                                   uint64_t iteration,
                                                   bool reshuffle) {
  std::vector<size_t> order(p.samples.size());
  std::iota(order.begin(), order.end(), 0);
  const uint64_t iter_salt = reshuffle ? iteration : 0;
  auto g = rng::make_engine(dataset_seed, {kOrderShuffle, iter_salt, p.index});
  rng::shuffle(order, g);
  return order;
}

std::mt19937_64 ParamDataset::partition_rng(uint64_t dataset_seed,
                                            uint64_t iteration,
                                            uint32_t partition_index) {
  return rng::make_engine(dataset_seed,
                          {kProcessStream, iteration, partition_index});
}

ParamDataset::PassResult ParamDataset::run_pass(
    const std::vector<uint32_t>& parts, const ProcessFn& process, int m,
    const RunOptions& options) {
  const auto coord_start = Clock::now();
  const bool sampled = options.draws_per_worker.has_value();
  if (m < 1) throw UsageError("run: m must be >= 1");
  if (!sampled && static_cast<size_t>(m) > parts.size())
    throw UsageError("run: m exceeds the number of partitions");

  std::vector<uint32_t> sorted_parts = parts;
  std::sort(sorted_parts.begin(), sorted_parts.end());

  const int weight = options.weight_mode == WeightMode::Reweighted ? m : 1;

  const VarStore snapshot = snapshot_shared();

  // Flattened sample view for with-replacement draws.
  std::vector<const WeightedSample*> flat;
  if (sampled) {
    for (uint32_t pi : sorted_parts)
      for (const auto& s : partitions_[pi].samples) flat.push_back(&s);
    if (flat.empty()) throw UsageError("run: no samples to draw from");
  }

  struct WorkerState {
    ThreadTransform transform;
    VarStore final_store;
    std::vector<TentativeRun::JournalEntry> journal;
    Clock::time_point start, finish;
    uint64_t samples = 0;
    std::exception_ptr error;
  };
  std::vector<WorkerState> states(m);

  const size_t chunk = (sorted_parts.size() + m - 1) / m;
  const uint64_t iter = iteration_;
  const uint64_t dataset_seed = seed_;

  auto worker_body = [&](int w) {
    WorkerState& st = states[w];
    st.start = Clock::now();
    try {
      SharedVars shared(snapshot, &st.transform);
      LocalVars local;
      if (sampled) {
        auto g = rng::make_engine(dataset_seed,
                                  {kWorkerDraws, iter, uint64_t(w)});
        const uint32_t n = *options.draws_per_worker;
        for (uint32_t d = 0; d < n; ++d) {
          const auto& s = *flat[rng::uniform_below(g, flat.size())];
          shared.begin_sample(nullptr, weight);
          process(s.element, weight, shared, local, g);
          shared.end_sample();
          ++st.samples;
        }
      } else {
        const size_t lo = std::min(size_t(w) * chunk, sorted_parts.size());
        const size_t hi = std::min(lo + chunk, sorted_parts.size());
        for (size_t pi = lo; pi < hi; ++pi) {
          Partition& part = partitions_[sorted_parts[pi]];
          const auto order = processing_order(
              part, dataset_seed, iter, options.reshuffle_each_iteration);
          auto g = partition_rng(dataset_seed, iter, part.index);
          for (size_t k : order) {
            WeightedSample& s = part.samples[k];
            st.journal.push_back(
                {&s, s.local, std::move(s.pending)});
            s.pending.clear();
            for (const PendingOp& op : st.journal.back().old_pending)
              shared.execute_delayed(op);
            shared.begin_sample(&s, weight);
            local.bind(&s.local);
            process(s.element, weight, shared, local, g);
            local.unbind();
            shared.end_sample();
            ++st.samples;
          }
        }
      }
      st.final_store = std::move(shared.store());
    } catch (...) {
      st.error = std::current_exception();
    }
    st.finish = Clock::now();
  };

  const auto spawn_at = Clock::now();
  if (m == 1) {
    worker_body(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(m);
    for (int w = 0; w < m; ++w) threads.emplace_back(worker_body, w);
    for (auto& t : threads) t.join();
  }

  // Abort: undo sample-side effects and leave the dataset untouched.
  for (int w = 0; w < m; ++w) {
    if (states[w].error) {
      for (auto& st : states) {
        for (auto it = st.journal.rbegin(); it != st.journal.rend(); ++it) {
          it->sample->local = std::move(it->old_local);
          it->sample->pending = std::move(it->old_pending);
        }
      }
      std::rethrow_exception(states[w].error);
    }
  }

  PassResult result;
  result.report.iteration = iter;
  result.report.weight = weight;
  result.report.threads = m;
  Clock::time_point release = states[0].finish;
  for (const auto& st : states) release = std::max(release, st.finish);
  for (const auto& st : states) {
    WorkerTiming t;
    t.compute_ms = ms_between(st.start, st.finish);
    t.wait_ms = ms_between(st.finish, release);
    t.samples = st.samples;
    result.report.workers.push_back(t);
    result.report.samples_total += st.samples;
  }

  std::vector<const ThreadTransform*> tfs;
  tfs.reserve(m);
  for (const auto& st : states) tfs.push_back(&st.transform);

  if (m == 1) {
    // Sequential fast path: the replica state is exactly the hand-written
    // sequential execution; no transform/combine distortion.
    result.report.sequential_fast_path = true;
    if (options.capture_combine_report) {
      combine(tfs, snapshot, &result.combine_report);
      result.combine_report.sequential_fast_path = true;
    }
    result.combined = std::move(states[0].final_store);
  } else {
    result.combined =
        combine(tfs, snapshot,
                options.capture_combine_report ? &result.combine_report
                                               : nullptr);
  }
  for (auto& st : states) {
    result.transforms.push_back(std::move(st.transform));
    for (auto& e : st.journal) result.journal.push_back(std::move(e));
  }
  // Coordinator synchronization cost (the single-machine analogue of the
  // communication time): snapshotting, combining, and journal bookkeeping.
  result.report.combine_ms = ms_between(coord_start, spawn_at) +
                             ms_between(release, Clock::now());
  return result;
}

SyncReport ParamDataset::run_iteration(const ProcessFn& process, int m,
                                       const RunOptions& options) {
  const auto wall_start = Clock::now();
  std::vector<uint32_t> all(partitions_.size());
  std::iota(all.begin(), all.end(), 0);
  PassResult r = run_pass(all, process, m, options);
  const auto install_start = Clock::now();
  install_shared(std::move(r.combined));
  last_report_ = std::move(r.combine_report);
  ++iteration_;
  const auto done = Clock::now();
  r.report.combine_ms += ms_between(install_start, done);
  r.report.wall_ms = ms_between(wall_start, done);
  return r.report;
}

TentativeRun ParamDataset::run_partitions_tentative(
    const std::vector<uint32_t>& parts, const ProcessFn& process, int m,
    const RunOptions& options) {
  std::unordered_set<uint32_t> seen;
  for (uint32_t p : parts) {
    if (p >= partitions_.size())
      throw UsageError("tentative run: partition index out of range");
    if (!seen.insert(p).second)
      throw UsageError("tentative run: duplicate partition index");
  }
  const auto wall_start = Clock::now();
  PassResult r = run_pass(parts, process, m, options);
  TentativeRun out;
  out.combined_ = std::move(r.combined);
  out.report_ = std::move(r.report);
  out.report_.wall_ms = ms_between(wall_start, Clock::now());
  out.journal_ = std::move(r.journal);
  return out;
}

double ParamDataset::map_reduce(const MapFn& map, const ReduceFn& reduce,
                                double init) const {
  double acc = init;
  for (const auto& p : partitions_)
    for (const auto& s : p.samples) acc = reduce(acc, map(s.element));
  return acc;
}

double ParamDataset::mean_loss(const LossFn& loss) {
  const size_t n = size();
  if (n == 0) throw UsageError("mean_loss: empty dataset");
  double total = 0.0;
  for (const auto& p : partitions_)
    for (const auto& s : p.samples) total += loss(shared_, s.element);
  return total / static_cast<double>(n);
}

double ParamDataset::mean_loss_on(const std::vector<uint32_t>& parts,
                                  VarStore& vars, const LossFn& loss) const {
  double total = 0.0;
  size_t n = 0;
  for (uint32_t pi : parts) {
    for (const auto& s : partitions_.at(pi).samples) {
      total += loss(vars, s.element);
      ++n;
    }
  }
  if (n == 0) throw UsageError("mean_loss_on: no samples in partitions");
  return total / static_cast<double>(n);
}

std::vector<uint8_t> ParamDataset::checkpoint() const {
  ByteWriter body;

  // META section payload.
  ByteWriter meta;
  meta.u64(iteration_);
  meta.u64(seed_);
  meta.u32(static_cast<uint32_t>(partitions_.size()));

  // SVAR section payload.
  ByteWriter svar;
  write_varstore(svar, shared_);

  // PART section payload.
  ByteWriter part;
  part.u32(static_cast<uint32_t>(partitions_.size()));
  for (const auto& p : partitions_) {
    part.u32(p.index);
    part.u64(p.rng_seed);
    part.u64(p.samples.size());
    for (const auto& s : p.samples) {
      part.u64(s.id);
      write_element(part, s.element);
      write_varstore(part, s.local);
      write_pending(part, s.pending);
    }
  }

  ByteWriter out;
  out.raw("SPLS", 4);
  out.u32(1);  // version
  auto section = [&out](const char tag[4], ByteWriter& w) {
    out.raw(tag, 4);
    auto bytes = w.take();
    out.u64(bytes.size());
    out.raw(bytes.data(), bytes.size());
  };
  section("META", meta);
  section("SVAR", svar);
  section("PART", part);
  return out.take();
}

ParamDataset ParamDataset::restore(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::string(magic, 4) != "SPLS")
    throw FormatError("checkpoint: bad magic bytes");
  const uint32_t version = r.u32();
  if (version != 1)
    throw FormatError("checkpoint: unsupported version " +
                      std::to_string(version));

  ParamDataset ds;
  bool got_meta = false, got_svar = false, got_part = false;
  while (r.remaining() > 0) {
    char tag[4];
    for (char& c : tag) c = static_cast<char>(r.u8());
    const uint64_t len = r.u64();
    if (len > r.remaining()) throw FormatError("checkpoint: truncated section");
    const std::string name(tag, 4);
    if (name == "META") {
      ds.iteration_ = r.u64();
      ds.seed_ = r.u64();
      r.u32();  // partition count echoed in PART
      got_meta = true;
    } else if (name == "SVAR") {
      ds.shared_ = read_varstore(r);
      got_svar = true;
    } else if (name == "PART") {
      const uint32_t np = r.u32();
      ds.partitions_.resize(np);
      for (uint32_t i = 0; i < np; ++i) {
        Partition& p = ds.partitions_[i];
        p.index = r.u32();
        p.rng_seed = r.u64();
        const uint64_t ns = r.u64();
        p.samples.resize(ns);
        for (uint64_t k = 0; k < ns; ++k) {
          WeightedSample& s = p.samples[k];
          s.id = r.u64();
          s.element = read_element(r);
          s.local = read_varstore(r);
          s.pending = read_pending(r);
        }
      }
      got_part = true;
    } else {
      throw FormatError("checkpoint: unknown section '" + name + "'");
    }
  }
  if (!got_meta || !got_svar || !got_part)
    throw FormatError("checkpoint: missing required section");
  return ds;
}

}  // namespace splash
