#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dingo/problems.hpp"

namespace dingo {

/// Raised when driver/worker traffic breaks the communication model
/// (payload vectors larger than O(d)).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Direction { broadcast, reduce, note };

struct LedgerEntry {
  std::string label;
  Direction direction;
  std::size_t doubles;  // one entry per communicated vector / scalar block
  std::size_t round;
  int iteration;
};

/// Per-run communication accounting. A round is one broadcast or one reduce,
/// counted once regardless of how many workers take part; every communicated
/// vector is logged individually and must be O(d).
struct CommLedger {
  std::size_t rounds = 0;
  std::size_t bytes = 0;
  std::vector<LedgerEntry> entries;
  int iteration = -1;
  std::map<int, std::size_t> rounds_per_iteration;

  std::size_t rounds_in_iteration(int t) const {
    const auto it = rounds_per_iteration.find(t);
    return it == rounds_per_iteration.end() ? 0 : it->second;
  }
};

/// What a worker sees: its shard-local objective and whatever the driver
/// last broadcast to it. Workers keep private scratch vectors across rounds
/// (cached sub-problem solutions); nothing here leaks shard data upward.
class WorkerContext {
 public:
  std::size_t index() const { return index_; }
  std::size_t dim() const { return dim_; }
  std::size_t shard_size() const { return shard_.size(); }
  const std::vector<Vector>& received() const { return received_; }

  double value(const Vector& w) const {
    return local_value(*obj_, *data_, shard_, w);
  }
  Vector gradient(const Vector& w) const {
    return local_gradient(*obj_, *data_, shard_, w);
  }
  Vector gradient_subset(const Vector& w,
                         const std::vector<std::size_t>& indices) const {
    const Shard sub{indices};
    return local_gradient(*obj_, *data_, sub, w);
  }
  Vector hvp(const Vector& w, const Vector& v) const {
    return local_hvp(*obj_, *data_, shard_, w, v);
  }
  LocalHessianMap hessian(Vector w) const {
    return LocalHessianMap(*obj_, *data_, shard_, std::move(w));
  }
  /// Deterministic minibatch of the local shard, in ascending shard order;
  /// fraction 1 returns the whole shard unchanged.
  std::vector<std::size_t> sample_minibatch(double fraction,
                                            std::uint64_t seed) const;

  std::unordered_map<std::string, Vector>& scratch() { return scratch_; }

 private:
  friend class ClusterEnv;
  std::size_t index_ = 0;
  std::size_t dim_ = 0;
  const Objective* obj_ = nullptr;
  const Dataset* data_ = nullptr;
  Shard shard_;
  std::vector<Vector> received_;
  std::unordered_map<std::string, Vector> scratch_;
};

/// One worker's contribution to a reduce: vector slots that get combined in
/// fixed worker order, plus a small per-worker scalar block the driver may
/// read individually (solver certificates and the like, piggybacked on the
/// same round).
struct WorkerReturn {
  std::vector<Vector> slots;
  std::vector<double> meta;
};

struct ReduceResult {
  std::vector<Vector> combined;
  std::vector<std::vector<double>> per_worker_meta;
};

enum class Combine { mean, sum };

/// Simulated driver/worker topology. The driver can only broadcast O(d)
/// vectors to workers and reduce O(d) vectors back; shard data is reachable
/// solely through worker-side computation inside reduce().
class ClusterEnv {
 public:
  ClusterEnv(const Dataset& data, Objective obj, std::vector<Shard> shards);

  std::size_t worker_count() const { return workers_.size(); }
  std::size_t dim() const { return dim_; }
  const Objective& objective() const { return obj_; }

  void broadcast(const std::string& label, const std::vector<Vector>& payload);
  void broadcast(const std::string& label, const std::vector<Vector>& payload,
                 const std::vector<std::size_t>& targets);

  using WorkerFn = std::function<WorkerReturn(WorkerContext&)>;
  ReduceResult reduce(const std::string& label, const WorkerFn& fn,
                      Combine combine = Combine::mean);

  /// Zero-round ledger marker (e.g. a gradient reused from line-search).
  void note(const std::string& label);
  void begin_iteration(int t);

  const CommLedger& ledger() const { return ledger_; }
  CommLedger ledger_report() const { return ledger_; }

  void reset_ledger();
  void clear_scratch();

 private:
  void log_vector(const std::string& label, Direction dir, std::size_t doubles);
  void check_payload(const std::string& label, std::size_t doubles) const;
  void run_workers(const std::function<void(std::size_t)>& body);

  Objective obj_;
  const Dataset* data_;
  std::size_t dim_;
  std::vector<WorkerContext> workers_;
  CommLedger ledger_;
  std::size_t thread_cap_;
};

}  // namespace dingo
