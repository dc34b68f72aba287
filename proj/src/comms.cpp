#include "dingo/comms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

namespace dingo {

std::vector<std::size_t> WorkerContext::sample_minibatch(
    double fraction, std::uint64_t seed) const {
  return sample_without_replacement(shard_.indices, fraction, seed);
}

ClusterEnv::ClusterEnv(const Dataset& data, Objective obj,
                       std::vector<Shard> shards)
    : obj_(obj), data_(&data) {
  obj_.check_compatible(data);
  if (shards.empty()) throw ConfigError("ClusterEnv: need at least one worker");
  dim_ = obj_.dim(data);
  workers_.resize(shards.size());
  for (std::size_t i = 0; i < shards.size(); ++i) {
    if (shards[i].size() == 0)
      throw ConfigError("ClusterEnv: worker " + std::to_string(i) +
                        " has an empty shard");
    workers_[i].index_ = i;
    workers_[i].dim_ = dim_;
    workers_[i].obj_ = &obj_;
    workers_[i].data_ = data_;
    workers_[i].shard_ = std::move(shards[i]);
  }

  thread_cap_ = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DINGO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) thread_cap_ = static_cast<std::size_t>(v);
  }
}

void ClusterEnv::check_payload(const std::string& label,
                               std::size_t doubles) const {
  if (doubles > 3 * dim_)
    throw ProtocolError("payload '" + label + "' of " +
                        std::to_string(doubles) + " doubles exceeds the O(d) "
                        "budget (3*d = " + std::to_string(3 * dim_) + ")");
}

void ClusterEnv::log_vector(const std::string& label, Direction dir,
                            std::size_t doubles) {
  ledger_.bytes += doubles * sizeof(double);
  ledger_.entries.push_back(
      {label, dir, doubles, ledger_.rounds, ledger_.iteration});
}

void ClusterEnv::broadcast(const std::string& label,
                           const std::vector<Vector>& payload) {
  std::vector<std::size_t> all(workers_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  broadcast(label, payload, all);
}

void ClusterEnv::broadcast(const std::string& label,
                           const std::vector<Vector>& payload,
                           const std::vector<std::size_t>& targets) {
  if (targets.empty()) return;  // nothing sent, no round spent
  for (const auto& v : payload) check_payload(label, v.size());
  ledger_.rounds += 1;
  ledger_.rounds_per_iteration[ledger_.iteration] += 1;
  for (const auto& v : payload) log_vector(label, Direction::broadcast, v.size());
  for (std::size_t t : targets) {
    if (t >= workers_.size())
      throw ConfigError("broadcast: no worker " + std::to_string(t));
    workers_[t].received_ = payload;
  }
}

void ClusterEnv::run_workers(const std::function<void(std::size_t)>& body) {
  const std::size_t m = workers_.size();
  const std::size_t threads = std::min(thread_cap_, m);
  if (threads <= 1) {
    for (std::size_t i = 0; i < m; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < m; i += threads) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

ReduceResult ClusterEnv::reduce(const std::string& label, const WorkerFn& fn,
                                Combine combine) {
  const std::size_t m = workers_.size();
  std::vector<WorkerReturn> returns(m);
  run_workers([&](std::size_t i) { returns[i] = fn(workers_[i]); });

  const std::size_t slots = returns[0].slots.size();
  for (std::size_t i = 1; i < m; ++i)
    if (returns[i].slots.size() != slots)
      throw DimensionError("reduce '" + label +
                           "': workers returned differing slot counts");

  ledger_.rounds += 1;
  ledger_.rounds_per_iteration[ledger_.iteration] += 1;

  ReduceResult result;
  result.combined.resize(slots);
  result.per_worker_meta.resize(m);
  for (std::size_t s = 0; s < slots; ++s) {
    const std::size_t len = returns[0].slots[s].size();
    Vector acc(len, 0.0);
    for (std::size_t i = 0; i < m; ++i) {  // fixed worker order
      const Vector& part = returns[i].slots[s];
      require_same_dim(part.size(), len, "reduce slot");
      check_payload(label, part.size());
      log_vector(label, Direction::reduce, part.size());
      axpy(1.0, part, acc);
    }
    if (combine == Combine::mean)
      scale(1.0 / static_cast<double>(m), acc);
    check_finite(acc, "reduce '" + label + "'");
    result.combined[s] = std::move(acc);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!returns[i].meta.empty()) {
      check_payload(label + ".meta", returns[i].meta.size());
      log_vector(label + ".meta", Direction::reduce, returns[i].meta.size());
    }
    result.per_worker_meta[i] = std::move(returns[i].meta);
  }
  return result;
}

void ClusterEnv::note(const std::string& label) {
  ledger_.entries.push_back(
      {label, Direction::note, 0, ledger_.rounds, ledger_.iteration});
}

void ClusterEnv::begin_iteration(int t) { ledger_.iteration = t; }

void ClusterEnv::reset_ledger() { ledger_ = CommLedger{}; }

void ClusterEnv::clear_scratch() {
  for (auto& w : workers_) w.scratch_.clear();
}

}  // namespace dingo
