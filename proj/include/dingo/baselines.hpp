#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dingo/comms.hpp"
#include "dingo/dingo.hpp"

namespace dingo {

enum class BaselineMethod { giant, gd, sync_sgd };

BaselineMethod baseline_method_from_string(const std::string& s);
const char* to_string(BaselineMethod m);

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::gd;
  double lr = 0.1;               // gd / sync_sgd
  double batch_fraction = 0.2;   // sync_sgd, fraction of the local shard
  std::size_t cg_cap = 50;       // giant local solves
  double cg_tol = 1e-8;
  double ls_ratio = 0.5;         // giant objective backtracking
  std::size_t ls_grid = 51;
  double armijo = 1e-4;
  double grad_tol = 1e-8;
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;        // sync_sgd sampling stream

  void validate() const;
};

struct BaselineIterate {
  int t = 0;
  double f = 0.0;
  double grad_norm = 0.0;  // for sync_sgd this is the sampled gradient's norm
  double alpha = 0.0;
  std::size_t rounds_used = 0;
  std::size_t cumulative_rounds = 0;
};

struct BaselineResult {
  std::vector<BaselineIterate> trace;
  Vector w_final;
  double f_final = 0.0;
  double grad_norm_final = 0.0;
  RunStatus status = RunStatus::max_iters;
  std::string diagnostic;
};

struct BaselineStep {
  Vector w_next;
  double f = 0.0;          // objective at the step's starting point
  double grad_norm = 0.0;  // gradient norm at the starting point
  double alpha = 0.0;
  bool converged = false;  // grad_norm fell below tolerance, no step taken
};

/// One GIANT iteration: gradient round, local Newton-CG solves against the
/// full gradient, then objective-value backtracking with the trial values
/// returned as scalars. Exactly six communication rounds.
BaselineStep giant_step(ClusterEnv& env, const Vector& w,
                        const BaselineConfig& cfg);

/// Full-gradient descent step; two communication rounds.
BaselineStep gd_step(ClusterEnv& env, const Vector& w,
                     const BaselineConfig& cfg);

/// Synchronous minibatch SGD step: every worker samples a fixed-seed
/// minibatch of its shard for iteration t. Two communication rounds.
/// With batch_fraction = 1 this reproduces gd_step bit for bit.
BaselineStep sgd_step(ClusterEnv& env, const Vector& w,
                      const BaselineConfig& cfg, std::size_t t);

BaselineResult baseline_run(ClusterEnv& env, const BaselineConfig& cfg,
                            Vector w0);

/// Minibatch seed for (run seed, iteration, worker); exposed so tests can
/// reproduce the exact sample a worker drew.
std::uint64_t minibatch_seed(std::uint64_t run_seed, std::size_t t,
                             std::size_t worker);

}  // namespace dingo
