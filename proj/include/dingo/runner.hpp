#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dingo/baselines.hpp"
#include "dingo/comms.hpp"
#include "dingo/dingo.hpp"
#include "dingo/trace.hpp"

namespace dingo {

/// A fully-specified experiment: problem, method, hyper-parameters, seed and
/// output location. Everything random in the run derives from `seed`.
struct RunSpec {
  std::string method = "dingo";  // dingo | giant | gd | sync-sgd
  std::string problem = "synthetic-softmax:n=1000,p=20,C=5";
  std::size_t workers = 4;
  std::uint64_t seed = 0;
  std::string out;  // trace CSV path; empty keeps the trace in memory only
  std::size_t max_iters = 100;
  double grad_tol = 1e-8;
  std::optional<double> reg;  // default depends on the objective kind

  // dingo hyper-parameters
  double theta = 1e-4;
  double phi = 1e-6;
  double rho = 1e-4;
  std::size_t solver_cap = 50;
  double solver_tol = 1e-8;
  double ls_ratio = 0.5;
  std::size_t ls_grid = 51;
  bool exact_solves = false;

  // baseline hyper-parameters
  double lr = 0.1;
  double batch_fraction = 0.2;

  DingoConfig dingo_config() const;
  BaselineConfig baseline_config() const;
  void validate() const;
};

struct ProblemSetup {
  Dataset data;
  Objective objective;
  std::vector<Shard> shards;
};

/// Parse the problem string, generate or load the dataset, and partition it.
/// Grammar:
///   synthetic-softmax:n=..,p=..,C=..[,decay=..][,noise=..][,scale=..]
///   synthetic-logistic:n=..,p=..[,decay=..][,scale=..]
///   synthetic-lstsq:n=..,p=..[,decay=..][,noise=..][,scale=..]
///   csv-softmax:PATH | csv-logistic:PATH | csv-lstsq:PATH
///   sparse-softmax:PATH | sparse-logistic:PATH
/// Unknown forms or option keys are rejected.
ProblemSetup build_problem(const RunSpec& spec);

struct RunOutcome {
  std::vector<TraceRow> rows;
  RunStatus status = RunStatus::max_iters;
  std::string diagnostic;
  double f_final = 0.0;
  double grad_norm_final = 0.0;
  std::size_t total_rounds = 0;
  double wall_seconds = 0.0;
};

/// Execute one spec; writes the trace CSV (atomically) when `out` is set,
/// including on diagnostic failures, so partial traces survive.
RunOutcome run(const RunSpec& spec);

/// Run several specs over the same problem/seed/worker count and write one
/// long-format CSV keyed by method. Mismatched problems are refused.
std::vector<RunOutcome> compare(const std::vector<RunSpec>& specs,
                                const std::string& out);

MetaList describe(const RunSpec& spec);

}  // namespace dingo
