#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dingo/comms.hpp"
#include "dingo/krylov.hpp"

namespace dingo {

/// Runtime condition the optimizer cannot recover from but which carries
/// user-visible information (vanishing Hessian-gradient product, exhausted
/// line-search grid, direction without a descent certificate).
struct DiagnosticError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DingoConfig {
  double theta = 1e-4;
  double phi = 1e-6;
  double rho = 1e-4;
  double grad_tol = 1e-8;     // stop once |g| falls below this
  std::size_t max_iters = 100;
  std::size_t solver_cap = 50;
  double solver_tol = 1e-8;
  double ls_ratio = 0.5;      // step grid {1, ratio, ratio^2, ...}
  std::size_t ls_grid = 51;
  bool exact_solves = false;  // sub-problems at tol 1e-14, cap dim+5

  void validate() const;
  std::size_t effective_cap(std::size_t dim) const {
    return exact_solves ? dim + 5 : solver_cap;
  }
  double effective_tol() const { return exact_solves ? 1e-14 : solver_tol; }
};

enum class StepCase { case1, case2, case3, converged };
const char* to_string(StepCase c);

/// Per-worker record of one iteration: achieved residual certificates for the
/// three sub-problem solves (negative when that solve did not run), solver
/// flags, and the Case-3 multiplier when the worker was in the active set.
struct WorkerCert {
  double eps1 = -1.0, eps2 = -1.0, eps3 = -1.0;
  std::size_t iters1 = 0, iters2 = 0, iters3 = 0;
  SolveFlag flag1 = SolveFlag::tolerance_met;
  SolveFlag flag2 = SolveFlag::tolerance_met;
  SolveFlag flag3 = SolveFlag::tolerance_met;
  bool in_active_set = false;
  double lambda = std::numeric_limits<double>::quiet_NaN();
};

struct IterateState {
  int t = 0;
  Vector w;   // point the iteration started from
  Vector g;   // gradient at w
  Vector hg;  // Hessian-gradient product at w (empty on the terminal row)
  StepCase case_taken = StepCase::converged;
  double alpha = 0.0;
  double f = 0.0;
  double grad_norm = 0.0;
  double dir_dot_hg = 0.0;  // <p, Hg>, the descent certificate
  std::size_t active_set_size = 0;
  /// When only part of the cluster was in the Case-3 active set, the bound
  /// theta*phi <= |Hg|/|g| must hold; recorded here and asserted by tests.
  bool partial_active_set_bound_ok = true;
  std::vector<WorkerCert> workers;
  std::size_t rounds_used = 0;
  std::size_t cumulative_rounds = 0;
};

enum class RunStatus { converged, max_iters, diagnostic };
const char* to_string(RunStatus s);

struct DingoResult {
  std::vector<IterateState> trace;
  Vector w_final;
  Vector g_final;
  double f_final = 0.0;
  RunStatus status = RunStatus::max_iters;
  std::string diagnostic;
};

struct GradientRound {
  Vector g;
  double f;
};

/// Broadcast w, reduce the mean local gradient (the local objective values
/// piggyback as scalars). Two communication rounds.
GradientRound gradient_round(ClusterEnv& env, const Vector& w);

struct CaseVectors {
  Vector hg;     // mean local Hessian-gradient product
  Vector v1bar;  // mean minimum-norm solve results
  Vector v2bar;  // mean damped solve results
  std::vector<WorkerCert> workers;
};

/// Broadcast (w, g); each worker computes its Hessian-gradient product and
/// the two candidate directions, caching the damped one for a possible
/// Case-3 round. Two communication rounds.
CaseVectors case_vectors_round(ClusterEnv& env, const Vector& w,
                               const Vector& g, const DingoConfig& cfg);

struct CaseSelection {
  StepCase which = StepCase::case3;
  /// The inner product that passed the test, for Case 1/2; the caller reuses
  /// it as -<p, Hg> so the certificate is exact.
  double inner = 0.0;
};

CaseSelection select_case(const Vector& hg, const Vector& v1bar,
                          const Vector& v2bar, const Vector& g, double theta);

/// Case-3 multiplier: (theta*|g|^2 - <v2, Hg>) / <v3, Hg>. Requires
/// <v3, Hg> > 0 (guaranteed by CG started from zero) and a worker in the
/// active set (numerator positive); the resulting direction -v2 - lambda*v3
/// meets <p, Hg> = -theta*|g|^2 up to roundoff.
double case3_lambda(const Vector& v2, const Vector& v3, const Vector& hg,
                    double g_norm_sq, double theta);

struct Case3Result {
  Vector p;
  std::size_t active_set_size = 0;
  bool partial_active_set_bound_ok = true;
  std::vector<WorkerCert> workers;  // eps3 / lambda / membership filled
};

/// Broadcast Hg; workers in the active set solve the positive-definite
/// system (H^2 + phi^2 I) v3 = Hg by CG and form the constrained direction,
/// the rest keep their damped direction. Two communication rounds.
Case3Result case3_round(ClusterEnv& env, const Vector& hg, double g_norm_sq,
                        const DingoConfig& cfg);

struct LineSearchResult {
  double alpha = 1.0;
  std::size_t grid_index = 0;
  Vector g_next;  // gradient at the accepted point, reused next iteration
  double f_next = 0.0;
};

/// Backtracking on the squared gradient norm: the largest grid step with
/// |g(w + a p)|^2 <= |g|^2 + 2 a rho <p, Hg>. Workers return the gradient at
/// every trial point in one reduce; two communication rounds.
LineSearchResult line_search(ClusterEnv& env, const Vector& w, const Vector& p,
                             double dir_dot_hg, double g_norm_sq,
                             const DingoConfig& cfg);

DingoResult dingo_run(ClusterEnv& env, const DingoConfig& cfg, Vector w0);

struct InexactnessCert {
  double eps1 = -1.0, eps2 = -1.0, eps3 = -1.0;
  bool flagged = false;           // some achieved certificate was >= 1
  bool eps3_within_bound = true;  // eps3 < sqrt(phi^2/(k_hat^2+phi^2)), advisory
};

/// Summarise achieved residual certificates for one iteration. `k_hat` is an
/// optional caller-supplied estimate of the local gradient Lipschitz constant
/// used for the advisory Case-3 bound.
std::vector<InexactnessCert> check_inexactness(
    const IterateState& it, const DingoConfig& cfg,
    std::optional<double> k_hat = std::nullopt);

}  // namespace dingo
