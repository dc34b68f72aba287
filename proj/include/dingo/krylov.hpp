#pragma once

#include <cstddef>
#include <vector>

#include "dingo/linops.hpp"

namespace dingo {

enum class SolveFlag { tolerance_met, cap_reached, breakdown };

const char* to_string(SolveFlag f);

/// Result of an iterative sub-problem solve. `relative_residual` is always
/// the verifiable certificate form the caller checks:
///   cg_solve:              |A x - b| / |b|
///   minres_minnorm_solve:  |A^2 x - A b| / |A b|
///   damped_lsq_solve:      |(H^2 + phi^2 I) x - H b| / |H b|
/// `history` records that quantity after every iteration.
struct SolveReport {
  Vector solution;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  SolveFlag flag = SolveFlag::tolerance_met;
  std::vector<double> history;
};

/// Conjugate gradients on a symmetric positive-definite operator, started
/// from zero. Every iterate x_j satisfies <x_j, b> > 0, which the Case-3
/// direction construction relies on. A non-positive curvature direction
/// stops the solve with SolveFlag::breakdown and the best iterate so far.
SolveReport cg_solve(const LinearMap& a, const Vector& b, std::size_t cap,
                     double tol);

/// Minimum-norm least-squares solution x ~ A^+ b for symmetric, possibly
/// singular A. Iterates live in span{Ab, A^3 b, ...} (a subspace of the range
/// of A), so the returned solution carries no null-space component. The
/// reported residual |A^2 x - A b| / |A b| is non-increasing by construction.
/// If A b = 0 while b != 0 the system carries no usable information and the
/// solve reports breakdown with x = 0.
SolveReport minres_minnorm_solve(const LinearMap& a, const Vector& b,
                                 std::size_t cap, double tol);

/// Damped least-squares solve x ~ (H^2 + phi^2 I)^{-1} H b for symmetric H,
/// phi > 0, run matrix-free on the stacked operator [H; phi*I]. The exit
/// iterate always satisfies |x| <= |b| / phi (checked, with slack 1e-9).
/// If H b = 0 the exact solution x = 0 is returned with tolerance_met.
SolveReport damped_lsq_solve(const LinearMap& h, double phi, const Vector& b,
                             std::size_t cap, double tol);

/// LSMR core over an arbitrary operator: minimises |A x - b| while the
/// monitored quantity |A^T (A x - b)| decreases monotonically; that quantity,
/// relative to |A^T b|, is what the report carries. Both solvers above are
/// thin wrappers around this.
SolveReport lsmr_solve(const LinearMap& a, const Vector& b, std::size_t cap,
                       double tol);

}  // namespace dingo
