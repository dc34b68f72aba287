#include "dingo/krylov.hpp"

#include <cmath>

namespace dingo {

const char* to_string(SolveFlag f) {
  switch (f) {
    case SolveFlag::tolerance_met: return "tolerance_met";
    case SolveFlag::cap_reached: return "cap_reached";
    case SolveFlag::breakdown: return "breakdown";
  }
  return "?";
}

namespace {

SolveReport trivial_report(std::size_t n, SolveFlag flag) {
  SolveReport r;
  r.solution = zeros(n);
  r.relative_residual = 0.0;
  r.converged = flag == SolveFlag::tolerance_met;
  r.flag = flag;
  return r;
}

void require_symmetric(const LinearMap& a, const char* op) {
  if (!a.symmetric() || a.rows() != a.cols())
    throw DimensionError(std::string(op) + ": operator must be square symmetric");
}

}  // namespace

SolveReport cg_solve(const LinearMap& a, const Vector& b, std::size_t cap,
                     double tol) {
  require_symmetric(a, "cg_solve");
  require_same_dim(b.size(), a.cols(), "cg_solve");
  const double bnorm = norm(b);
  if (bnorm == 0.0) return trivial_report(b.size(), SolveFlag::tolerance_met);

  SolveReport rep;
  rep.solution = zeros(b.size());
  Vector r = b;
  Vector p = b;
  Vector ap(b.size());
  double rs = norm_sq(r);

  for (std::size_t k = 0; k < cap; ++k) {
    a.apply(p, ap);
    const double pap = dot(p, ap);
    if (pap <= 0.0) {
      // non-positive curvature: the operator was not positive definite
      rep.flag = SolveFlag::breakdown;
      rep.converged = false;
      return rep;
    }
    const double step = rs / pap;
    axpy(step, p, rep.solution);
    axpy(-step, ap, r);
    const double rs_next = norm_sq(r);
    rep.iterations = k + 1;
    rep.relative_residual = std::sqrt(rs_next) / bnorm;
    rep.history.push_back(rep.relative_residual);
    if (rep.relative_residual <= tol) {
      rep.converged = true;
      rep.flag = SolveFlag::tolerance_met;
      return rep;
    }
    const double beta = rs_next / rs;
    rs = rs_next;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
  }
  rep.flag = SolveFlag::cap_reached;
  rep.converged = false;
  return rep;
}

SolveReport lsmr_solve(const LinearMap& a, const Vector& b, std::size_t cap,
                       double tol) {
  require_same_dim(b.size(), a.rows(), "lsmr_solve");
  const std::size_t n = a.cols();

  const double beta1 = norm(b);
  if (beta1 == 0.0) return trivial_report(n, SolveFlag::tolerance_met);

  Vector u = scaled(1.0 / beta1, b);
  Vector v = a.apply_transpose(u);
  double alpha = norm(v);
  if (alpha == 0.0) {
    // A^T b = 0: the zero vector already minimises |A^T (A x - b)|.
    return trivial_report(n, SolveFlag::breakdown);
  }
  scale(1.0 / alpha, v);

  const double norm_atb = alpha * beta1;
  double alphabar = alpha;
  double zetabar = alpha * beta1;
  double rho_prev = 1.0, rhobar_prev = 1.0;
  double cbar = 1.0, sbar = 0.0;

  Vector h = v;
  Vector hbar = zeros(n);
  Vector tmp_m(a.rows()), tmp_n(n);

  SolveReport rep;
  rep.solution = zeros(n);

  for (std::size_t k = 0; k < cap; ++k) {
    // Golub-Kahan step: beta*u = A v - alpha*u ; alpha'*v = A^T u - beta*v
    a.apply(v, tmp_m);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = tmp_m[i] - alpha * u[i];
    const double beta = norm(u);
    double alpha_next = 0.0;
    if (beta > 0.0) {
      scale(1.0 / beta, u);
      a.apply_transpose(u, tmp_n);
      for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = tmp_n[i] - beta * v[i];
      alpha_next = norm(v);
      if (alpha_next > 0.0) scale(1.0 / alpha_next, v);
    }

    const double rho = std::hypot(alphabar, beta);
    if (rho == 0.0) break;  // fully annihilated; current iterate is exact
    const double c = alphabar / rho;
    const double s = beta / rho;
    const double theta_next = s * alpha_next;
    alphabar = c * alpha_next;

    const double thetabar = sbar * rho;
    const double rhobar = std::hypot(cbar * rho, theta_next);
    cbar = cbar * rho / rhobar;
    sbar = theta_next / rhobar;
    const double zeta = cbar * zetabar;
    zetabar = -sbar * zetabar;

    for (std::size_t i = 0; i < n; ++i)
      hbar[i] = h[i] - (thetabar * rho / (rho_prev * rhobar_prev)) * hbar[i];
    axpy(zeta / (rho * rhobar), hbar, rep.solution);
    for (std::size_t i = 0; i < n; ++i)
      h[i] = v[i] - (theta_next / rho) * h[i];

    rho_prev = rho;
    rhobar_prev = rhobar;
    alpha = alpha_next;

    rep.iterations = k + 1;
    rep.relative_residual = std::abs(zetabar) / norm_atb;
    rep.history.push_back(rep.relative_residual);
    if (rep.relative_residual <= tol) {
      rep.converged = true;
      rep.flag = SolveFlag::tolerance_met;
      return rep;
    }
    if (beta == 0.0 || alpha_next == 0.0) break;  // Krylov space exhausted
  }
  rep.flag = rep.converged ? SolveFlag::tolerance_met : SolveFlag::cap_reached;
  return rep;
}

SolveReport minres_minnorm_solve(const LinearMap& a, const Vector& b,
                                 std::size_t cap, double tol) {
  require_symmetric(a, "minres_minnorm_solve");
  require_same_dim(b.size(), a.cols(), "minres_minnorm_solve");
  if (norm(b) == 0.0)
    return trivial_report(b.size(), SolveFlag::tolerance_met);
  // lsmr_solve reports breakdown exactly when A b = 0 with b != 0, i.e. the
  // right-hand side carries no component in the range of A.
  return lsmr_solve(a, b, cap, tol);
}

SolveReport damped_lsq_solve(const LinearMap& h, double phi, const Vector& b,
                             std::size_t cap, double tol) {
  require_symmetric(h, "damped_lsq_solve");
  require_same_dim(b.size(), h.cols(), "damped_lsq_solve");
  if (!(phi > 0.0))
    throw std::invalid_argument("damped_lsq_solve: phi must be positive");

  const StackedMap stacked(h, phi);
  Vector b_padded = b;
  b_padded.resize(2 * b.size(), 0.0);

  SolveReport rep = lsmr_solve(stacked, b_padded, cap, tol);
  if (rep.flag == SolveFlag::breakdown) {
    // H b = 0: x = 0 solves (H^2 + phi^2 I) x = H b exactly.
    rep.flag = SolveFlag::tolerance_met;
    rep.converged = true;
  }
  const double bound = norm(b) / phi * (1.0 + 1e-9);
  if (norm(rep.solution) > bound)
    throw InvariantError(
        "damped_lsq_solve: |x| exceeded |b|/phi, stacked operator bound violated");
  return rep;
}

}  // namespace dingo
