#include "dingo/dingo.hpp"

#include <cmath>

namespace dingo {

void DingoConfig::validate() const {
  if (!(theta > 0.0)) throw ConfigError("theta must be positive");
  if (!(phi > 0.0)) throw ConfigError("phi must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must be in (0,1)");
  if (grad_tol < 0.0) throw ConfigError("grad-tol must be non-negative");
  if (max_iters < 1) throw ConfigError("max-iters must be at least 1");
  if (solver_cap < 1) throw ConfigError("solver-cap must be at least 1");
  if (solver_tol < 0.0) throw ConfigError("solver-tol must be non-negative");
  if (!(ls_ratio > 0.0 && ls_ratio < 1.0))
    throw ConfigError("line-search ratio must be in (0,1)");
  if (ls_grid < 1) throw ConfigError("line-search grid must be non-empty");
}

const char* to_string(StepCase c) {
  switch (c) {
    case StepCase::case1: return "case1";
    case StepCase::case2: return "case2";
    case StepCase::case3: return "case3";
    case StepCase::converged: return "converged";
  }
  return "?";
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::diagnostic: return "diagnostic";
  }
  return "?";
}

GradientRound gradient_round(ClusterEnv& env, const Vector& w) {
  env.broadcast("w", {w});
  ReduceResult res = env.reduce("gradient", [](WorkerContext& wk) {
    const Vector& w = wk.received().at(0);
    wk.scratch()["w"] = w;
    WorkerReturn out;
    out.slots = {wk.gradient(w)};
    out.meta = {wk.value(w)};
    return out;
  });
  double f = 0.0;
  for (const auto& meta : res.per_worker_meta) f += meta.at(0);
  f /= static_cast<double>(env.worker_count());
  return {std::move(res.combined.at(0)), f};
}

CaseVectors case_vectors_round(ClusterEnv& env, const Vector& w,
                               const Vector& g, const DingoConfig& cfg) {
  if (norm(g) == 0.0)
    throw DiagnosticError("case_vectors_round: gradient is zero");
  env.broadcast("case_setup", {w, g});
  const std::size_t cap = cfg.effective_cap(env.dim());
  const double tol = cfg.effective_tol();
  const double phi = cfg.phi;

  ReduceResult res =
      env.reduce("case_vectors", [cap, tol, phi](WorkerContext& wk) {
        const Vector& w = wk.received().at(0);
        const Vector& g = wk.received().at(1);
        const LocalHessianMap hess = wk.hessian(w);
        Vector hg_local = hess.apply(g);
        SolveReport r1 = minres_minnorm_solve(hess, g, cap, tol);
        SolveReport r2 = damped_lsq_solve(hess, phi, g, cap, tol);
        wk.scratch()["w"] = w;
        wk.scratch()["g"] = g;
        wk.scratch()["v2"] = r2.solution;
        WorkerReturn out;
        out.meta = {r1.relative_residual, static_cast<double>(r1.iterations),
                    static_cast<double>(static_cast<int>(r1.flag)),
                    r2.relative_residual, static_cast<double>(r2.iterations),
                    static_cast<double>(static_cast<int>(r2.flag))};
        out.slots = {std::move(hg_local), std::move(r1.solution),
                     std::move(r2.solution)};
        return out;
      });

  CaseVectors cv;
  cv.hg = std::move(res.combined.at(0));
  cv.v1bar = std::move(res.combined.at(1));
  cv.v2bar = std::move(res.combined.at(2));
  cv.workers.resize(env.worker_count());
  for (std::size_t i = 0; i < env.worker_count(); ++i) {
    const auto& meta = res.per_worker_meta[i];
    WorkerCert& cert = cv.workers[i];
    cert.eps1 = meta.at(0);
    cert.iters1 = static_cast<std::size_t>(meta.at(1));
    cert.flag1 = static_cast<SolveFlag>(static_cast<int>(meta.at(2)));
    cert.eps2 = meta.at(3);
    cert.iters2 = static_cast<std::size_t>(meta.at(4));
    cert.flag2 = static_cast<SolveFlag>(static_cast<int>(meta.at(5)));
  }
  return cv;
}

CaseSelection select_case(const Vector& hg, const Vector& v1bar,
                          const Vector& v2bar, const Vector& g, double theta) {
  const double gns = norm_sq(g);
  if (gns == 0.0) throw DiagnosticError("select_case: gradient is zero");
  if (norm(hg) == 0.0)
    throw DiagnosticError(
        "select_case: Hessian-gradient product is exactly zero at a "
        "non-stationary point; the gradient has no component in the range of "
        "the Hessian and no descent direction for the gradient norm exists");
  const double threshold = theta * gns;
  const double inner1 = dot(v1bar, hg);
  if (inner1 >= threshold) return {StepCase::case1, inner1};
  const double inner2 = dot(v2bar, hg);
  if (inner2 >= threshold) return {StepCase::case2, inner2};
  return {StepCase::case3, 0.0};
}

double case3_lambda(const Vector& v2, const Vector& v3, const Vector& hg,
                    double g_norm_sq, double theta) {
  const double denom = dot(v3, hg);
  if (!(denom > 0.0))
    throw InvariantError(
        "case3_lambda: <v3, Hg> must be positive (CG from zero guarantees it)");
  const double numer = -dot(v2, hg) + theta * g_norm_sq;
  if (!(numer > 0.0))
    throw InvariantError(
        "case3_lambda: worker is not in the active set (numerator <= 0)");
  return numer / denom;
}

Case3Result case3_round(ClusterEnv& env, const Vector& hg, double g_norm_sq,
                        const DingoConfig& cfg) {
  env.broadcast("hessian_gradient", {hg});
  const std::size_t cap = cfg.effective_cap(env.dim());
  const double tol = cfg.effective_tol();
  const double phi = cfg.phi;
  const double theta = cfg.theta;

  ReduceResult res =
      env.reduce("case3_directions", [cap, tol, phi, theta](WorkerContext& wk) {
        const Vector& hg = wk.received().at(0);
        const Vector& w = wk.scratch().at("w");
        const Vector& g = wk.scratch().at("g");
        const Vector& v2 = wk.scratch().at("v2");
        const double gns = norm_sq(g);
        const double inner2 = dot(v2, hg);
        WorkerReturn out;
        if (inner2 < theta * gns) {
          const LocalHessianMap hess = wk.hessian(w);
          const StackedMap stacked(hess, phi);
          const GramMap normal(stacked);
          SolveReport r3 = cg_solve(normal, hg, cap, tol);
          if (r3.flag == SolveFlag::breakdown)
            throw InvariantError(
                "case3_round: CG broke down on a positive-definite operator");
          const double lambda = case3_lambda(v2, r3.solution, hg, gns, theta);
          Vector p = scaled(-1.0, v2);
          axpy(-lambda, r3.solution, p);
          out.slots = {std::move(p)};
          out.meta = {1.0, lambda, r3.relative_residual,
                      static_cast<double>(r3.iterations),
                      static_cast<double>(static_cast<int>(r3.flag))};
        } else {
          out.slots = {scaled(-1.0, v2)};
          out.meta = {0.0, 0.0, -1.0, 0.0, 0.0};
        }
        return out;
      });

  Case3Result c3;
  c3.p = std::move(res.combined.at(0));
  c3.workers.resize(env.worker_count());
  for (std::size_t i = 0; i < env.worker_count(); ++i) {
    const auto& meta = res.per_worker_meta[i];
    WorkerCert& cert = c3.workers[i];
    cert.in_active_set = meta.at(0) != 0.0;
    if (cert.in_active_set) {
      cert.lambda = meta.at(1);
      cert.eps3 = meta.at(2);
      cert.iters3 = static_cast<std::size_t>(meta.at(3));
      cert.flag3 = static_cast<SolveFlag>(static_cast<int>(meta.at(4)));
      ++c3.active_set_size;
    }
  }
  if (c3.active_set_size == 0)
    throw std::logic_error(
        "case3_round: active set is empty; Case 2 should have been taken");
  if (c3.active_set_size < env.worker_count()) {
    // Some worker kept a damped direction that passed the descent test, which
    // bounds theta*phi by |Hg|/|g| through |v2| <= |g|/phi and Cauchy-Schwarz.
    c3.partial_active_set_bound_ok =
        cfg.theta * cfg.phi <=
        (norm(hg) / std::sqrt(g_norm_sq)) * (1.0 + 1e-12);
  }
  return c3;
}

LineSearchResult line_search(ClusterEnv& env, const Vector& w, const Vector& p,
                             double dir_dot_hg, double g_norm_sq,
                             const DingoConfig& cfg) {
  if (!(dir_dot_hg <= -cfg.theta * g_norm_sq * (1.0 - 1e-10)))
    throw DiagnosticError(
        "line_search: direction lacks a descent certificate (<p,Hg> = " +
        std::to_string(dir_dot_hg) + " vs required " +
        std::to_string(-cfg.theta * g_norm_sq) + ")");

  env.broadcast("ls_direction", {p});
  const std::size_t k = cfg.ls_grid;
  const double ratio = cfg.ls_ratio;

  ReduceResult res = env.reduce("ls_trials", [k, ratio](WorkerContext& wk) {
    const Vector& p = wk.received().at(0);
    const Vector& w = wk.scratch().at("w");
    WorkerReturn out;
    out.slots.reserve(k + 1);
    Vector values(k);
    double step = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      const Vector trial = add_scaled(w, step, p);
      out.slots.push_back(wk.gradient(trial));
      values[j] = wk.value(trial);
      step *= ratio;
    }
    out.slots.push_back(std::move(values));
    return out;
  });

  double step = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    const Vector& g_trial = res.combined[j];
    if (norm_sq(g_trial) <= g_norm_sq + 2.0 * step * cfg.rho * dir_dot_hg) {
      LineSearchResult ls;
      ls.alpha = step;
      ls.grid_index = j;
      ls.g_next = g_trial;
      ls.f_next = res.combined[k][j];
      return ls;
    }
    step *= ratio;
  }
  throw DiagnosticError(
      "line_search: no step in the grid of " + std::to_string(k) +
      " satisfied the gradient-norm decrease test (|g|^2 = " +
      std::to_string(g_norm_sq) + ", <p,Hg> = " + std::to_string(dir_dot_hg) +
      "); solver output and objective are inconsistent");
}

DingoResult dingo_run(ClusterEnv& env, const DingoConfig& cfg, Vector w0) {
  cfg.validate();
  require_same_dim(w0.size(), env.dim(), "dingo_run");
  check_finite(w0, "dingo_run initial point");
  env.clear_scratch();

  DingoResult result;
  Vector w = std::move(w0);
  env.begin_iteration(0);
  GradientRound first = gradient_round(env, w);
  Vector g = std::move(first.g);
  double f = first.f;

  try {
    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
      env.begin_iteration(static_cast<int>(t));
      const double gn = norm(g);

      IterateState it;
      it.t = static_cast<int>(t);
      it.w = w;
      it.g = g;
      it.grad_norm = gn;
      it.f = f;

      if (gn <= cfg.grad_tol) {
        it.case_taken = StepCase::converged;
        it.rounds_used = env.ledger().rounds_in_iteration(it.t);
        it.cumulative_rounds = env.ledger().rounds;
        result.trace.push_back(std::move(it));
        result.status = RunStatus::converged;
        break;
      }

      const double gns = gn * gn;
      CaseVectors cv = case_vectors_round(env, w, g, cfg);
      const CaseSelection sel =
          select_case(cv.hg, cv.v1bar, cv.v2bar, g, cfg.theta);
      it.workers = std::move(cv.workers);

      Vector p;
      double dir = 0.0;
      switch (sel.which) {
        case StepCase::case1:
          p = scaled(-1.0, cv.v1bar);
          dir = -sel.inner;
          break;
        case StepCase::case2:
          p = scaled(-1.0, cv.v2bar);
          dir = -sel.inner;
          break;
        default: {
          Case3Result c3 = case3_round(env, cv.hg, gns, cfg);
          p = std::move(c3.p);
          dir = dot(p, cv.hg);
          it.active_set_size = c3.active_set_size;
          it.partial_active_set_bound_ok = c3.partial_active_set_bound_ok;
          for (std::size_t i = 0; i < it.workers.size(); ++i) {
            it.workers[i].in_active_set = c3.workers[i].in_active_set;
            it.workers[i].lambda = c3.workers[i].lambda;
            it.workers[i].eps3 = c3.workers[i].eps3;
            it.workers[i].iters3 = c3.workers[i].iters3;
            it.workers[i].flag3 = c3.workers[i].flag3;
          }
          break;
        }
      }
      it.case_taken = sel.which;
      it.dir_dot_hg = dir;
      it.hg = std::move(cv.hg);

      LineSearchResult ls = line_search(env, w, p, dir, gns, cfg);
      it.alpha = ls.alpha;
      it.rounds_used = env.ledger().rounds_in_iteration(it.t);
      it.cumulative_rounds = env.ledger().rounds;
      result.trace.push_back(std::move(it));

      axpy(ls.alpha, p, w);
      g = std::move(ls.g_next);
      f = ls.f_next;
      env.note("gradient_reused");

      if (t + 1 == cfg.max_iters) result.status = RunStatus::max_iters;
    }
  } catch (const DiagnosticError& e) {
    result.status = RunStatus::diagnostic;
    result.diagnostic = e.what();
  }

  if (result.status != RunStatus::diagnostic &&
      result.status != RunStatus::converged && norm(g) <= cfg.grad_tol) {
    // ran out of iterations exactly at the tolerance
    result.status = RunStatus::converged;
  }
  result.w_final = std::move(w);
  result.g_final = std::move(g);
  result.f_final = f;
  return result;
}

std::vector<InexactnessCert> check_inexactness(const IterateState& it,
                                               const DingoConfig& cfg,
                                               std::optional<double> k_hat) {
  std::vector<InexactnessCert> certs;
  certs.reserve(it.workers.size());
  for (const WorkerCert& wc : it.workers) {
    InexactnessCert c;
    c.eps1 = wc.eps1;
    c.eps2 = wc.eps2;
    c.eps3 = wc.eps3;
    c.flagged = (wc.eps1 >= 1.0) || (wc.eps2 >= 1.0) || (wc.eps3 >= 1.0);
    if (k_hat && wc.eps3 >= 0.0) {
      const double bound = std::sqrt(
          cfg.phi * cfg.phi / (*k_hat * *k_hat + cfg.phi * cfg.phi));
      c.eps3_within_bound = wc.eps3 < bound;
    }
    certs.push_back(c);
  }
  return certs;
}

}  // namespace dingo
