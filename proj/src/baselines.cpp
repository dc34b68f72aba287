#include "dingo/baselines.hpp"

#include <cmath>

namespace dingo {

BaselineMethod baseline_method_from_string(const std::string& s) {
  if (s == "giant") return BaselineMethod::giant;
  if (s == "gd") return BaselineMethod::gd;
  if (s == "sync-sgd" || s == "sync_sgd" || s == "sgd")
    return BaselineMethod::sync_sgd;
  throw ConfigError("unknown baseline method: " + s);
}

const char* to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::giant: return "giant";
    case BaselineMethod::gd: return "gd";
    case BaselineMethod::sync_sgd: return "sync-sgd";
  }
  return "?";
}

void BaselineConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0))
    throw ConfigError("batch fraction must be in (0,1]");
  if (cg_cap < 1) throw ConfigError("cg cap must be at least 1");
  if (cg_tol < 0.0) throw ConfigError("cg tol must be non-negative");
  if (!(ls_ratio > 0.0 && ls_ratio < 1.0))
    throw ConfigError("line-search ratio must be in (0,1)");
  if (ls_grid < 1) throw ConfigError("line-search grid must be non-empty");
  if (!(armijo > 0.0 && armijo < 1.0))
    throw ConfigError("armijo parameter must be in (0,1)");
  if (grad_tol < 0.0) throw ConfigError("grad-tol must be non-negative");
  if (max_iters < 1) throw ConfigError("max-iters must be at least 1");
}

std::uint64_t minibatch_seed(std::uint64_t run_seed, std::size_t t,
                             std::size_t worker) {
  // splitmix-style mix so the (seed, t, worker) streams do not collide
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (t + 1) +
                    0xbf58476d1ce4e5b9ULL * (worker + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

GradientRound mean_gradient(ClusterEnv& env, const Vector& w) {
  return gradient_round(env, w);
}

}  // namespace

BaselineStep giant_step(ClusterEnv& env, const Vector& w,
                        const BaselineConfig& cfg) {
  BaselineStep step;
  const GradientRound grad = mean_gradient(env, w);
  step.f = grad.f;
  step.grad_norm = norm(grad.g);
  if (step.grad_norm <= cfg.grad_tol) {
    step.converged = true;
    step.w_next = w;
    return step;
  }

  env.broadcast("g", {grad.g});
  const std::size_t cap = cfg.cg_cap;
  const double tol = cfg.cg_tol;
  ReduceResult solves = env.reduce("giant_solves", [cap, tol](WorkerContext& wk) {
    const Vector& w = wk.scratch().at("w");
    const Vector& g = wk.received().at(0);
    const LocalHessianMap hess = wk.hessian(w);
    SolveReport rep = cg_solve(hess, g, cap, tol);
    WorkerReturn out;
    // breakdown on an indefinite local Hessian is recorded, the best iterate
    // still contributes to the averaged direction
    out.meta = {rep.relative_residual, static_cast<double>(rep.iterations),
                static_cast<double>(static_cast<int>(rep.flag))};
    out.slots = {std::move(rep.solution)};
    return out;
  });
  Vector p = scaled(-1.0, solves.combined.at(0));
  const double dir_dot_g = dot(p, grad.g);
  if (!(dir_dot_g < 0.0))
    throw DiagnosticError(
        "giant_step: averaged Newton direction is not a descent direction "
        "(<p,g> = " + std::to_string(dir_dot_g) + ")");

  env.broadcast("ls_direction", {p});
  const std::size_t k = cfg.ls_grid;
  const double ratio = cfg.ls_ratio;
  ReduceResult trials = env.reduce("ls_values", [k, ratio](WorkerContext& wk) {
    const Vector& p = wk.received().at(0);
    const Vector& w = wk.scratch().at("w");
    Vector values(k);
    double a = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      values[j] = wk.value(add_scaled(w, a, p));
      a *= ratio;
    }
    WorkerReturn out;
    out.slots = {std::move(values)};
    return out;
  });
  const Vector& f_trials = trials.combined.at(0);
  double a = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (f_trials[j] <= step.f + cfg.armijo * a * dir_dot_g) {
      step.alpha = a;
      step.w_next = add_scaled(w, a, p);
      return step;
    }
    a *= ratio;
  }
  throw DiagnosticError("giant_step: backtracking exhausted its grid of " +
                        std::to_string(k) + " steps");
}

BaselineStep gd_step(ClusterEnv& env, const Vector& w,
                     const BaselineConfig& cfg) {
  BaselineStep step;
  const GradientRound grad = mean_gradient(env, w);
  step.f = grad.f;
  step.grad_norm = norm(grad.g);
  if (step.grad_norm <= cfg.grad_tol) {
    step.converged = true;
    step.w_next = w;
    return step;
  }
  step.alpha = cfg.lr;
  step.w_next = add_scaled(w, -cfg.lr, grad.g);
  return step;
}

BaselineStep sgd_step(ClusterEnv& env, const Vector& w,
                      const BaselineConfig& cfg, std::size_t t) {
  BaselineStep step;
  env.broadcast("w", {w});
  const double fraction = cfg.batch_fraction;
  const std::uint64_t seed = cfg.seed;
  ReduceResult res =
      env.reduce("sgd_gradient", [fraction, seed, t](WorkerContext& wk) {
        const Vector& w = wk.received().at(0);
        Shard batch;
        batch.indices =
            wk.sample_minibatch(fraction, minibatch_seed(seed, t, wk.index()));
        WorkerReturn out;
        // objective value over the full shard piggybacks for the trace
        out.meta = {wk.value(w)};
        out.slots = {wk.gradient_subset(w, batch.indices)};
        return out;
      });
  double f = 0.0;
  for (const auto& meta : res.per_worker_meta) f += meta.at(0);
  step.f = f / static_cast<double>(env.worker_count());
  const Vector& ghat = res.combined.at(0);
  step.grad_norm = norm(ghat);
  if (step.grad_norm <= cfg.grad_tol) {
    step.converged = true;
    step.w_next = w;
    return step;
  }
  step.alpha = cfg.lr;
  step.w_next = add_scaled(w, -cfg.lr, ghat);
  return step;
}

BaselineResult baseline_run(ClusterEnv& env, const BaselineConfig& cfg,
                            Vector w0) {
  cfg.validate();
  require_same_dim(w0.size(), env.dim(), "baseline_run");
  check_finite(w0, "baseline_run initial point");
  env.clear_scratch();

  BaselineResult result;
  Vector w = std::move(w0);
  try {
    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
      env.begin_iteration(static_cast<int>(t));
      BaselineStep step;
      switch (cfg.method) {
        case BaselineMethod::giant: step = giant_step(env, w, cfg); break;
        case BaselineMethod::gd: step = gd_step(env, w, cfg); break;
        case BaselineMethod::sync_sgd: step = sgd_step(env, w, cfg, t); break;
      }
      check_finite(step.w_next, "baseline iterate");
      BaselineIterate row;
      row.t = static_cast<int>(t);
      row.f = step.f;
      row.grad_norm = step.grad_norm;
      row.alpha = step.alpha;
      row.rounds_used = env.ledger().rounds_in_iteration(row.t);
      row.cumulative_rounds = env.ledger().rounds;
      result.trace.push_back(row);
      result.f_final = step.f;
      result.grad_norm_final = step.grad_norm;
      if (step.converged) {
        result.status = RunStatus::converged;
        break;
      }
      w = std::move(step.w_next);
    }
  } catch (const DiagnosticError& e) {
    result.status = RunStatus::diagnostic;
    result.diagnostic = e.what();
  }
  result.w_final = std::move(w);
  return result;
}

}  // namespace dingo
