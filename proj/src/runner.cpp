#include "dingo/runner.hpp"

#include <charconv>
#include <chrono>
#include <cmath>

namespace dingo {

DingoConfig RunSpec::dingo_config() const {
  DingoConfig cfg;
  cfg.theta = theta;
  cfg.phi = phi;
  cfg.rho = rho;
  cfg.grad_tol = grad_tol;
  cfg.max_iters = max_iters;
  cfg.solver_cap = solver_cap;
  cfg.solver_tol = solver_tol;
  cfg.ls_ratio = ls_ratio;
  cfg.ls_grid = ls_grid;
  cfg.exact_solves = exact_solves;
  return cfg;
}

BaselineConfig RunSpec::baseline_config() const {
  BaselineConfig cfg;
  cfg.method = baseline_method_from_string(method);
  cfg.lr = lr;
  cfg.batch_fraction = batch_fraction;
  cfg.cg_cap = solver_cap;
  cfg.cg_tol = solver_tol;
  cfg.ls_ratio = ls_ratio;
  cfg.ls_grid = ls_grid;
  cfg.grad_tol = grad_tol;
  cfg.max_iters = max_iters;
  cfg.seed = seed;
  return cfg;
}

void RunSpec::validate() const {
  if (method != "dingo") baseline_config().validate();
  else dingo_config().validate();
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (reg && *reg < 0.0) throw ConfigError("reg must be non-negative");
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double parse_num(const std::string& key, const std::string& value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("problem option " + key + ": bad number '" + value + "'");
  return out;
}

SyntheticSpec parse_synthetic(ObjectiveKind kind, const std::string& options) {
  SyntheticSpec spec;
  spec.kind = kind;
  spec.num_classes = kind == ObjectiveKind::softmax_xent ? 0 : 2;
  spec.n = 0;
  spec.p = 0;
  std::string rest = options;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string item = rest.substr(0, comma);
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("problem option '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "n") spec.n = static_cast<std::size_t>(parse_num(key, value));
    else if (key == "p") spec.p = static_cast<std::size_t>(parse_num(key, value));
    else if (key == "C" && kind == ObjectiveKind::softmax_xent)
      spec.num_classes = static_cast<std::size_t>(parse_num(key, value));
    else if (key == "decay") spec.decay = parse_num(key, value);
    else if (key == "noise") {
      spec.label_noise = parse_num(key, value);
      spec.target_noise = spec.label_noise;
    } else if (key == "scale") spec.scale = parse_num(key, value);
    else throw ConfigError("unknown problem option: " + key);
  }
  if (spec.n == 0 || spec.p == 0)
    throw ConfigError("synthetic problem needs n=<count>,p=<features>");
  if (kind == ObjectiveKind::softmax_xent && spec.num_classes < 2)
    throw ConfigError("synthetic softmax needs C=<classes>");
  return spec;
}

}  // namespace

ProblemSetup build_problem(const RunSpec& spec) {
  const auto colon = spec.problem.find(':');
  if (colon == std::string::npos)
    throw ConfigError("problem '" + spec.problem + "' must be kind:options");
  const std::string family = spec.problem.substr(0, colon);
  const std::string rest = spec.problem.substr(colon + 1);

  ProblemSetup setup;
  if (family == "synthetic-softmax") {
    setup.data = gen_synthetic(
        parse_synthetic(ObjectiveKind::softmax_xent, rest), mix_seed(spec.seed, 0));
    setup.objective.kind = ObjectiveKind::softmax_xent;
  } else if (family == "synthetic-logistic") {
    setup.data = gen_synthetic(parse_synthetic(ObjectiveKind::logistic, rest),
                               mix_seed(spec.seed, 0));
    setup.objective.kind = ObjectiveKind::logistic;
  } else if (family == "synthetic-lstsq") {
    setup.data = gen_synthetic(
        parse_synthetic(ObjectiveKind::least_squares, rest), mix_seed(spec.seed, 0));
    setup.objective.kind = ObjectiveKind::least_squares;
  } else if (family == "csv-softmax") {
    setup.data = load_csv(rest, true);
    setup.objective.kind = ObjectiveKind::softmax_xent;
  } else if (family == "csv-logistic") {
    setup.data = load_csv(rest, true);
    setup.objective.kind = ObjectiveKind::logistic;
  } else if (family == "csv-lstsq") {
    setup.data = load_csv(rest, false);
    setup.objective.kind = ObjectiveKind::least_squares;
  } else if (family == "sparse-softmax") {
    setup.data = load_sparse_text(rest);
    setup.objective.kind = ObjectiveKind::softmax_xent;
  } else if (family == "sparse-logistic") {
    setup.data = load_sparse_text(rest);
    setup.objective.kind = ObjectiveKind::logistic;
  } else {
    throw ConfigError("unknown problem family: " + family);
  }

  if (spec.reg) {
    setup.objective.reg = *spec.reg;
  } else {
    setup.objective.reg =
        setup.objective.kind == ObjectiveKind::softmax_xent ? 1e-6 : 0.0;
  }
  setup.objective.check_compatible(setup.data);
  setup.shards = partition(setup.data.n, spec.workers, mix_seed(spec.seed, 1));
  return setup;
}

MetaList describe(const RunSpec& spec) {
  MetaList meta;
  meta.emplace_back("method", spec.method);
  meta.emplace_back("problem", spec.problem);
  meta.emplace_back("workers", std::to_string(spec.workers));
  meta.emplace_back("seed", std::to_string(spec.seed));
  meta.emplace_back("max_iters", std::to_string(spec.max_iters));
  meta.emplace_back("grad_tol", format_double(spec.grad_tol));
  if (spec.reg) meta.emplace_back("reg", format_double(*spec.reg));
  if (spec.method == "dingo") {
    meta.emplace_back("theta", format_double(spec.theta));
    meta.emplace_back("phi", format_double(spec.phi));
    meta.emplace_back("rho", format_double(spec.rho));
    meta.emplace_back("solver_cap", std::to_string(spec.solver_cap));
    meta.emplace_back("solver_tol", format_double(spec.solver_tol));
    meta.emplace_back("ls_ratio", format_double(spec.ls_ratio));
    meta.emplace_back("ls_grid", std::to_string(spec.ls_grid));
    meta.emplace_back("exact_solves", spec.exact_solves ? "1" : "0");
  } else if (spec.method == "giant") {
    meta.emplace_back("solver_cap", std::to_string(spec.solver_cap));
    meta.emplace_back("solver_tol", format_double(spec.solver_tol));
    meta.emplace_back("ls_ratio", format_double(spec.ls_ratio));
    meta.emplace_back("ls_grid", std::to_string(spec.ls_grid));
  } else {
    meta.emplace_back("lr", format_double(spec.lr));
    if (spec.method == "sync-sgd")
      meta.emplace_back("batch_fraction", format_double(spec.batch_fraction));
  }
  return meta;
}

namespace {

std::vector<TraceRow> rows_from_dingo(const DingoResult& result,
                                      const std::string& method) {
  std::vector<TraceRow> rows;
  rows.reserve(result.trace.size());
  for (const IterateState& it : result.trace) {
    TraceRow row;
    row.method = method;
    row.iteration = it.t;
    row.rounds = it.cumulative_rounds;
    row.f = it.f;
    row.grad_norm = it.grad_norm;
    row.case_label = to_string(it.case_taken);
    row.alpha = it.alpha;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TraceRow> rows_from_baseline(const BaselineResult& result,
                                         const std::string& method) {
  std::vector<TraceRow> rows;
  rows.reserve(result.trace.size());
  for (const BaselineIterate& it : result.trace) {
    TraceRow row;
    row.method = method;
    row.iteration = it.t;
    row.rounds = it.cumulative_rounds;
    row.f = it.f;
    row.grad_norm = it.grad_norm;
    row.case_label = "-";
    row.alpha = it.alpha;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

RunOutcome run(const RunSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();

  ProblemSetup setup = build_problem(spec);
  ClusterEnv env(setup.data, setup.objective, std::move(setup.shards));
  const Vector w0 = zeros(env.dim());

  RunOutcome outcome;
  if (spec.method == "dingo") {
    const DingoResult result = dingo_run(env, spec.dingo_config(), w0);
    outcome.rows = rows_from_dingo(result, spec.method);
    outcome.status = result.status;
    outcome.diagnostic = result.diagnostic;
    outcome.f_final = result.f_final;
    outcome.grad_norm_final = norm(result.g_final);
  } else {
    const BaselineResult result = baseline_run(env, spec.baseline_config(), w0);
    outcome.rows = rows_from_baseline(result, spec.method);
    outcome.status = result.status;
    outcome.diagnostic = result.diagnostic;
    outcome.f_final = result.f_final;
    outcome.grad_norm_final = result.grad_norm_final;
  }
  outcome.total_rounds = env.ledger().rounds;
  outcome.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  if (!spec.out.empty())
    write_trace_csv(spec.out, describe(spec), outcome.rows, false);
  return outcome;
}

std::vector<RunOutcome> compare(const std::vector<RunSpec>& specs,
                                const std::string& out) {
  if (specs.size() < 2)
    throw ConfigError("compare needs at least two run specs");
  for (std::size_t i = 1; i < specs.size(); ++i) {
    if (specs[i].problem != specs[0].problem ||
        specs[i].seed != specs[0].seed ||
        specs[i].workers != specs[0].workers)
      throw ConfigError(
          "compare: spec " + std::to_string(i) +
          " disagrees on problem/seed/workers with the first spec; runs are "
          "not comparable");
  }

  std::vector<RunOutcome> outcomes;
  std::vector<TraceRow> merged;
  for (const RunSpec& spec : specs) {
    RunSpec local = spec;
    local.out.clear();
    outcomes.push_back(run(local));
    const auto& rows = outcomes.back().rows;
    merged.insert(merged.end(), rows.begin(), rows.end());
  }

  if (!out.empty()) {
    MetaList meta;
    meta.emplace_back("problem", specs[0].problem);
    meta.emplace_back("workers", std::to_string(specs[0].workers));
    meta.emplace_back("seed", std::to_string(specs[0].seed));
    std::string methods;
    for (const auto& s : specs) {
      if (!methods.empty()) methods += "|";
      methods += s.method;
    }
    meta.emplace_back("methods", methods);
    write_trace_csv(out, meta, merged, true);
  }
  return outcomes;
}

}  // namespace dingo
