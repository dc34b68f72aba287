#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "dingo/runner.hpp"

namespace {

using dingo::ConfigError;
using dingo::RunSpec;

void apply_config_file(RunSpec& spec, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must hold an object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "method") spec.method = value.get<std::string>();
    else if (key == "problem") spec.problem = value.get<std::string>();
    else if (key == "workers") spec.workers = value.get<std::size_t>();
    else if (key == "seed") spec.seed = value.get<std::uint64_t>();
    else if (key == "out") spec.out = value.get<std::string>();
    else if (key == "max_iters") spec.max_iters = value.get<std::size_t>();
    else if (key == "grad_tol") spec.grad_tol = value.get<double>();
    else if (key == "reg") spec.reg = value.get<double>();
    else if (key == "theta") spec.theta = value.get<double>();
    else if (key == "phi") spec.phi = value.get<double>();
    else if (key == "rho") spec.rho = value.get<double>();
    else if (key == "solver_cap") spec.solver_cap = value.get<std::size_t>();
    else if (key == "solver_tol") spec.solver_tol = value.get<double>();
    else if (key == "ls_ratio") spec.ls_ratio = value.get<double>();
    else if (key == "ls_grid") spec.ls_grid = value.get<std::size_t>();
    else if (key == "exact_solves") spec.exact_solves = value.get<bool>();
    else if (key == "lr") spec.lr = value.get<double>();
    else if (key == "batch_fraction") spec.batch_fraction = value.get<double>();
    else throw ConfigError("config file: unknown key '" + key + "'");
  }
}

void apply_spec_item(RunSpec& spec, const std::string& key,
                     const std::string& value) {
  const auto num = [&]() -> double {
    try {
      return std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError("spec option " + key + ": bad number '" + value + "'");
    }
  };
  if (key == "method") spec.method = value;
  else if (key == "problem") spec.problem = value;
  else if (key == "workers") spec.workers = static_cast<std::size_t>(num());
  else if (key == "seed") spec.seed = static_cast<std::uint64_t>(num());
  else if (key == "max-iters") spec.max_iters = static_cast<std::size_t>(num());
  else if (key == "grad-tol") spec.grad_tol = num();
  else if (key == "reg") spec.reg = num();
  else if (key == "theta") spec.theta = num();
  else if (key == "phi") spec.phi = num();
  else if (key == "rho") spec.rho = num();
  else if (key == "solver-cap") spec.solver_cap = static_cast<std::size_t>(num());
  else if (key == "solver-tol") spec.solver_tol = num();
  else if (key == "ls-ratio") spec.ls_ratio = num();
  else if (key == "ls-grid") spec.ls_grid = static_cast<std::size_t>(num());
  else if (key == "exact") spec.exact_solves = value == "1" || value == "true";
  else if (key == "lr") spec.lr = num();
  else if (key == "batch-fraction") spec.batch_fraction = num();
  else throw ConfigError("spec option '" + key + "' is not recognised");
}

RunSpec parse_spec_string(RunSpec base, const std::string& text) {
  std::string rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string item = rest.substr(0, comma);
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("spec item '" + item + "' is not key=value");
    apply_spec_item(base, item.substr(0, eq), item.substr(eq + 1));
  }
  return base;
}

void print_summary(const std::string& method, const dingo::RunOutcome& o) {
  std::cout << "method=" << method << " status=" << dingo::to_string(o.status)
            << " iterations=" << o.rows.size() << " rounds=" << o.total_rounds
            << " f=" << dingo::format_double(o.f_final)
            << " grad_norm=" << dingo::format_double(o.grad_norm_final)
            << " wall=" << dingo::format_double(o.wall_seconds) << "s\n";
  if (!o.diagnostic.empty()) std::cout << "diagnostic: " << o.diagnostic << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dingo: distributed Newton-type optimization testbed"};
  app.require_subcommand(1);

  RunSpec flags;
  std::string config_path;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--problem", flags.problem,
                    "problem spec, e.g. synthetic-softmax:n=1000,p=20,C=5");
    cmd->add_option("--workers", flags.workers, "worker count");
    cmd->add_option("--seed", flags.seed, "seed for all randomness");
    cmd->add_option("--max-iters", flags.max_iters, "iteration budget");
    cmd->add_option("--grad-tol", flags.grad_tol, "gradient-norm stop tolerance");
    cmd->add_option("--reg", flags.reg, "ridge regularizer");
    cmd->add_option("--out", flags.out, "trace CSV path");
    cmd->add_option("--config", config_path, "JSON config (flags override it)");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one optimizer");
  add_common(run_cmd);
  run_cmd->add_option("--method", flags.method, "dingo | giant | gd | sync-sgd")
      ->check(CLI::IsMember({"dingo", "giant", "gd", "sync-sgd"}));
  run_cmd->add_option("--theta", flags.theta, "descent test parameter");
  run_cmd->add_option("--phi", flags.phi, "damping parameter");
  run_cmd->add_option("--rho", flags.rho, "line-search parameter");
  run_cmd->add_option("--solver-cap", flags.solver_cap, "sub-solver iteration cap");
  run_cmd->add_option("--solver-tol", flags.solver_tol, "sub-solver tolerance");
  run_cmd->add_option("--ls-ratio", flags.ls_ratio, "line-search grid ratio");
  run_cmd->add_option("--ls-grid", flags.ls_grid, "line-search grid size");
  run_cmd->add_flag("--exact", flags.exact_solves,
                    "exact sub-problem mode (tol 1e-14, cap dim+5)");
  run_cmd->add_option("--lr", flags.lr, "learning rate (gd / sync-sgd)");
  run_cmd->add_option("--batch-fraction", flags.batch_fraction,
                      "minibatch fraction (sync-sgd)");

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "run several methods on one problem");
  add_common(compare_cmd);
  std::vector<std::string> spec_strings;
  compare_cmd->add_option(
      "--spec", spec_strings,
      "comma-separated key=value overrides, e.g. method=gd,lr=0.1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) {
      // config supplies defaults; re-parse so explicit flags win
      RunSpec from_file;
      apply_config_file(from_file, config_path);
      flags = from_file;
      app.clear();
      app.parse(argc, argv);
    }

    if (run_cmd->parsed()) {
      const dingo::RunOutcome outcome = run(flags);
      print_summary(flags.method, outcome);
      return outcome.status == dingo::RunStatus::diagnostic ? 1 : 0;
    }

    if (spec_strings.size() < 2)
      throw ConfigError("compare needs at least two --spec entries");
    std::vector<RunSpec> specs;
    specs.reserve(spec_strings.size());
    for (const auto& text : spec_strings)
      specs.push_back(parse_spec_string(flags, text));
    const std::string out = flags.out;
    for (auto& s : specs) s.out.clear();
    const auto outcomes = dingo::compare(specs, out);
    bool diagnostic = false;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      print_summary(specs[i].method, outcomes[i]);
      diagnostic = diagnostic ||
                   outcomes[i].status == dingo::RunStatus::diagnostic;
    }
    return diagnostic ? 1 : 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const dingo::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
