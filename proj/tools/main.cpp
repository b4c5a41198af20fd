// Command line front end: solve | oracle | theory | validate | scenario-gen.
// Exit codes: 0 ok, 1 non-convergence (or failed validation), 2 config
// error, 3 infeasible scenario.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "mcgt/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const mcgt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mcgt::InfeasibleError& e) {
    std::cerr << "infeasible scenario: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const mcgt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNotConverged;
  }
}

int cmd_solve(const std::string& config_path) {
  return guarded([&] {
    const auto config = mcgt::load_experiment_config(config_path);
    const auto result = mcgt::solve_experiment(config);
    std::cout << "status: " << result.report.at("status").get<std::string>() << '\n'
              << "iterations: " << result.report.at("iterations") << '\n'
              << "natural residual: " << result.report.at("residuals").at("natural") << '\n';
    if (result.report.contains("relative_error_vs_oracle")) {
      std::cout << "relative error vs oracle: " << result.report.at("relative_error_vs_oracle") << '\n';
    }
    std::cout << "report: " << result.report_path.string() << '\n'
              << "trace: " << result.trace_path.string() << '\n';
    return result.converged ? kExitOk : kExitNotConverged;
  });
}

int cmd_oracle(const std::string& config_path) {
  return guarded([&] {
    const auto config = mcgt::load_experiment_config(config_path);
    const auto result = mcgt::oracle_experiment(config);
    std::cout << "converged: " << (result.converged ? "yes" : "no") << '\n'
              << "iterations: " << result.report.at("iterations") << '\n'
              << "natural residual: " << result.report.at("natural_residual") << '\n'
              << "cluster costs:";
    for (const auto& c : result.report.at("cluster_costs")) std::cout << ' ' << c;
    std::cout << '\n' << "report: " << result.report_path.string() << '\n';
    if (!result.dispatch_path.empty()) std::cout << "dispatch: " << result.dispatch_path.string() << '\n';
    return result.converged ? kExitOk : kExitNotConverged;
  });
}

int cmd_theory(const std::string& config_path) {
  return guarded([&] {
    const auto config = mcgt::load_experiment_config(config_path);
    const auto result = mcgt::theory_experiment(config);
    std::cout << "alpha_bar: " << result.report.at("bounds").at("alpha_bar") << '\n'
              << "alpha_A: " << result.report.at("bounds").at("alpha_a") << '\n'
              << "grid certified (rho(A_tau) < 1): " << (result.certified ? "yes" : "no") << '\n';
    if (result.report.contains("note")) std::cout << "note: " << result.report.at("note").get<std::string>() << '\n';
    std::cout << "report: " << result.report_path.string() << '\n'
              << "grid: " << result.grid_path.string() << '\n';
    return kExitOk;
  });
}

int cmd_validate(const std::string& config_path) {
  return guarded([&] {
    const auto config = mcgt::load_experiment_config(config_path);
    const auto result = mcgt::validate_experiment(config);
    for (const auto& check : result.report.checks) {
      std::cout << (check.pass ? "PASS" : "FAIL") << "  " << check.name;
      if (!check.detail.empty()) std::cout << "  (" << check.detail << ')';
      std::cout << '\n';
    }
    std::cout << "report: " << result.report_path.string() << '\n';
    return result.report.all_pass() ? kExitOk : kExitNotConverged;
  });
}

int cmd_scenario_gen(const std::string& out_path) {
  return guarded([&] {
    const auto config = mcgt::make_flagship_config();
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot write " << out_path << '\n';
      return kExitConfig;
    }
    out << config.dump(2) << '\n';
    std::cout << "wrote " << out_path << '\n';
    return kExitOk;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed Nash equilibrium seeking in constrained multi-cluster games"};
  app.require_subcommand(1);

  std::string config_path;
  std::string gen_out = "flagship.json";

  auto* solve = app.add_subcommand("solve", "Run the distributed gradient-tracking solver");
  solve->add_option("config", config_path, "experiment config JSON")->required();

  auto* oracle = app.add_subcommand("oracle", "Compute the centralized Nash equilibrium");
  oracle->add_option("config", config_path, "experiment config JSON")->required();

  auto* theory = app.add_subcommand("theory", "Evaluate step-size bounds and rate matrices");
  theory->add_option("config", config_path, "experiment config JSON")->required();

  auto* validate = app.add_subcommand("validate", "Check the standing assumptions");
  validate->add_option("config", config_path, "experiment config JSON")->required();

  auto* gen = app.add_subcommand("scenario-gen", "Emit the five-microgrid day-ahead config");
  gen->add_option("-o,--output", gen_out, "output path");

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return cmd_solve(config_path);
  if (oracle->parsed()) return cmd_oracle(config_path);
  if (theory->parsed()) return cmd_theory(config_path);
  if (validate->parsed()) return cmd_validate(config_path);
  if (gen->parsed()) return cmd_scenario_gen(gen_out);
  return kExitConfig;
}
