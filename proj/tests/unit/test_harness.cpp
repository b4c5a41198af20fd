#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mcgt/harness.hpp"

using namespace mcgt;
using nlohmann::json;

namespace {

json tg1_config(const std::string& outdir) {
  return json{{"name", "tg1-test"},
              {"scenario", {{"type", "tg1"}, {"constrained", true}}},
              {"topology", {{"type", "ring"}}},
              {"solver",
               {{"alpha", 0.05},
                {"max_iterations", 20000},
                {"tolerance", 1e-9},
                {"trace_stride", 50},
                {"seed", 3}}},
              {"oracle", {{"enabled", true}, {"tolerance", 1e-12}}},
              {"theory", {{"mode", "exact"}}},
              {"output_dir", outdir}};
}

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("mcgt-test-" + tag);
  std::filesystem::create_directories(dir);
  return dir;
}

bool has_failed_check(const ValidateResult& result, const std::string& needle) {
  for (const auto& check : result.report.checks) {
    if (!check.pass && check.name.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("config parse errors name the offending field") {
  CHECK_THROWS_WITH_AS(parse_experiment_config(json{{"solver", {{"alpha", 0.1}}}}),
                       doctest::Contains("scenario"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_experiment_config(json{{"scenario", {{"type", "nonsense"}}}}),
                       doctest::Contains("scenario.type"), ConfigError);
  json bad_alpha = tg1_config("x");
  bad_alpha["solver"]["alpha"] = -2.0;
  CHECK_THROWS_WITH_AS(parse_experiment_config(bad_alpha), doctest::Contains("solver.alpha"), ConfigError);
  json missing_horizon{{"scenario", {{"type", "microgrid"}, {"pricing", {{"q", 1.0}}}, {"microgrids", json::array()}}},
                       {"solver", {{"alpha", 0.1}}}};
  CHECK_THROWS_WITH_AS(parse_experiment_config(missing_horizon), doctest::Contains("scenario.horizon"),
                       ConfigError);
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("solve artifacts are reproducible: equal result hashes across reruns") {
  const auto dir_a = temp_dir("solve-a");
  const auto dir_b = temp_dir("solve-b");
  const ExperimentConfig config_a = parse_experiment_config(tg1_config(dir_a.string()));
  const ExperimentConfig config_b = parse_experiment_config(tg1_config(dir_b.string()));
  const SolveResult a = solve_experiment(config_a);
  const SolveResult b = solve_experiment(config_b);
  CHECK(a.converged);
  CHECK(a.report.at("result_hash") == b.report.at("result_hash"));
  CHECK(a.report.at("config_hash") != "");
  // The report knows the analytic equilibrium through the oracle.
  CHECK(a.report.at("relative_error_vs_oracle").get<double>() < 1e-6);
}

TEST_CASE("trace artifact has the promised columns, endpoints and stride") {
  const auto dir = temp_dir("trace");
  const ExperimentConfig config = parse_experiment_config(tg1_config(dir.string()));
  const SolveResult result = solve_experiment(config);
  std::ifstream in(result.trace_path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "k,err_vs_oracle,consensus_res,tracking_res,feasible,wall_ms");
  std::vector<long> ks;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    long k;
    char comma;
    ss >> k >> comma;
    REQUIRE(ss.good());
    ks.push_back(k);
  }
  REQUIRE(!ks.empty());
  CHECK(ks.front() == 0);
  const long final_k = result.report.at("iterations").get<long>();
  CHECK(ks.back() == final_k);
  for (std::size_t i = 1; i + 1 < ks.size(); ++i) CHECK(ks[i] % 50 == 0);
}

TEST_CASE("the output directory env var overrides the config") {
  const auto dir = temp_dir("env-override");
  setenv(kOutputDirEnv, dir.c_str(), 1);
  const ExperimentConfig config = parse_experiment_config(tg1_config("/nonexistent/should-not-be-used"));
  const SolveResult result = solve_experiment(config);
  unsetenv(kOutputDirEnv);
  CHECK(result.report_path.parent_path() == dir);
  CHECK(std::filesystem::exists(result.report_path));
}

TEST_CASE("theory artifact for TG1 carries the boundary row and the honest certificate") {
  const auto dir = temp_dir("theory");
  const ExperimentConfig config = parse_experiment_config(tg1_config(dir.string()));
  const TheoryResult result = theory_experiment(config);
  CHECK(result.report.at("bounds").at("alpha_bar").get<double>() > 0.0);
  CHECK_FALSE(result.certified);  // rho(A_tau) >= 1 whenever some N_h > 1
  std::ifstream in(result.grid_path);
  REQUIRE(in.good());
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "alpha,rho_a,rho_a_tau");
  CHECK(first.rfind("0,", 0) == 0);  // alpha = 0 boundary row first
}

TEST_CASE("oracle artifact on a microgrid includes the dispatch table") {
  const auto dir = temp_dir("oracle-mg");
  json config = json{{"name", "mini-mg"},
                     {"scenario",
                      {{"type", "microgrid"},
                       {"horizon", 3},
                       {"pricing", {{"q", 0.4}}},
                       {"microgrids",
                        json::array({json{{"name", "MG1"},
                                          {"demand_scale", 0.3},
                                          {"generators",
                                           json::array({json{{"a", 0.5}, {"b", 0.3}, {"c", 0.1}, {"g_min", 0.0},
                                                             {"g_max", 2.0}}})},
                                          {"batteries", json::array()}}})}}},
                     {"solver", {{"alpha", 0.02}}},
                     {"oracle", {{"enabled", true}, {"tolerance", 1e-11}}},
                     {"output_dir", dir.string()}};
  const OracleResult result = oracle_experiment(parse_experiment_config(config));
  CHECK(result.converged);
  CHECK(std::filesystem::exists(result.dispatch_path));
  std::ifstream in(result.dispatch_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "cluster,slot,demand,purchase,generation,storage,price");
  CHECK(result.report.at("power").at("demand_imbalance").get<double>() < 1e-6);
}

TEST_CASE("the flagship config parses, builds and matches the published sizes") {
  const json config_json = make_flagship_config();
  ExperimentConfig config = parse_experiment_config(config_json);
  CHECK(config.solver.alpha == 0.02);
  const BuiltExperiment built = build_experiment(config);
  CHECK(built.game.dims().agent_count() == 50);
  CHECK(built.game.dims().dim() == 1320);
  REQUIRE(built.power.has_value());
  long constraints = 0;
  for (const auto& spec : built.power->specs()) constraints += count_constraints(spec, 24);
  CHECK(constraints == 3625);
}

TEST_CASE("validators catch each deliberately broken input by name") {
  SUBCASE("disconnected global graph") {
    json config = tg1_config(temp_dir("val-disc").string());
    config["topology"] = json{{"type", "explicit"},
                              {"global_edges", json::array({json::array({0, 1}), json::array({2, 3})})},
                              {"cluster_edges", json::array({json::array({json::array({0, 1})}),
                                                             json::array({json::array({0, 1})})})}};
    const ValidateResult result = validate_experiment(parse_experiment_config(config));
    CHECK_FALSE(result.report.all_pass());
    CHECK(has_failed_check(result, "global graph connected"));
    CHECK(has_failed_check(result, "sigma < 1"));
  }

  SUBCASE("asymmetric injected weight matrix") {
    json config = tg1_config(temp_dir("val-asym").string());
    json w = json::array();
    for (int i = 0; i < 4; ++i) {
      json row = json::array();
      for (int j = 0; j < 4; ++j) row.push_back(0.25);
      w.push_back(row);
    }
    w[0][1] = 0.3;
    config["topology"] =
        json{{"type", "explicit"},
             {"global_edges",
              json::array({json::array({0, 1}), json::array({1, 2}), json::array({2, 3}), json::array({0, 3}),
                           json::array({0, 2}), json::array({1, 3})})},
             {"cluster_edges",
              json::array({json::array({json::array({0, 1})}), json::array({json::array({0, 1})})})},
             {"global_weights", w}};
    const ValidateResult result = validate_experiment(parse_experiment_config(config));
    CHECK(has_failed_check(result, "double stochastic"));
    CHECK(has_failed_check(result, "symmetric"));
  }

  SUBCASE("zero price slope kills strong monotonicity") {
    json config{{"scenario",
                 {{"type", "microgrid"},
                  {"horizon", 2},
                  {"pricing", {{"q", 0.0}}},
                  {"microgrids",
                   json::array({json{{"name", "MG1"},
                                     {"demand_scale", 0.3},
                                     {"generators",
                                      json::array({json{{"a", 0.5}, {"b", 0.3}, {"c", 0.1}, {"g_min", 0.0},
                                                        {"g_max", 3.0}}})}}})}}},
                {"solver", {{"alpha", 0.02}}},
                {"output_dir", temp_dir("val-q0").string()}};
    const ValidateResult result = validate_experiment(parse_experiment_config(config));
    CHECK(has_failed_check(result, "strongly monotone"));
  }

  SUBCASE("negative generator coefficient fails parameter validation") {
    json config{{"scenario",
                 {{"type", "microgrid"},
                  {"horizon", 2},
                  {"pricing", {{"q", 0.5}}},
                  {"microgrids",
                   json::array({json{{"name", "MG1"},
                                     {"demand_scale", 0.3},
                                     {"generators",
                                      json::array({json{{"a", -0.5}, {"b", 0.3}, {"c", 0.1}, {"g_min", 0.0},
                                                        {"g_max", 3.0}}})}}})}}},
                {"solver", {{"alpha", 0.02}}},
                {"output_dir", temp_dir("val-neg").string()}};
    const ValidateResult result = validate_experiment(parse_experiment_config(config));
    CHECK(has_failed_check(result, "parameters"));
  }

  SUBCASE("a healthy TG1 setup passes everything") {
    const ValidateResult result =
        validate_experiment(parse_experiment_config(tg1_config(temp_dir("val-ok").string())));
    CHECK(result.report.all_pass());
  }
}

#ifdef MCGT_CLI_PATH
TEST_CASE("command line front end maps errors to exit codes") {
  const std::string cli = MCGT_CLI_PATH;
  const auto dir = temp_dir("cli");
  auto run_cli = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };

  // Malformed config: exit 2 naming the problem on stderr.
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(run_cli("solve " + bad.string()) == 2);

  // Infeasible scenario: exit 3.
  const auto infeasible = dir / "infeasible.json";
  std::ofstream(infeasible) << json{
      {"scenario",
       {{"type", "microgrid"},
        {"horizon", 2},
        {"pricing", {{"q", 0.5}}},
        {"microgrids",
         json::array({json{{"name", "MG1"},
                           {"demand_scale", 0.3},
                           {"generators",
                            json::array({json{{"a", 0.5}, {"b", 0.3}, {"c", 0.1}, {"g_min", 50.0},
                                              {"g_max", 60.0}}})}}})}}},
      {"solver", {{"alpha", 0.02}}},
      {"output_dir", (dir / "out").string()}}.dump();
  CHECK(run_cli("solve " + infeasible.string()) == 3);

  // A healthy run: exit 0.
  const auto good = dir / "good.json";
  std::ofstream(good) << tg1_config((dir / "out").string()).dump();
  CHECK(run_cli("solve " + good.string()) == 0);
  CHECK(run_cli("validate " + good.string()) == 0);

  // scenario-gen emits a parseable flagship config.
  const auto generated = dir / "flagship.json";
  CHECK(run_cli("scenario-gen -o " + generated.string()) == 0);
  const ExperimentConfig config = load_experiment_config(generated);
  CHECK(config.scenario == ExperimentConfig::ScenarioType::Microgrid);
}
#endif
