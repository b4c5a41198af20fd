#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcgt/builtin.hpp"
#include "mcgt/oracle.hpp"
#include "mcgt/power.hpp"
#include "mcgt/solver.hpp"
#include "mcgt/theory.hpp"
#include "mcgt/topology.hpp"

namespace mcgt {

inline constexpr const char* kToolVersion = "0.1.0";
/// Environment variable overriding the configured output directory.
inline constexpr const char* kOutputDirEnv = "MCGT_OUTPUT_DIR";

struct TheoryRunOptions {
  enum class Mode { Off, Exact, Sampled } mode = Mode::Off;
  int samples = 1000;
  std::uint64_t seed = 7;
  int grid_points = 100;
};

struct OracleRunOptions {
  bool enabled = false;
  OracleOptions options{};
};

/// Parsed experiment description. Scenario, topology, solver, oracle and
/// theory blocks of the JSON config, plus the raw document for hashing.
struct ExperimentConfig {
  nlohmann::json raw;
  std::string name = "experiment";

  enum class ScenarioType { Tg1, Microgrid, RandomQuadratic } scenario = ScenarioType::Tg1;
  bool tg1_constrained = true;
  RandomGameSpec random_spec{};
  std::vector<MicrogridSpec> microgrids;
  PricingParams pricing{};
  int horizon = 24;
  PowerBuildOptions power_options{};

  enum class TopologyType { Complete, Ring, Random, Explicit } topology = TopologyType::Ring;
  double edge_probability = 0.4;
  std::uint64_t topology_seed = 42;
  std::vector<std::pair<int, int>> global_edges;
  std::vector<std::vector<std::pair<int, int>>> cluster_edges;
  /// Explicit weight matrices (instead of Metropolis); lets the validator
  /// inspect deliberately broken inputs.
  std::optional<Eigen::MatrixXd> global_weights;
  std::vector<Eigen::MatrixXd> cluster_weights;

  SolverConfig solver{};
  bool alpha_auto = false;

  OracleRunOptions oracle{};
  TheoryRunOptions theory{};

  std::string output_dir = "out";
};

/// Parse and validate a config document; ConfigError messages name the
/// offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Game, sets and topology realized from a config. For microgrid scenarios
/// the compiled scenario is kept for dispatch/feasibility queries.
struct BuiltExperiment {
  MultiClusterGame game;
  std::vector<FeasibleSet> sets;
  CommTopology topo;
  std::optional<CompiledScenario> power;
};

BuiltExperiment build_experiment(const ExperimentConfig& config);

/// FNV-1a 64 over the canonical config dump.
std::string config_hash(const nlohmann::json& doc);

/// Directory artifacts land in: config value unless MCGT_OUTPUT_DIR is set.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

struct SolveResult {
  nlohmann::json report;
  bool converged = false;
  std::filesystem::path report_path;
  std::filesystem::path trace_path;
};

/// Distributed run with optional oracle reference and theory numbers; writes
/// trace.csv and report.json.
SolveResult solve_experiment(const ExperimentConfig& config);

struct OracleResult {
  nlohmann::json report;
  bool converged = false;
  std::filesystem::path report_path;
  std::filesystem::path dispatch_path;  // microgrid scenarios only
};

/// Centralized equilibrium; writes oracle.json (and dispatch.csv for
/// microgrid scenarios, one row per cluster and slot).
OracleResult oracle_experiment(const ExperimentConfig& config);

struct TheoryResult {
  nlohmann::json report;
  bool certified = false;
  std::filesystem::path report_path;
  std::filesystem::path grid_path;
};

/// Constants, bounds and the rho(A_tau) grid; writes theory.json and
/// rate_grid.csv (alpha = 0 boundary row first).
TheoryResult theory_experiment(const ExperimentConfig& config);

struct ValidateResult {
  ValidationReport report;
  nlohmann::json json;
  std::filesystem::path report_path;
};

/// One pass/fail line per assumption: parameters, set compactness and
/// feasibility, gradient consistency, strong monotonicity, and the two graph
/// assumptions.
ValidateResult validate_experiment(const ExperimentConfig& config);

/// The shipped five-microgrid day-ahead config (alpha = 0.02, random
/// connected graphs, oracle and exact theory enabled).
nlohmann::json make_flagship_config();

}  // namespace mcgt
