#include "mcgt/harness.hpp"

#include <bit>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace mcgt {

namespace {

using nlohmann::json;

[[noreturn]] void missing(const std::string& where) {
  throw ConfigError("config: missing field '" + where + "'");
}

const json& need(const json& j, const std::string& ctx, const char* name) {
  if (!j.is_object() || !j.contains(name)) missing(ctx + name);
  return j.at(name);
}

template <class T>
T as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: field '" + where + "' has the wrong type");
  }
}

template <class T>
T field(const json& j, const std::string& ctx, const char* name) {
  return as<T>(need(j, ctx, name), ctx + name);
}

template <class T>
T field_or(const json& j, const std::string& ctx, const char* name, T fallback) {
  if (!j.is_object() || !j.contains(name)) return fallback;
  return as<T>(j.at(name), ctx + name);
}

Eigen::VectorXd vector_field(const json& j, const std::string& where) {
  const auto values = as<std::vector<double>>(j, where);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<long>(values.size()));
}

std::vector<std::pair<int, int>> edge_list(const json& j, const std::string& where) {
  std::vector<std::pair<int, int>> edges;
  if (!j.is_array()) throw ConfigError("config: field '" + where + "' must be an array of [i, j] pairs");
  for (const auto& e : j) {
    const auto pair = as<std::vector<int>>(e, where);
    if (pair.size() != 2) throw ConfigError("config: field '" + where + "' entries must be [i, j] pairs");
    edges.emplace_back(pair[0], pair[1]);
  }
  return edges;
}

Eigen::MatrixXd matrix_field(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError("config: field '" + where + "' must be an array of rows");
  const int rows = static_cast<int>(j.size());
  const auto first = as<std::vector<double>>(j.at(0), where);
  Eigen::MatrixXd m(rows, static_cast<int>(first.size()));
  for (int r = 0; r < rows; ++r) {
    const auto row = as<std::vector<double>>(j.at(r), where);
    if (static_cast<int>(row.size()) != m.cols()) {
      throw ConfigError("config: field '" + where + "' rows must all have the same length");
    }
    for (int c = 0; c < m.cols(); ++c) m(r, c) = row[c];
  }
  return m;
}

GeneratorParams parse_generator(const json& j, const std::string& ctx) {
  GeneratorParams g;
  g.a = field<double>(j, ctx, "a");
  g.b = field<double>(j, ctx, "b");
  g.c = field<double>(j, ctx, "c");
  g.g_min = field<double>(j, ctx, "g_min");
  g.g_max = field<double>(j, ctx, "g_max");
  return g;
}

BatteryParams parse_battery(const json& j, const std::string& ctx) {
  BatteryParams b;
  b.a = field<double>(j, ctx, "a");
  b.b = field<double>(j, ctx, "b");
  b.c = field<double>(j, ctx, "c");
  b.s_min = field<double>(j, ctx, "s_min");
  b.s_max = field<double>(j, ctx, "s_max");
  b.capacity = field<double>(j, ctx, "capacity");
  b.initial_charge = field<double>(j, ctx, "initial_charge");
  b.leakage = field_or<double>(j, ctx, "leakage", 0.99);
  b.terminal_tolerance = field_or<double>(j, ctx, "terminal_tolerance", 0.01);
  b.smoothing_delta = field_or<double>(j, ctx, "smoothing_delta", 0.0);
  return b;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;

std::uint64_t hash_double(std::uint64_t h, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  if (std::isnan(v)) bits = 0x7ff8000000000000ULL;
  return fnv1a(h, &bits, sizeof(bits));
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string scenario_name(ExperimentConfig::ScenarioType t) {
  switch (t) {
    case ExperimentConfig::ScenarioType::Tg1: return "tg1";
    case ExperimentConfig::ScenarioType::Microgrid: return "microgrid";
    case ExperimentConfig::ScenarioType::RandomQuadratic: return "random_quadratic";
  }
  return "?";
}

/// Deterministic hash of the numeric trace (wall clock excluded) and the
/// final stitched strategy; the artifact-reproducibility fingerprint.
std::string result_hash(const IterationTrace& trace, const Eigen::VectorXd& stitched) {
  std::uint64_t h = kFnvOffset;
  for (const TraceRecord& r : trace.records) {
    h = fnv1a(h, &r.k, sizeof(r.k));
    h = hash_double(h, r.err_vs_reference);
    h = hash_double(h, r.consensus_residual);
    h = hash_double(h, r.tracking_residual);
    const std::uint64_t f = r.feasible ? 1 : 0;
    h = fnv1a(h, &f, sizeof(f));
  }
  for (long i = 0; i < stitched.size(); ++i) h = hash_double(h, stitched[i]);
  return hex64(h);
}

json constants_json(const ProblemConstants& c) {
  return json{{"mu", c.mu},
              {"L0", c.L0},
              {"L", c.L},
              {"L1", c.L1},
              {"sigma", c.sigma},
              {"sigma_v", c.sigma_v},
              {"agents", c.total_agents},
              {"norm_i_minus_r", c.norm_i_minus_r},
              {"raw_extended_lipschitz", c.raw_extended_lipschitz},
              {"lemma2_violated", c.lemma2_violated},
              {"provenance",
               {{"mu", to_string(c.mu_src)},
                {"L0", to_string(c.l0_src)},
                {"L", to_string(c.l_src)},
                {"L1", to_string(c.l1_src)}}}};
}

json bounds_json(const StepSizeBounds& b) {
  auto finite = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
  return json{{"alpha_a", b.alpha_a},
              {"alpha_sigma", finite(b.alpha_sigma)},
              {"alpha_a_sigma", b.alpha_a_sigma},
              {"alpha_star", finite(b.alpha_star)},
              {"alpha_bar", b.alpha_bar}};
}

ConstantsMode constants_mode(const ExperimentConfig& config, const BuiltExperiment& built) {
  if (config.theory.mode == TheoryRunOptions::Mode::Sampled) return ConstantsMode::Sampled;
  if (config.theory.mode == TheoryRunOptions::Mode::Exact) return ConstantsMode::ExactQuadratic;
  return built.game.has_quadratic() ? ConstantsMode::ExactQuadratic : ConstantsMode::Sampled;
}

std::ofstream open_artifact(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open artifact file " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc) {
  ExperimentConfig config;
  config.raw = doc;
  config.name = field_or<std::string>(doc, "", "name", "experiment");

  const json& scenario = need(doc, "", "scenario");
  const std::string type = field<std::string>(scenario, "scenario.", "type");
  if (type == "tg1") {
    config.scenario = ExperimentConfig::ScenarioType::Tg1;
    config.tg1_constrained = field_or<bool>(scenario, "scenario.", "constrained", true);
  } else if (type == "random_quadratic") {
    config.scenario = ExperimentConfig::ScenarioType::RandomQuadratic;
    config.random_spec.seed = field<std::uint64_t>(scenario, "scenario.", "seed");
    config.random_spec.max_clusters = field_or<int>(scenario, "scenario.", "max_clusters", 3);
    config.random_spec.max_agents_per_cluster = field_or<int>(scenario, "scenario.", "max_agents_per_cluster", 4);
    config.random_spec.max_block_dim = field_or<int>(scenario, "scenario.", "max_block_dim", 3);
    config.random_spec.mu_target = field_or<double>(scenario, "scenario.", "mu_target", 1.0);
    config.random_spec.box_halfwidth = field_or<double>(scenario, "scenario.", "box_halfwidth", 2.0);
    config.random_spec.with_hyperplane = field_or<bool>(scenario, "scenario.", "with_hyperplane", true);
  } else if (type == "microgrid") {
    config.scenario = ExperimentConfig::ScenarioType::Microgrid;
    config.horizon = field<int>(scenario, "scenario.", "horizon");
    config.pricing.q = field<double>(need(scenario, "scenario.", "pricing"), "scenario.pricing.", "q");
    const std::string convention =
        field_or<std::string>(scenario, "scenario.", "charge_convention", "draw-then-leak");
    if (convention == "draw-then-leak") {
      config.power_options.convention = ChargeConvention::DrawThenLeak;
    } else if (convention == "leak-then-draw") {
      config.power_options.convention = ChargeConvention::LeakThenDraw;
    } else {
      throw ConfigError("config: field 'scenario.charge_convention' must be draw-then-leak or leak-then-draw");
    }
    config.power_options.even_split_main_grid_cost =
        field_or<bool>(scenario, "scenario.", "even_split_main_grid_cost", false);
    if (scenario.contains("projection")) {
      const json& projection = scenario.at("projection");
      config.power_options.set_options.tolerance =
          field_or<double>(projection, "scenario.projection.", "tolerance", 1e-10);
      config.power_options.set_options.max_sweeps =
          field_or<int>(projection, "scenario.projection.", "max_sweeps", 10000);
    }
    const json& grids = need(scenario, "scenario.", "microgrids");
    if (!grids.is_array() || grids.empty()) {
      throw ConfigError("config: field 'scenario.microgrids' must be a nonempty array");
    }
    int index = 0;
    for (const auto& g : grids) {
      const std::string ctx = "scenario.microgrids[" + std::to_string(index) + "].";
      MicrogridSpec spec;
      spec.name = field_or<std::string>(g, ctx, "name", "MG" + std::to_string(index + 1));
      if (g.contains("demand")) {
        spec.demand = vector_field(g.at("demand"), ctx + "demand");
      } else {
        spec.demand = default_demand_profile(config.horizon, field_or<double>(g, ctx, "demand_scale", 1.0));
      }
      if (g.contains("purchase_cap")) spec.purchase_cap = vector_field(g.at("purchase_cap"), ctx + "purchase_cap");
      if (g.contains("generators")) {
        int gi = 0;
        for (const auto& gen : g.at("generators")) {
          spec.generators.push_back(parse_generator(gen, ctx + "generators[" + std::to_string(gi++) + "]."));
        }
      }
      if (g.contains("batteries")) {
        int bi = 0;
        for (const auto& bat : g.at("batteries")) {
          spec.batteries.push_back(parse_battery(bat, ctx + "batteries[" + std::to_string(bi++) + "]."));
        }
      }
      config.microgrids.push_back(std::move(spec));
      ++index;
    }
  } else {
    throw ConfigError("config: field 'scenario.type' must be tg1, microgrid or random_quadratic");
  }

  if (doc.contains("topology")) {
    const json& topo = doc.at("topology");
    const std::string kind = field<std::string>(topo, "topology.", "type");
    if (kind == "complete") {
      config.topology = ExperimentConfig::TopologyType::Complete;
    } else if (kind == "ring") {
      config.topology = ExperimentConfig::TopologyType::Ring;
    } else if (kind == "random") {
      config.topology = ExperimentConfig::TopologyType::Random;
      config.topology_seed = field<std::uint64_t>(topo, "topology.", "seed");
      config.edge_probability = field_or<double>(topo, "topology.", "edge_probability", 0.4);
    } else if (kind == "explicit") {
      config.topology = ExperimentConfig::TopologyType::Explicit;
      config.global_edges = edge_list(need(topo, "topology.", "global_edges"), "topology.global_edges");
      const json& cluster_edges = need(topo, "topology.", "cluster_edges");
      if (!cluster_edges.is_array()) throw ConfigError("config: field 'topology.cluster_edges' must be an array");
      int h = 0;
      for (const auto& edges : cluster_edges) {
        config.cluster_edges.push_back(edge_list(edges, "topology.cluster_edges[" + std::to_string(h++) + "]"));
      }
      if (topo.contains("global_weights")) {
        config.global_weights = matrix_field(topo.at("global_weights"), "topology.global_weights");
      }
      if (topo.contains("cluster_weights")) {
        const json& cw = topo.at("cluster_weights");
        if (!cw.is_array()) throw ConfigError("config: field 'topology.cluster_weights' must be an array");
        int idx = 0;
        for (const auto& m : cw) {
          config.cluster_weights.push_back(
              matrix_field(m, "topology.cluster_weights[" + std::to_string(idx++) + "]"));
        }
      }
    } else {
      throw ConfigError("config: field 'topology.type' must be complete, ring, random or explicit");
    }
  } else {
    config.topology = ExperimentConfig::TopologyType::Ring;
  }

  const json& solver = need(doc, "", "solver");
  if (solver.contains("alpha") && solver.at("alpha").is_string()) {
    if (as<std::string>(solver.at("alpha"), "solver.alpha") != "auto") {
      throw ConfigError("config: field 'solver.alpha' must be a positive number or \"auto\"");
    }
    config.alpha_auto = true;
    config.solver.alpha = 1.0;  // replaced once constants are known
  } else {
    config.solver.alpha = field<double>(solver, "solver.", "alpha");
    if (!(config.solver.alpha > 0.0)) {
      throw ConfigError("config: field 'solver.alpha' must be a positive number or \"auto\"");
    }
  }
  config.solver.max_iterations = field_or<long>(solver, "solver.", "max_iterations", 100000);
  config.solver.tolerance = field_or<double>(solver, "solver.", "tolerance", 1e-8);
  config.solver.trace_stride = field_or<int>(solver, "solver.", "trace_stride", 10);
  config.solver.seed = field_or<std::uint64_t>(solver, "solver.", "seed", 0);
  config.solver.threads = field_or<int>(solver, "solver.", "threads", 1);

  if (doc.contains("oracle")) {
    const json& oracle = doc.at("oracle");
    config.oracle.enabled = field_or<bool>(oracle, "oracle.", "enabled", true);
    if (oracle.contains("gamma")) config.oracle.options.gamma = field<double>(oracle, "oracle.", "gamma");
    config.oracle.options.tolerance = field_or<double>(oracle, "oracle.", "tolerance", 1e-10);
    config.oracle.options.max_iterations = field_or<long>(oracle, "oracle.", "max_iterations", 500000);
  }

  if (doc.contains("theory")) {
    const json& theory = doc.at("theory");
    const std::string mode = field_or<std::string>(theory, "theory.", "mode", "off");
    if (mode == "off") {
      config.theory.mode = TheoryRunOptions::Mode::Off;
    } else if (mode == "exact" || mode == "exact-quadratic") {
      config.theory.mode = TheoryRunOptions::Mode::Exact;
    } else if (mode == "sampled") {
      config.theory.mode = TheoryRunOptions::Mode::Sampled;
    } else {
      throw ConfigError("config: field 'theory.mode' must be off, exact or sampled");
    }
    config.theory.samples = field_or<int>(theory, "theory.", "samples", 1000);
    config.theory.seed = field_or<std::uint64_t>(theory, "theory.", "seed", 7);
    config.theory.grid_points = field_or<int>(theory, "theory.", "grid_points", 100);
  }

  if (config.alpha_auto && config.theory.mode == TheoryRunOptions::Mode::Off) {
    throw ConfigError("config: field 'solver.alpha' = \"auto\" needs a theory block (mode exact or sampled)");
  }

  config.output_dir = field_or<std::string>(doc, "", "output_dir", "out");
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON (" + e.what() + ")");
  }
  return parse_experiment_config(doc);
}

namespace {

CommTopology build_topology(const ExperimentConfig& config, const Dimensions& dims) {
  switch (config.topology) {
    case ExperimentConfig::TopologyType::Complete: {
      std::vector<UndirectedGraph> clusters;
      for (int h = 0; h < dims.cluster_count(); ++h) clusters.push_back(UndirectedGraph::complete(dims.agents_in(h)));
      return CommTopology::with_metropolis(UndirectedGraph::complete(dims.agent_count()), std::move(clusters));
    }
    case ExperimentConfig::TopologyType::Ring: {
      std::vector<UndirectedGraph> clusters;
      for (int h = 0; h < dims.cluster_count(); ++h) clusters.push_back(UndirectedGraph::ring(dims.agents_in(h)));
      return CommTopology::with_metropolis(UndirectedGraph::ring(dims.agent_count()), std::move(clusters));
    }
    case ExperimentConfig::TopologyType::Random:
      return make_random_topology(dims, config.edge_probability, config.topology_seed);
    case ExperimentConfig::TopologyType::Explicit: {
      if (static_cast<int>(config.cluster_edges.size()) != dims.cluster_count()) {
        throw ConfigError("config: field 'topology.cluster_edges' must list one edge set per cluster");
      }
      UndirectedGraph global = UndirectedGraph::from_edge_list(dims.agent_count(), config.global_edges);
      std::vector<UndirectedGraph> clusters;
      for (int h = 0; h < dims.cluster_count(); ++h) {
        clusters.push_back(UndirectedGraph::from_edge_list(dims.agents_in(h), config.cluster_edges[h]));
      }
      // Injected weight matrices bypass the Metropolis construction so the
      // validator can inspect deliberately broken inputs.
      if (config.global_weights || !config.cluster_weights.empty()) {
        WeightMatrix w = config.global_weights ? WeightMatrix{*config.global_weights} : metropolis_weights(global);
        std::vector<WeightMatrix> vs;
        for (int h = 0; h < dims.cluster_count(); ++h) {
          if (h < static_cast<int>(config.cluster_weights.size())) {
            vs.push_back(WeightMatrix{config.cluster_weights[h]});
          } else {
            vs.push_back(metropolis_weights(clusters[h]));
          }
        }
        return CommTopology(std::move(global), std::move(w), std::move(clusters), std::move(vs));
      }
      return CommTopology::with_metropolis(std::move(global), std::move(clusters));
    }
  }
  throw ConfigError("config: unknown topology type");
}

}  // namespace

BuiltExperiment build_experiment(const ExperimentConfig& config) {
  switch (config.scenario) {
    case ExperimentConfig::ScenarioType::Tg1: {
      MultiClusterGame game = make_tg1_game();
      std::vector<FeasibleSet> sets = make_tg1_sets(config.tg1_constrained);
      CommTopology topo = build_topology(config, game.dims());
      return BuiltExperiment{std::move(game), std::move(sets), std::move(topo), std::nullopt};
    }
    case ExperimentConfig::ScenarioType::RandomQuadratic: {
      RandomGame rg = make_random_quadratic_game(config.random_spec);
      CommTopology topo = build_topology(config, rg.game.dims());
      return BuiltExperiment{std::move(rg.game), std::move(rg.sets), std::move(topo), std::nullopt};
    }
    case ExperimentConfig::ScenarioType::Microgrid: {
      CompiledScenario compiled =
          build_game(config.microgrids, config.pricing, config.horizon, config.power_options);
      MultiClusterGame game = compiled.game();
      std::vector<FeasibleSet> sets = compiled.sets();
      CommTopology topo = build_topology(config, game.dims());
      return BuiltExperiment{std::move(game), std::move(sets), std::move(topo), std::move(compiled)};
    }
  }
  throw ConfigError("config: unknown scenario type");
}

std::string config_hash(const json& doc) {
  const std::string dump = doc.dump();
  return hex64(fnv1a(kFnvOffset, dump.data(), dump.size()));
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && env[0] != '\0') {
    return std::filesystem::path(env);
  }
  return std::filesystem::path(config.output_dir);
}

SolveResult solve_experiment(const ExperimentConfig& config) {
  BuiltExperiment built = build_experiment(config);
  const Dimensions& dims = built.game.dims();

  std::optional<NashResult> oracle;
  if (config.oracle.enabled) {
    oracle = centralized_solve(built.game, built.sets, config.oracle.options);
  }

  std::optional<ProblemConstants> constants;
  std::optional<StepSizeBounds> bounds;
  if (config.theory.mode != TheoryRunOptions::Mode::Off) {
    constants = estimate_constants(built.game, built.sets, built.topo, constants_mode(config, built),
                                   ConstantsOptions{config.theory.samples, config.theory.seed});
    bounds = compute_step_size_bounds(*constants);
  }

  SolverConfig solver = config.solver;
  if (config.alpha_auto) {
    solver.alpha = bounds->alpha_bar / 2.0;
  }

  std::optional<Eigen::VectorXd> reference;
  if (oracle) reference = oracle->x_star;
  RunOutcome outcome = run(built.game, built.sets, built.topo, solver, reference, config.solver.seed);

  const std::filesystem::path dir = resolve_output_dir(config);
  std::filesystem::create_directories(dir);

  SolveResult result;
  result.converged = outcome.converged;
  result.trace_path = dir / "trace.csv";
  {
    auto out = open_artifact(result.trace_path);
    out << "k,err_vs_oracle,consensus_res,tracking_res,feasible,wall_ms\n";
    for (const TraceRecord& r : outcome.trace.records) {
      out << r.k << ',' << r.err_vs_reference << ',' << r.consensus_residual << ',' << r.tracking_residual
          << ',' << (r.feasible ? 1 : 0) << ',' << r.wall_ms << '\n';
    }
  }

  const Eigen::VectorXd mean = outcome.state.estimates.mean();
  const Eigen::VectorXd costs_at_mean = built.game.cluster_costs(mean);
  json report{{"tool_version", kToolVersion},
              {"config_hash", config_hash(config.raw)},
              {"name", config.name},
              {"scenario", scenario_name(config.scenario)},
              {"status", outcome.converged ? "converged" : "max_iterations"},
              {"converged", outcome.converged},
              {"iterations", outcome.iterations},
              {"alpha", solver.alpha},
              {"residuals",
               {{"consensus", outcome.consensus_residual},
                {"tracking", outcome.tracking_residual},
                {"natural", outcome.natural_residual}}},
              {"cluster_costs", std::vector<double>(costs_at_mean.begin(), costs_at_mean.end())},
              {"wall_ms", outcome.wall_ms},
              {"result_hash", result_hash(outcome.trace, outcome.state.estimates.stitched_first_agents())}};
  if (oracle) {
    report["relative_error_vs_oracle"] = outcome.final_err_vs_reference;
    report["oracle"] = json{{"converged", oracle->converged},
                            {"iterations", oracle->iterations},
                            {"gamma", oracle->gamma},
                            {"natural_residual", oracle->natural_residual},
                            {"cluster_costs",
                             std::vector<double>(oracle->cluster_costs.begin(), oracle->cluster_costs.end())}};
  }
  if (constants) {
    json theory = constants_json(*constants);
    theory["bounds"] = bounds_json(*bounds);
    if (solver.alpha < bounds->alpha_a) {
      theory["rho_a_tau_at_alpha"] = spectral_radius_2x2(matrix_a_tau(solver.alpha, *constants, *bounds));
    } else {
      theory["rho_a_tau_at_alpha"] = nullptr;
      theory["note"] = "run alpha is at or above alpha_A; no rate certificate at this step size";
    }
    report["theory"] = std::move(theory);
  }
  if (built.power) {
    json notes;
    std::vector<double> deltas;
    for (const auto& spec : built.power->specs()) {
      for (const auto& bat : spec.batteries) deltas.push_back(bat.effective_delta());
    }
    notes["battery_smoothing_deltas"] = deltas;
    notes["demand_imbalance_at_mean"] = built.power->max_demand_imbalance(mean);
    notes["charge_violation_at_mean"] = built.power->max_charge_violation(mean);
    report["power"] = std::move(notes);
  }

  result.report_path = dir / "report.json";
  {
    auto out = open_artifact(result.report_path);
    out << report.dump(2) << '\n';
  }
  result.report = std::move(report);
  return result;
}

OracleResult oracle_experiment(const ExperimentConfig& config) {
  BuiltExperiment built = build_experiment(config);
  NashResult nash = centralized_solve(built.game, built.sets, config.oracle.options);

  const std::filesystem::path dir = resolve_output_dir(config);
  std::filesystem::create_directories(dir);

  OracleResult result;
  result.converged = nash.converged;
  json report{{"tool_version", kToolVersion},
              {"config_hash", config_hash(config.raw)},
              {"name", config.name},
              {"scenario", scenario_name(config.scenario)},
              {"converged", nash.converged},
              {"iterations", nash.iterations},
              {"gamma", nash.gamma},
              {"natural_residual", nash.natural_residual},
              {"x_star", std::vector<double>(nash.x_star.begin(), nash.x_star.end())},
              {"cluster_costs", std::vector<double>(nash.cluster_costs.begin(), nash.cluster_costs.end())}};

  if (built.power) {
    const CompiledScenario& power = *built.power;
    result.dispatch_path = dir / "dispatch.csv";
    auto out = open_artifact(result.dispatch_path);
    out << "cluster,slot,demand,purchase,generation,storage,price\n";
    for (int h = 0; h < built.game.dims().cluster_count(); ++h) {
      for (int t = 0; t < power.horizon(); ++t) {
        double generation = 0.0, storage = 0.0, total_purchase = 0.0;
        for (std::size_t i = 0; i < power.specs()[h].generators.size(); ++i) {
          generation += nash.x_star[built.game.dims().block_offset(h) + power.local_g(static_cast<int>(i), t)];
        }
        for (std::size_t j = 0; j < power.specs()[h].batteries.size(); ++j) {
          storage += nash.x_star[built.game.dims().block_offset(h) + power.local_s(h, static_cast<int>(j), t)];
        }
        for (int l = 0; l < built.game.dims().cluster_count(); ++l) total_purchase += power.purchase(nash.x_star, l, t);
        out << h << ',' << t + 1 << ',' << power.specs()[h].demand[t] << ',' << power.purchase(nash.x_star, h, t)
            << ',' << generation << ',' << storage << ',' << power.pricing().q * total_purchase << '\n';
      }
    }
    report["power"] = json{{"demand_imbalance", power.max_demand_imbalance(nash.x_star)},
                           {"charge_violation", power.max_charge_violation(nash.x_star)},
                           {"charging_low_demand_fraction", power.charging_low_demand_fraction(nash.x_star)},
                           {"min_peak_purchase", power.min_peak_purchase(nash.x_star)}};
  }

  result.report_path = dir / "oracle.json";
  {
    auto out = open_artifact(result.report_path);
    out << report.dump(2) << '\n';
  }
  result.report = std::move(report);
  return result;
}

TheoryResult theory_experiment(const ExperimentConfig& config) {
  BuiltExperiment built = build_experiment(config);
  const ProblemConstants constants =
      estimate_constants(built.game, built.sets, built.topo, constants_mode(config, built),
                         ConstantsOptions{config.theory.samples, config.theory.seed});
  std::optional<double> alpha_eval;
  if (!config.alpha_auto) alpha_eval = config.solver.alpha;
  RateReport rate = make_rate_report(constants, std::nullopt, config.theory.grid_points);
  if (alpha_eval && *alpha_eval < rate.bounds.alpha_a) {
    rate.alpha_evaluated = alpha_eval;
    rate.rho_a_at_alpha = spectral_radius_2x2(matrix_a(*alpha_eval, constants));
    rate.rho_a_tau_at_alpha = spectral_radius_2x2(matrix_a_tau(*alpha_eval, constants, rate.bounds));
  }

  const std::filesystem::path dir = resolve_output_dir(config);
  std::filesystem::create_directories(dir);

  TheoryResult result;
  result.certified = rate.certified;
  result.grid_path = dir / "rate_grid.csv";
  {
    auto out = open_artifact(result.grid_path);
    out << "alpha,rho_a,rho_a_tau\n";
    for (const RateGridRow& row : rate.grid) {
      out << row.alpha << ',' << row.rho_a << ',' << row.rho_a_tau << '\n';
    }
  }

  json report{{"tool_version", kToolVersion},
              {"config_hash", config_hash(config.raw)},
              {"name", config.name},
              {"scenario", scenario_name(config.scenario)},
              {"constants", constants_json(constants)},
              {"bounds", bounds_json(rate.bounds)},
              {"certified", rate.certified},
              {"grid_points", config.theory.grid_points}};
  if (!rate.note.empty()) report["note"] = rate.note;
  if (rate.alpha_evaluated) {
    report["alpha_evaluated"] = *rate.alpha_evaluated;
    report["rho_a_at_alpha"] = rate.rho_a_at_alpha;
    report["rho_a_tau_at_alpha"] = rate.rho_a_tau_at_alpha;
  }

  result.report_path = dir / "theory.json";
  {
    auto out = open_artifact(result.report_path);
    out << report.dump(2) << '\n';
  }
  result.report = std::move(report);
  return result;
}

ValidateResult validate_experiment(const ExperimentConfig& config) {
  ValidateResult result;
  ValidationReport& report = result.report;

  // Parameter sanity first; failures here stop game construction.
  bool params_ok = true;
  try {
    if (config.scenario == ExperimentConfig::ScenarioType::Microgrid) {
      for (const auto& spec : config.microgrids) spec.validate(config.horizon);
      config.pricing.validate();
    }
    report.add("parameters valid", true, "");
  } catch (const Error& e) {
    report.add("parameters valid", false, e.what());
    params_ok = false;
  }

  if (params_ok) {
    try {
      BuiltExperiment built = build_experiment(config);
      const Dimensions& dims = built.game.dims();
      report.add("assumption 1: cluster sets nonempty, compact", true,
                 std::to_string(built.sets.size()) + " sets certified at construction");

      // Assumption 2: gradient oracles against central finite differences.
      std::mt19937_64 rng(99);
      double worst_rel = 0.0;
      for (int i = 0; i < dims.agent_count(); ++i) {
        Eigen::VectorXd x(dims.dim());
        for (int h = 0; h < dims.cluster_count(); ++h) {
          for (int d = 0; d < built.sets[h].dim(); ++d) {
            std::uniform_real_distribution<double> u(built.sets[h].bound_lower()[d],
                                                     built.sets[h].bound_upper()[d]);
            x[dims.block_offset(h) + d] = u(rng);
          }
        }
        const int h = dims.cluster_of(i);
        const Eigen::VectorXd g = built.game.agent_gradient(i, x);
        for (int d = 0; d < dims.block_dim(h); ++d) {
          const int coord = dims.block_offset(h) + d;
          const double step = 1e-6 * (1.0 + std::abs(x[coord]));
          Eigen::VectorXd xp = x, xm = x;
          xp[coord] += step;
          xm[coord] -= step;
          const double fd = (built.game.agent_value(i, xp) - built.game.agent_value(i, xm)) / (2.0 * step);
          const double rel = std::abs(fd - g[d]) / (1.0 + std::abs(fd));
          worst_rel = std::max(worst_rel, rel);
        }
      }
      report.add("assumption 2: gradients match finite differences", worst_rel <= 1e-5,
                 "max relative deviation " + std::to_string(worst_rel));

      // Assumption 3: strong monotonicity of the game mapping.
      try {
        const ProblemConstants constants =
            estimate_constants(built.game, built.sets, built.topo,
                               built.game.has_quadratic() ? ConstantsMode::ExactQuadratic : ConstantsMode::Sampled,
                               ConstantsOptions{std::max(200, config.theory.samples / 5), config.theory.seed});
        report.add("assumption 3: game mapping strongly monotone", constants.mu > 1e-10,
                   "mu = " + std::to_string(constants.mu));
      } catch (const Error& e) {
        report.add("assumption 3: game mapping strongly monotone", false, e.what());
      }

      // Assumptions 4 and 5: communication graphs and weight matrices.
      CommTopology topo = build_topology(config, dims);
      ValidationReport topo_report = validate_topology(dims, topo);
      for (auto& check : topo_report.checks) {
        const bool global = check.name.rfind("global", 0) == 0 || check.name.rfind("sigma", 0) == 0;
        check.name = (global ? "assumption 5: " : "assumption 4: ") + check.name;
        report.checks.push_back(std::move(check));
      }
    } catch (const InfeasibleError& e) {
      report.add("assumption 1: cluster sets nonempty, compact", false, e.what());
    } catch (const Error& e) {
      report.add("scenario construction", false, e.what());
    }
  }

  result.json = json{{"tool_version", kToolVersion},
                     {"config_hash", config_hash(config.raw)},
                     {"name", config.name},
                     {"all_pass", report.all_pass()}};
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back(json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  result.json["checks"] = std::move(checks);

  const std::filesystem::path dir = resolve_output_dir(config);
  std::filesystem::create_directories(dir);
  result.report_path = dir / "validate.json";
  {
    auto out = open_artifact(result.report_path);
    out << result.json.dump(2) << '\n';
  }
  return result;
}

json make_flagship_config() {
  const FlagshipScenario flagship = make_flagship_scenario();
  json grids = json::array();
  for (const auto& spec : flagship.specs) {
    json generators = json::array();
    for (const auto& g : spec.generators) {
      generators.push_back(
          json{{"a", g.a}, {"b", g.b}, {"c", g.c}, {"g_min", g.g_min}, {"g_max", g.g_max}});
    }
    json batteries = json::array();
    for (const auto& b : spec.batteries) {
      batteries.push_back(json{{"a", b.a},
                               {"b", b.b},
                               {"c", b.c},
                               {"s_min", b.s_min},
                               {"s_max", b.s_max},
                               {"capacity", b.capacity},
                               {"initial_charge", b.initial_charge},
                               {"leakage", b.leakage},
                               {"terminal_tolerance", b.terminal_tolerance},
                               {"smoothing_delta", b.smoothing_delta}});
    }
    grids.push_back(json{{"name", spec.name},
                         {"demand", std::vector<double>(spec.demand.begin(), spec.demand.end())},
                         {"generators", std::move(generators)},
                         {"batteries", std::move(batteries)}});
  }
  return json{
      {"name", "flagship-5mg"},
      {"scenario",
       {{"type", "microgrid"},
        {"horizon", flagship.horizon},
        {"pricing", {{"q", flagship.pricing.q}}},
        {"charge_convention", "draw-then-leak"},
        {"projection", {{"tolerance", 1e-8}, {"max_sweeps", 20000}}},
        {"microgrids", std::move(grids)}}},
      {"topology", {{"type", "random"}, {"seed", 2024}, {"edge_probability", 0.7}}},
      {"solver",
       {{"alpha", 0.02},
        {"max_iterations", 60000},
        {"tolerance", 1e-4},
        {"trace_stride", 25},
        {"seed", 1},
        {"threads", 4}}},
      {"oracle", {{"enabled", true}, {"tolerance", 1e-8}, {"max_iterations", 300000}}},
      {"theory", {{"mode", "exact"}, {"grid_points", 100}}},
      {"output_dir", "out/flagship"}};
}

}  // namespace mcgt
