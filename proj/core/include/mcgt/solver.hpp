#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "mcgt/constraints.hpp"
#include "mcgt/game.hpp"
#include "mcgt/stacked.hpp"
#include "mcgt/topology.hpp"

namespace mcgt {

struct SolverConfig {
  double alpha = 0.0;  // step size, required > 0
  long max_iterations = 100000;
  /// Stop when max(consensus residual, tracking residual, first agent's
  /// fixed-point residual) drops below this.
  double tolerance = 1e-8;
  /// Residuals are evaluated and traced every trace_stride iterations;
  /// k = 0 and the final iteration are always recorded.
  int trace_stride = 10;
  std::uint64_t seed = 0;
  /// Worker threads for the per-agent loop. Results are identical for any
  /// thread count: agents write disjoint blocks and no reduction is split.
  int threads = 1;

  void validate() const;
};

struct TraceRecord {
  long k = 0;
  double err_vs_reference = 0.0;  // NaN when no reference
  double consensus_residual = 0.0;
  double tracking_residual = 0.0;
  bool feasible = false;
  double wall_ms = 0.0;
};

struct IterationTrace {
  bool has_reference = false;
  std::vector<TraceRecord> records;
};

/// Round state: iteration counter, per-agent estimates x_i in R^n, tracking
/// variables y_i^h and the cached gradients grad_h f_i^h(x_i(k)) they were
/// last updated with.
struct SolverState {
  long iteration = 0;
  StackedEstimate estimates;
  Eigen::VectorXd tracking;   // tracking-vector layout
  Eigen::VectorXd gradients;  // same layout
};

/// Start of a run: an RNG seed (projected random estimates), one joint
/// vector replicated to all agents, or explicit per-agent estimates.
using InitialEstimates = std::variant<std::uint64_t, Eigen::VectorXd, StackedEstimate>;

/// k = 0 state: own-cluster blocks projected into their sets,
/// y_i^h(0) = grad_h f_i^h(x_i(0)) exactly.
SolverState initialize(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                       const CommTopology& topo, const InitialEstimates& init);

/// One synchronous round of the projected gradient-tracking updates: all
/// agents average estimates over the global graph, step their own block
/// along the tracked direction and project, copy the other blocks, then
/// refresh the tracking variables over the cluster graphs with the gradient
/// increment.
SolverState step(const SolverState& state, const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                 const CommTopology& topo, const SolverConfig& config);

double consensus_residual(const SolverState& state);
/// ||y - R y||, zero exactly when all in-cluster tracking variables agree.
double tracking_residual(const SolverState& state);
double tracking_residual(const SolverState& state, const MultiClusterGame& game);

struct RunOutcome {
  SolverState state;
  IterationTrace trace;
  bool converged = false;
  long iterations = 0;
  double consensus_residual = 0.0;
  double tracking_residual = 0.0;
  /// Fixed-point residual of the first agent's estimate at the run's alpha.
  double natural_residual = 0.0;
  double final_err_vs_reference = 0.0;  // NaN without a reference
  double wall_ms = 0.0;
};

/// Iterate until the combined residual passes tolerance or the iteration
/// budget runs out. When a reference equilibrium is supplied the trace
/// carries the relative error of the stitched first-agent strategy against
/// it.
RunOutcome run(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets, const CommTopology& topo,
               const SolverConfig& config, const std::optional<Eigen::VectorXd>& reference = std::nullopt,
               const InitialEstimates& init = std::uint64_t{0});

}  // namespace mcgt
