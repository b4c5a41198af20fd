#include "mcgt/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "mcgt/oracle.hpp"

namespace mcgt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Chunked parallel loop over agents. Each index is processed exactly once
/// and workers write disjoint slices, so results do not depend on the
/// thread count.
void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  const int workers = std::min(threads, count);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(error);
}

void validate_inputs(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                     const CommTopology& topo) {
  const Dimensions& dims = game.dims();
  if (static_cast<int>(sets.size()) != dims.cluster_count()) {
    throw DimensionError("solver: need one feasible set per cluster");
  }
  for (int h = 0; h < dims.cluster_count(); ++h) {
    if (sets[h].dim() != dims.block_dim(h)) {
      throw DimensionError("solver: feasible set dimension mismatch for cluster " + std::to_string(h));
    }
  }
  if (topo.global_graph().vertex_count() != dims.agent_count()) {
    throw DimensionError("solver: global graph size must equal the agent count");
  }
  if (topo.cluster_count() != dims.cluster_count()) {
    throw DimensionError("solver: cluster graph count must equal H");
  }
  for (int h = 0; h < dims.cluster_count(); ++h) {
    if (topo.cluster_graph(h).vertex_count() != dims.agents_in(h)) {
      throw DimensionError("solver: cluster graph size mismatch for cluster " + std::to_string(h));
    }
  }
}

void refresh_gradients(const MultiClusterGame& game, SolverState& state, int threads) {
  const Dimensions& dims = game.dims();
  parallel_for(dims.agent_count(), threads, [&](int i) {
    state.gradients.segment(dims.tracking_slot(i), dims.block_dim(dims.cluster_of(i))) =
        game.agent_gradient(i, state.estimates.agent(i));
  });
}

/// Advance `cur` into `next` by one synchronous round.
void step_into(const SolverState& cur, SolverState& next, const MultiClusterGame& game,
               const std::vector<FeasibleSet>& sets, const CommTopology& topo, double alpha, int threads,
               Eigen::MatrixXd& xhat) {
  const Dimensions& dims = game.dims();
  const int n = dims.dim();
  const int N = dims.agent_count();

  // (8a) consensus over the global graph: xhat_i = sum_j w_ij x_j
  Eigen::Map<const Eigen::MatrixXd> x_cols(cur.estimates.data().data(), n, N);
  xhat.noalias() = x_cols * topo.w();

  // (8b) own block: project the tracked gradient step; (8c) copy the rest.
  // New gradients are evaluated right away so (8d) sees x(k+1).
  parallel_for(N, threads, [&](int i) {
    const int h = dims.cluster_of(i);
    const int nh = dims.block_dim(h);
    auto agent_next = next.estimates.agent(i);
    agent_next = xhat.col(i);
    Eigen::VectorXd stepped =
        xhat.col(i).segment(dims.block_offset(h), nh) - alpha * cur.tracking.segment(dims.tracking_slot(i), nh);
    agent_next.segment(dims.block_offset(h), nh) = sets[h].project(stepped);
    next.gradients.segment(dims.tracking_slot(i), nh) = game.agent_gradient(i, next.estimates.agent(i));
  });

  // (8d) tracking update over the cluster graphs with the gradient increment.
  for (int h = 0; h < dims.cluster_count(); ++h) {
    const int nh = dims.block_dim(h);
    const int Nh = dims.agents_in(h);
    const int off = dims.tracking_offset(h);
    Eigen::Map<const Eigen::MatrixXd> y_cols(cur.tracking.data() + off, nh, Nh);
    Eigen::Map<Eigen::MatrixXd> y_next(next.tracking.data() + off, nh, Nh);
    y_next.noalias() = y_cols * topo.v(h);
  }
  next.tracking += next.gradients - cur.gradients;
  next.iteration = cur.iteration + 1;
}

bool all_feasible(const SolverState& state, const std::vector<FeasibleSet>& sets, const Dimensions& dims) {
  for (int i = 0; i < dims.agent_count(); ++i) {
    const int h = dims.cluster_of(i);
    if (!sets[h].contains(state.estimates.own_block(i), 1e-7)) return false;
  }
  return true;
}

double reference_error(const SolverState& state, const Eigen::VectorXd& reference) {
  const Eigen::VectorXd stitched = state.estimates.stitched_first_agents();
  return (stitched - reference).norm() / std::max(reference.norm(), 1e-12);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("SolverConfig: alpha must be positive");
  if (max_iterations < 1) throw ValidationError("SolverConfig: max_iterations must be >= 1");
  if (trace_stride < 1) throw ValidationError("SolverConfig: trace_stride must be >= 1");
  if (threads < 1) throw ValidationError("SolverConfig: threads must be >= 1");
  if (!(tolerance > 0.0)) throw ValidationError("SolverConfig: tolerance must be positive");
}

SolverState initialize(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                       const CommTopology& topo, const InitialEstimates& init) {
  validate_inputs(game, sets, topo);
  const Dimensions& dims = game.dims();

  StackedEstimate estimates = StackedEstimate::zero(dims);
  if (const auto* seed = std::get_if<std::uint64_t>(&init)) {
    std::mt19937_64 rng(*seed);
    for (int i = 0; i < dims.agent_count(); ++i) {
      auto agent = estimates.agent(i);
      for (int h = 0; h < dims.cluster_count(); ++h) {
        for (int d = 0; d < dims.block_dim(h); ++d) {
          std::uniform_real_distribution<double> u(sets[h].bound_lower()[d], sets[h].bound_upper()[d]);
          agent[dims.block_offset(h) + d] = u(rng);
        }
      }
    }
  } else if (const auto* x0 = std::get_if<Eigen::VectorXd>(&init)) {
    estimates = StackedEstimate::consensus(dims, *x0);
  } else {
    estimates = std::get<StackedEstimate>(init);
    if (!(estimates.dims() == dims)) throw DimensionError("initialize: estimate dimensions do not match game");
  }
  for (int i = 0; i < dims.agent_count(); ++i) {
    const int h = dims.cluster_of(i);
    estimates.own_block(i) = sets[h].project(estimates.own_block(i));
  }

  SolverState state{0, std::move(estimates), Eigen::VectorXd::Zero(dims.tracking_dim()),
                    Eigen::VectorXd::Zero(dims.tracking_dim())};
  refresh_gradients(game, state, 1);
  state.tracking = state.gradients;
  return state;
}

SolverState step(const SolverState& state, const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                 const CommTopology& topo, const SolverConfig& config) {
  config.validate();
  validate_inputs(game, sets, topo);
  SolverState next = state;
  Eigen::MatrixXd xhat(game.dims().dim(), game.dims().agent_count());
  step_into(state, next, game, sets, topo, config.alpha, config.threads, xhat);
  return next;
}

double consensus_residual(const SolverState& state) { return state.estimates.consensus_residual(); }

double tracking_residual(const SolverState& state) {
  const Eigen::VectorXd avg = selectors::apply_r(state.estimates.dims(), state.tracking);
  return (state.tracking - avg).norm();
}

double tracking_residual(const SolverState& state, const MultiClusterGame& game) {
  if (!(state.estimates.dims() == game.dims())) {
    throw DimensionError("tracking_residual: state does not match game dimensions");
  }
  return tracking_residual(state);
}

RunOutcome run(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets, const CommTopology& topo,
               const SolverConfig& config, const std::optional<Eigen::VectorXd>& reference,
               const InitialEstimates& init) {
  config.validate();
  const Dimensions& dims = game.dims();
  if (reference && reference->size() != dims.dim()) {
    throw DimensionError("run: reference must have dimension n");
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto wall_ms = [&t0] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };

  RunOutcome outcome;
  outcome.trace.has_reference = reference.has_value();

  SolverState cur = initialize(game, sets, topo, init);
  SolverState nxt = cur;
  Eigen::MatrixXd xhat(dims.dim(), dims.agent_count());

  auto record = [&](const SolverState& s) {
    TraceRecord r;
    r.k = s.iteration;
    r.err_vs_reference = reference ? reference_error(s, *reference) : kNaN;
    r.consensus_residual = consensus_residual(s);
    r.tracking_residual = tracking_residual(s);
    r.feasible = all_feasible(s, sets, dims);
    r.wall_ms = wall_ms();
    outcome.trace.records.push_back(r);
    return r;
  };
  auto combined_residual = [&](const SolverState& s) {
    const double nat = natural_residual(game, sets, Eigen::VectorXd(s.estimates.agent(0)), config.alpha);
    return std::max({consensus_residual(s), tracking_residual(s), nat});
  };

  record(cur);
  bool recorded_last = true;
  for (long k = 1; k <= config.max_iterations; ++k) {
    step_into(cur, nxt, game, sets, topo, config.alpha, config.threads, xhat);
    std::swap(cur, nxt);
    recorded_last = false;
    if (k % config.trace_stride == 0 || k == config.max_iterations) {
      record(cur);
      recorded_last = true;
      if (combined_residual(cur) <= config.tolerance) {
        outcome.converged = true;
        break;
      }
    }
  }
  if (!recorded_last) record(cur);

  outcome.iterations = cur.iteration;
  outcome.consensus_residual = consensus_residual(cur);
  outcome.tracking_residual = tracking_residual(cur);
  outcome.natural_residual =
      natural_residual(game, sets, Eigen::VectorXd(cur.estimates.agent(0)), config.alpha);
  outcome.final_err_vs_reference = reference ? reference_error(cur, *reference) : kNaN;
  outcome.state = std::move(cur);
  outcome.wall_ms = wall_ms();
  return outcome;
}

}  // namespace mcgt
