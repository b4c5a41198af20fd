#include "mcgt/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "mcgt/stacked.hpp"

namespace mcgt {

namespace {

Eigen::VectorXd project_product(const std::vector<FeasibleSet>& sets, const Dimensions& dims,
                                const Eigen::VectorXd& u) {
  Eigen::VectorXd out(dims.dim());
  for (int h = 0; h < dims.cluster_count(); ++h) {
    out.segment(dims.block_offset(h), dims.block_dim(h)) =
        sets[h].project(u.segment(dims.block_offset(h), dims.block_dim(h)));
  }
  return out;
}

Eigen::VectorXd feasible_start(const std::vector<FeasibleSet>& sets, const Dimensions& dims) {
  Eigen::VectorXd x(dims.dim());
  for (int h = 0; h < dims.cluster_count(); ++h) {
    x.segment(dims.block_offset(h), dims.block_dim(h)) = sets[h].feasible_point();
  }
  return x;
}

double exact_gamma(const MultiClusterGame& game) {
  const Eigen::MatrixXd j = game.quadratic().assemble_game_jacobian(game.dims());
  const double mu =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (j + j.transpose())).eigenvalues().minCoeff();
  const double curvature = game.quadratic().max_mapping_curvature(game.dims());
  const Eigen::MatrixXd g = j.transpose() * j;
  const double l0 =
      std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().maxCoeff())) +
      curvature;
  if (!(mu > 0.0)) throw ValidationError("centralized_solve: game mapping is not strongly monotone");
  return mu / (l0 * l0);
}

double backtracked_gamma(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                         const Dimensions& dims) {
  // Crude Lipschitz probe over the box bounds, then halve the step until 25
  // probe iterations keep the natural residual non-increasing.
  std::mt19937_64 rng(12345);
  double l0 = 0.0;
  for (int s = 0; s < 200; ++s) {
    Eigen::VectorXd xa(dims.dim()), xb(dims.dim());
    for (int h = 0; h < dims.cluster_count(); ++h) {
      for (int d = 0; d < sets[h].dim(); ++d) {
        std::uniform_real_distribution<double> u(sets[h].bound_lower()[d], sets[h].bound_upper()[d]);
        xa[dims.block_offset(h) + d] = u(rng);
        xb[dims.block_offset(h) + d] = u(rng);
      }
    }
    const double dx = (xa - xb).norm();
    if (dx < 1e-12) continue;
    l0 = std::max(l0, (game.game_mapping(xa) - game.game_mapping(xb)).norm() / dx);
  }
  double gamma = l0 > 0.0 ? 1.0 / l0 : 1.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::VectorXd x = feasible_start(sets, dims);
    double prev = natural_residual(game, sets, x, gamma);
    bool stable = true;
    for (int k = 0; k < 25; ++k) {
      x = project_product(sets, dims, x - gamma * game.game_mapping(x));
      const double res = natural_residual(game, sets, x, gamma);
      if (res > prev * (1.0 + 1e-9) + 1e-15) {
        stable = false;
        break;
      }
      prev = res;
    }
    if (stable) return 0.9 * gamma;
    gamma *= 0.5;
  }
  throw ValidationError("centralized_solve: could not find a stable step size by backtracking");
}

}  // namespace

NashResult centralized_solve(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                             const OracleOptions& options) {
  const Dimensions& dims = game.dims();
  if (static_cast<int>(sets.size()) != dims.cluster_count()) {
    throw DimensionError("centralized_solve: need one feasible set per cluster");
  }
  for (int h = 0; h < dims.cluster_count(); ++h) {
    if (sets[h].dim() != dims.block_dim(h)) {
      throw DimensionError("centralized_solve: feasible set dimension mismatch for cluster " + std::to_string(h));
    }
  }
  if (options.max_iterations < 1) throw ValidationError("centralized_solve: max_iterations must be >= 1");

  double gamma;
  if (options.gamma) {
    if (!(*options.gamma > 0.0)) throw ValidationError("centralized_solve: gamma must be positive");
    gamma = *options.gamma;
  } else if (game.has_quadratic()) {
    gamma = exact_gamma(game);
  } else {
    gamma = backtracked_gamma(game, sets, dims);
  }

  NashResult result;
  result.gamma = gamma;
  Eigen::VectorXd x = feasible_start(sets, dims);
  double step_norm = 0.0;
  long k = 0;
  for (; k < options.max_iterations; ++k) {
    Eigen::VectorXd next = project_product(sets, dims, x - gamma * game.game_mapping(x));
    step_norm = (next - x).norm();
    x = std::move(next);
    if (step_norm <= options.tolerance) {
      result.converged = true;
      ++k;
      break;
    }
  }
  result.x_star = std::move(x);
  result.iterations = k;
  result.natural_residual = natural_residual(game, sets, result.x_star, gamma);
  result.cluster_costs = game.cluster_costs(result.x_star);
  return result;
}

double natural_residual(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                        const Eigen::VectorXd& x, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("natural_residual: alpha must be positive");
  const Dimensions& dims = game.dims();
  if (x.size() != dims.dim()) throw DimensionError("natural_residual: x must have dimension n");
  const Eigen::VectorXd proj = project_product(sets, dims, x - alpha * game.game_mapping(x));
  return (x - proj).norm();
}

Lemma1Report check_lemma1(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                          const CommTopology& topo, const Eigen::VectorXd& x_star, double alpha,
                          double tolerance) {
  const Dimensions& dims = game.dims();
  if (topo.global_graph().vertex_count() != dims.agent_count()) {
    throw DimensionError("check_lemma1: topology size does not match the game");
  }
  Lemma1Report report;
  report.tolerance = tolerance;

  // (a) x* solves VI(Omega, M): natural residual.
  report.vi_residual = natural_residual(game, sets, x_star, alpha);

  // (c) 1_N (x) x* is a fixed point of proj_bold[x - alpha Q^T M(x)]: only
  // own-cluster blocks move, each by the projected tracking direction.
  StackedEstimate consensus = StackedEstimate::consensus(dims, x_star);
  const Eigen::VectorXd mext = game.extended_mapping(consensus);
  double fp_sq = 0.0;
  for (int i = 0; i < dims.agent_count(); ++i) {
    const int h = dims.cluster_of(i);
    const Eigen::VectorXd own = consensus.block(i, h);
    const Eigen::VectorXd moved =
        sets[h].project(own - alpha * mext.segment(dims.tracking_slot(i), dims.block_dim(h)));
    fp_sq += (moved - own).squaredNorm();
  }
  report.fixed_point_residual = std::sqrt(fp_sq);

  // Per-cluster best response: projected-gradient stationarity of x^h*
  // against the other clusters' equilibrium blocks.
  double br = 0.0;
  for (int h = 0; h < dims.cluster_count(); ++h) {
    const Eigen::VectorXd own = x_star.segment(dims.block_offset(h), dims.block_dim(h));
    const Eigen::VectorXd moved = sets[h].project(own - alpha * game.cluster_gradient(h, x_star));
    br = std::max(br, (moved - own).norm());
  }
  report.best_response_residual = br;

  report.vi_pass = report.vi_residual <= tolerance;
  report.fixed_point_pass = report.fixed_point_residual <= tolerance;
  report.best_response_pass = report.best_response_residual <= tolerance;
  return report;
}

}  // namespace mcgt
