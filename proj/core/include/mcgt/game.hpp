#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <optional>
#include <vector>

#include "mcgt/dimensions.hpp"
#include "mcgt/stacked.hpp"

namespace mcgt {

/// One agent's private cost: a value oracle on the joint space R^n and the
/// gradient of that cost with respect to the agent's own cluster block only.
/// Both must be pure functions; they are evaluated concurrently.
struct AgentCost {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

/// A convex, coordinatewise-monotone non-quadratic addition riding on top of
/// a quadratic cost (the battery |s| smoothing is the one user). Curvature is
/// bounded by max_curvature on the single coordinate it touches, which keeps
/// exact constant bounds available for almost-quadratic games.
struct CurvatureTerm {
  int agent;
  int coordinate;  // global index in R^n
  double max_curvature;
};

/// Per-agent affine gradient data for (almost-)quadratic games:
/// grad_i(x) = grad_jacobian[i] * x + grad_affine[i], plus curvature terms
/// for any smooth convex extras. Enables exact mu/L0 assembly.
struct QuadraticStructure {
  std::vector<Eigen::SparseMatrix<double>> grad_jacobian;  // n_h x n, global agent order
  std::vector<Eigen::VectorXd> grad_affine;                // n_h
  std::vector<CurvatureTerm> curvature_terms;

  bool pure_quadratic() const { return curvature_terms.empty(); }
  /// Jacobian of the game mapping M: rows of cluster h are the 1/N_h-scaled
  /// sum of that cluster's agent gradient Jacobians.
  Eigen::MatrixXd assemble_game_jacobian(const Dimensions& dims) const;
  Eigen::VectorXd assemble_game_affine(const Dimensions& dims) const;
  /// Largest extra diagonal curvature the non-quadratic terms can add to the
  /// game Jacobian (already 1/N_h-scaled).
  double max_mapping_curvature(const Dimensions& dims) const;
  /// Same bound for one agent's own gradient map (unscaled).
  double max_agent_curvature(int agent) const;
};

/// A constrained multi-cluster game: H clusters of cooperating agents, each
/// cluster minimizing the 1/N_h-averaged sum of its agents' costs over its
/// own decision block, clusters coupled through the joint argument.
class MultiClusterGame {
 public:
  MultiClusterGame(Dimensions dims, std::vector<std::vector<AgentCost>> per_cluster_costs);

  const Dimensions& dims() const { return dims_; }
  const AgentCost& agent_cost(int agent) const { return costs_.at(agent); }

  double agent_value(int agent, const Eigen::VectorXd& x) const;
  /// Gradient of agent i's cost w.r.t. its own cluster block, at joint x.
  Eigen::VectorXd agent_gradient(int agent, const Eigen::VectorXd& x) const;

  /// F^h(x) = (1/N_h) sum_i f_i^h(x).
  double cluster_cost(int cluster, const Eigen::VectorXd& x) const;
  Eigen::VectorXd cluster_costs(const Eigen::VectorXd& x) const;
  /// grad_h F^h(x), the h-th block of the game mapping.
  Eigen::VectorXd cluster_gradient(int cluster, const Eigen::VectorXd& x) const;
  /// Game mapping M(x) = col_h grad_h F^h(x).
  Eigen::VectorXd game_mapping(const Eigen::VectorXd& x) const;
  /// Extended mapping on per-agent estimates: each cluster block is
  /// 1_{N_h} (x) the average of the cluster's own-gradients, each agent
  /// evaluating at its own estimate. Tracking-vector layout.
  Eigen::VectorXd extended_mapping(const StackedEstimate& x) const;

  void set_quadratic(QuadraticStructure q);
  bool has_quadratic() const { return quadratic_.has_value(); }
  const QuadraticStructure& quadratic() const;

 private:
  Dimensions dims_;
  std::vector<AgentCost> costs_;  // flattened, global agent order
  std::optional<QuadraticStructure> quadratic_;
};

}  // namespace mcgt
