#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mcgt/constraints.hpp"
#include "mcgt/game.hpp"
#include "mcgt/topology.hpp"

namespace mcgt {

/// Ground-truth Nash equilibrium from the centralized projected-gradient
/// scheme x^h <- proj_h[x^h - gamma grad_h F^h(x)], all clusters stepping
/// simultaneously.
struct NashResult {
  Eigen::VectorXd x_star;
  long iterations = 0;
  double natural_residual = 0.0;
  Eigen::VectorXd cluster_costs;
  bool converged = false;
  double gamma = 0.0;
};

struct OracleOptions {
  std::optional<double> gamma;  // unset: mu/L0^2 for quadratic games, else backtracked
  double tolerance = 1e-10;
  long max_iterations = 500000;
};

NashResult centralized_solve(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                             const OracleOptions& options = {});

/// ||x - proj_Omega[x - alpha M(x)]||; zero exactly at solutions of
/// VI(Omega, M), for any alpha > 0.
double natural_residual(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                        const Eigen::VectorXd& x, double alpha);

/// Numerical check of the solution equivalences: (a) x* solves the
/// variational inequality (natural residual), (c) 1_N (x) x* is a fixed
/// point of the stacked projected map, and per-cluster best-response
/// stationarity of x^h* against the other clusters.
struct Lemma1Report {
  double vi_residual = 0.0;
  double fixed_point_residual = 0.0;
  double best_response_residual = 0.0;
  double tolerance = 0.0;
  bool vi_pass = false;
  bool fixed_point_pass = false;
  bool best_response_pass = false;
  bool all_pass() const { return vi_pass && fixed_point_pass && best_response_pass; }
};

Lemma1Report check_lemma1(const MultiClusterGame& game, const std::vector<FeasibleSet>& sets,
                          const CommTopology& topo, const Eigen::VectorXd& x_star, double alpha,
                          double tolerance = 1e-7);

}  // namespace mcgt
