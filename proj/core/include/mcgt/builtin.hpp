#pragma once

#include <cstdint>

#include "mcgt/constraints.hpp"
#include "mcgt/game.hpp"
#include "mcgt/topology.hpp"

namespace mcgt {

/// TG1: two clusters of two agents each, scalar blocks.
/// Cluster costs F1 = (x1)^2 + x1 x2 and F2 = (x2)^2 - x1 x2, realized by
/// agent costs f11 = 2 x1^2, f21 = 2 x1 x2, f12 = 2 x2^2, f22 = -2 x1 x2.
/// Game Jacobian [[2, 1], [-1, 2]]: strongly monotone with mu = 2, L0 = sqrt5.
MultiClusterGame make_tg1_game();

/// Default TG1 constraint product: [1,2] x [-1,1]; unconstrained variant uses
/// a wide box instead.
std::vector<FeasibleSet> make_tg1_sets(bool constrained = true);

/// Nash equilibria derived from the KKT conditions.
Eigen::Vector2d tg1_constrained_ne();    // (1, 0.5)
Eigen::Vector2d tg1_unconstrained_ne();  // (0, 0)

/// Ring over the four agents globally, single-edge graphs inside each
/// cluster. Keeps sigma = 1/3 > 0 so the step-size machinery stays
/// non-degenerate.
CommTopology make_tg1_topology();

struct RandomGameSpec {
  std::uint64_t seed = 0;
  int max_clusters = 3;
  int max_agents_per_cluster = 4;
  int max_block_dim = 3;
  /// Strong-monotonicity floor; the generator ridges the diagonal up to it.
  double mu_target = 1.0;
  double box_halfwidth = 2.0;
  /// Add one demand-style hyperplane per cluster through an interior point.
  bool with_hyperplane = true;
  double linear_scale = 1.0;
};

struct RandomGame {
  MultiClusterGame game;
  std::vector<FeasibleSet> sets;
};

/// Seeded random quadratic multi-cluster game with box (optionally
/// box-and-hyperplane) cluster sets. Strong monotonicity is guaranteed by
/// construction; exact constants are available through the attached
/// quadratic structure.
RandomGame make_random_quadratic_game(const RandomGameSpec& spec);

/// Seeded random topology for a game: connected Erdos-Renyi global and
/// per-cluster graphs with Metropolis weights.
CommTopology make_random_topology(const Dimensions& dims, double edge_probability, std::uint64_t seed);

}  // namespace mcgt
