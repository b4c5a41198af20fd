#include "mcgt/builtin.hpp"

#include <random>

namespace mcgt {

namespace {

AgentCost quadratic_agent_cost(const Eigen::MatrixXd& p, const Eigen::VectorXd& q, int block_offset,
                               int block_dim) {
  return AgentCost{
      [p, q](const Eigen::VectorXd& x) { return 0.5 * x.dot(p * x) + q.dot(x); },
      [p, q, block_offset, block_dim](const Eigen::VectorXd& x) {
        return Eigen::VectorXd((p * x + q).segment(block_offset, block_dim));
      }};
}

}  // namespace

MultiClusterGame make_tg1_game() {
  Dimensions dims({2, 2}, {1, 1});
  auto scalar_cost = [](double pxx, double pxy, int own) {
    // f(x) = 0.5 pxx x_own^2 + pxy x0 x1 with the own-block gradient.
    return AgentCost{
        [pxx, pxy, own](const Eigen::VectorXd& x) { return 0.5 * pxx * x[own] * x[own] + pxy * x[0] * x[1]; },
        [pxx, pxy, own](const Eigen::VectorXd& x) {
          Eigen::VectorXd g(1);
          g[0] = pxx * x[own] + pxy * x[1 - own];
          return g;
        }};
  };
  std::vector<std::vector<AgentCost>> costs(2);
  costs[0].push_back(scalar_cost(4.0, 0.0, 0));   // f_1^1 = 2 x1^2
  costs[0].push_back(scalar_cost(0.0, 2.0, 0));   // f_2^1 = 2 x1 x2
  costs[1].push_back(scalar_cost(4.0, 0.0, 1));   // f_1^2 = 2 x2^2
  costs[1].push_back(scalar_cost(0.0, -2.0, 1));  // f_2^2 = -2 x1 x2

  MultiClusterGame game(dims, std::move(costs));

  QuadraticStructure quad;
  auto row = [](double c0, double c1) {
    Eigen::SparseMatrix<double> m(1, 2);
    if (c0 != 0.0) m.insert(0, 0) = c0;
    if (c1 != 0.0) m.insert(0, 1) = c1;
    m.makeCompressed();
    return m;
  };
  quad.grad_jacobian = {row(4.0, 0.0), row(0.0, 2.0), row(0.0, 4.0), row(-2.0, 0.0)};
  quad.grad_affine.assign(4, Eigen::VectorXd::Zero(1));
  game.set_quadratic(std::move(quad));
  return game;
}

std::vector<FeasibleSet> make_tg1_sets(bool constrained) {
  auto box1 = [](double lo, double hi) {
    return FeasibleSet({BoxSet(Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi))});
  };
  if (constrained) {
    std::vector<FeasibleSet> sets;
    sets.push_back(box1(1.0, 2.0));
    sets.push_back(box1(-1.0, 1.0));
    return sets;
  }
  std::vector<FeasibleSet> sets;
  sets.push_back(box1(-1e3, 1e3));
  sets.push_back(box1(-1e3, 1e3));
  return sets;
}

Eigen::Vector2d tg1_constrained_ne() { return {1.0, 0.5}; }
Eigen::Vector2d tg1_unconstrained_ne() { return {0.0, 0.0}; }

CommTopology make_tg1_topology() {
  std::vector<UndirectedGraph> clusters{UndirectedGraph::complete(2), UndirectedGraph::complete(2)};
  return CommTopology::with_metropolis(UndirectedGraph::ring(4), std::move(clusters));
}

RandomGame make_random_quadratic_game(const RandomGameSpec& spec) {
  if (spec.max_clusters < 1 || spec.max_agents_per_cluster < 1 || spec.max_block_dim < 1) {
    throw ValidationError("make_random_quadratic_game: size caps must be >= 1");
  }
  if (spec.mu_target <= 0.0) throw ValidationError("make_random_quadratic_game: mu_target must be positive");
  std::mt19937_64 rng(spec.seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const int H = uniform_int(1, spec.max_clusters);
  std::vector<int> agents(H), blocks(H);
  for (int h = 0; h < H; ++h) {
    agents[h] = uniform_int(1, spec.max_agents_per_cluster);
    blocks[h] = uniform_int(1, spec.max_block_dim);
  }
  Dimensions dims(agents, blocks);
  const int n = dims.dim();

  // Symmetric random quadratic form per agent, then a uniform own-block
  // diagonal ridge lifting lambda_min(sym J) to mu_target exactly.
  std::vector<Eigen::MatrixXd> p_mats(dims.agent_count());
  std::vector<Eigen::VectorXd> q_vecs(dims.agent_count());
  for (int i = 0; i < dims.agent_count(); ++i) {
    Eigen::MatrixXd b(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) b(r, c) = unit(rng);
    p_mats[i] = 0.5 * (b + b.transpose());
    Eigen::VectorXd q(n);
    for (int r = 0; r < n; ++r) q[r] = spec.linear_scale * unit(rng);
    q_vecs[i] = q;
  }
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < dims.agent_count(); ++i) {
    const int h = dims.cluster_of(i);
    j.middleRows(dims.block_offset(h), dims.block_dim(h)) +=
        p_mats[i].middleRows(dims.block_offset(h), dims.block_dim(h)) / dims.agents_in(h);
  }
  const double mu0 = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (j + j.transpose()))
                         .eigenvalues()
                         .minCoeff();
  if (mu0 < spec.mu_target) {
    const double ridge = spec.mu_target - mu0;
    for (int i = 0; i < dims.agent_count(); ++i) {
      const int h = dims.cluster_of(i);
      for (int d = 0; d < dims.block_dim(h); ++d) {
        const int c = dims.block_offset(h) + d;
        p_mats[i](c, c) += ridge;
      }
    }
  }

  std::vector<std::vector<AgentCost>> costs(H);
  QuadraticStructure quad;
  for (int i = 0; i < dims.agent_count(); ++i) {
    const int h = dims.cluster_of(i);
    costs[h].push_back(quadratic_agent_cost(p_mats[i], q_vecs[i], dims.block_offset(h), dims.block_dim(h)));
    quad.grad_jacobian.push_back(
        p_mats[i].middleRows(dims.block_offset(h), dims.block_dim(h)).sparseView());
    quad.grad_affine.push_back(q_vecs[i].segment(dims.block_offset(h), dims.block_dim(h)));
  }
  MultiClusterGame game(dims, std::move(costs));
  game.set_quadratic(std::move(quad));

  std::vector<FeasibleSet> sets;
  sets.reserve(H);
  for (int h = 0; h < H; ++h) {
    const int nh = dims.block_dim(h);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(nh, -spec.box_halfwidth);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(nh, spec.box_halfwidth);
    std::vector<MemberSet> members;
    members.emplace_back(BoxSet(lo, hi));
    FeasibleSetOptions options;
    if (spec.with_hyperplane) {
      Eigen::VectorXd normal(nh);
      double norm = 0.0;
      while (norm < 1e-3) {
        for (int d = 0; d < nh; ++d) normal[d] = unit(rng);
        norm = normal.norm();
      }
      Eigen::VectorXd interior(nh);
      for (int d = 0; d < nh; ++d) interior[d] = 0.5 * spec.box_halfwidth * unit(rng);
      members.emplace_back(Hyperplane(normal, normal.dot(interior)));
      options.feasible_hint = interior;
    }
    sets.emplace_back(std::move(members), std::move(options));
  }
  return RandomGame{std::move(game), std::move(sets)};
}

CommTopology make_random_topology(const Dimensions& dims, double edge_probability, std::uint64_t seed) {
  UndirectedGraph global = UndirectedGraph::random_connected(dims.agent_count(), edge_probability, seed);
  std::vector<UndirectedGraph> clusters;
  clusters.reserve(dims.cluster_count());
  for (int h = 0; h < dims.cluster_count(); ++h) {
    clusters.push_back(
        UndirectedGraph::random_connected(dims.agents_in(h), edge_probability, seed + 1000 + h));
  }
  return CommTopology::with_metropolis(std::move(global), std::move(clusters));
}

}  // namespace mcgt
