#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mcgt/dimensions.hpp"
#include "mcgt/errors.hpp"

namespace mcgt {

/// Undirected simple graph. Edges are stored as unordered pairs; no
/// self-loops.
class UndirectedGraph {
 public:
  explicit UndirectedGraph(int vertex_count);

  void add_edge(int a, int b);
  bool has_edge(int a, int b) const;
  int vertex_count() const { return vertex_count_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }
  const std::vector<int>& neighbors(int v) const { return adjacency_[v]; }
  bool connected() const;

  static UndirectedGraph complete(int vertex_count);
  static UndirectedGraph ring(int vertex_count);
  static UndirectedGraph path(int vertex_count);
  /// Erdos-Renyi G(n, p), resampled until connected. Deterministic per seed.
  static UndirectedGraph random_connected(int vertex_count, double edge_probability, std::uint64_t seed);
  static UndirectedGraph from_edge_list(int vertex_count, const std::vector<std::pair<int, int>>& edges);

 private:
  int vertex_count_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
};

/// Symmetric doubly-stochastic weights over a graph: positive diagonal, zero
/// off-diagonal where no edge exists.
struct WeightMatrix {
  Eigen::MatrixXd w;

  int size() const { return static_cast<int>(w.rows()); }
  /// Row/column sums to one, symmetry, positive diagonal, sparsity on edges.
  void validate(const UndirectedGraph& graph, double tol = 1e-12) const;
};

/// Metropolis-Hastings weights: w_ij = 1/(1 + max(deg_i, deg_j)) on edges,
/// diagonal takes the complement. Doubly stochastic with positive diagonal
/// on any graph; requires connectivity so the result can mix.
WeightMatrix metropolis_weights(const UndirectedGraph& graph);

/// Second-largest eigenvalue modulus of a symmetric doubly-stochastic W: the
/// contraction factor of W toward consensus. 1.0 signals a non-mixing
/// (disconnected) matrix.
double contraction_sigma(const WeightMatrix& w);

/// Global graph/weights over all N agents plus per-cluster graphs/weights,
/// with cached contraction factors. Immutable after construction.
class CommTopology {
 public:
  CommTopology(UndirectedGraph global_graph, WeightMatrix global_weights,
               std::vector<UndirectedGraph> cluster_graphs, std::vector<WeightMatrix> cluster_weights);

  /// Metropolis weights over the given graphs.
  static CommTopology with_metropolis(UndirectedGraph global_graph, std::vector<UndirectedGraph> cluster_graphs);

  const UndirectedGraph& global_graph() const { return global_graph_; }
  const Eigen::MatrixXd& w() const { return global_weights_.w; }
  const UndirectedGraph& cluster_graph(int h) const { return cluster_graphs_.at(h); }
  const Eigen::MatrixXd& v(int h) const { return cluster_weights_.at(h).w; }
  int cluster_count() const { return static_cast<int>(cluster_graphs_.size()); }

  double sigma() const { return sigma_; }
  double sigma_v(int h) const { return sigma_v_.at(h); }
  /// max_h sigma_V^h
  double sigma_v() const { return sigma_v_max_; }

 private:
  UndirectedGraph global_graph_;
  WeightMatrix global_weights_;
  std::vector<UndirectedGraph> cluster_graphs_;
  std::vector<WeightMatrix> cluster_weights_;
  double sigma_ = 1.0;
  std::vector<double> sigma_v_;
  double sigma_v_max_ = 1.0;
};

/// One line of a validation report.
struct CheckResult {
  std::string name;
  bool pass;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
  void add(std::string name, bool pass, std::string detail = "");
};

/// Checks the communication assumptions: connectivity, double stochasticity,
/// symmetry, positive diagonals, sigma < 1 and sigma_V < 1, and that the
/// topology sizes match the game dimensions. Failures are carried in the
/// report, not thrown.
ValidationReport validate_topology(const Dimensions& dims, const CommTopology& topo);

}  // namespace mcgt
