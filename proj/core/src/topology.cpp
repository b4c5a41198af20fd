#include "mcgt/topology.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace mcgt {

UndirectedGraph::UndirectedGraph(int vertex_count) : vertex_count_(vertex_count), adjacency_(vertex_count) {
  if (vertex_count < 1) throw TopologyError("UndirectedGraph: need at least one vertex");
}

void UndirectedGraph::add_edge(int a, int b) {
  if (a < 0 || b < 0 || a >= vertex_count_ || b >= vertex_count_) {
    throw TopologyError("UndirectedGraph::add_edge: vertex out of range");
  }
  if (a == b) throw TopologyError("UndirectedGraph::add_edge: self-loops are not stored");
  if (has_edge(a, b)) return;
  edges_.emplace_back(std::min(a, b), std::max(a, b));
  adjacency_[a].push_back(b);
  adjacency_[b].push_back(a);
}

bool UndirectedGraph::has_edge(int a, int b) const {
  const auto& adj = adjacency_[a];
  return std::find(adj.begin(), adj.end(), b) != adj.end();
}

bool UndirectedGraph::connected() const {
  std::vector<char> seen(vertex_count_, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adjacency_[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == vertex_count_;
}

UndirectedGraph UndirectedGraph::complete(int n) {
  UndirectedGraph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
  return g;
}

UndirectedGraph UndirectedGraph::ring(int n) {
  UndirectedGraph g(n);
  if (n == 1) return g;
  if (n == 2) {
    g.add_edge(0, 1);
    return g;
  }
  for (int i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
  return g;
}

UndirectedGraph UndirectedGraph::path(int n) {
  UndirectedGraph g(n);
  for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

UndirectedGraph UndirectedGraph::random_connected(int n, double p, std::uint64_t seed) {
  if (p <= 0.0 || p > 1.0) throw TopologyError("random_connected: edge probability must be in (0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    UndirectedGraph g(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (coin(rng) < p) g.add_edge(i, j);
    if (g.connected()) return g;
  }
  throw TopologyError("random_connected: no connected sample within retry budget");
}

UndirectedGraph UndirectedGraph::from_edge_list(int n, const std::vector<std::pair<int, int>>& edges) {
  UndirectedGraph g(n);
  for (const auto& [a, b] : edges) g.add_edge(a, b);
  return g;
}

void WeightMatrix::validate(const UndirectedGraph& graph, double tol) const {
  const int n = size();
  if (n != graph.vertex_count()) throw ValidationError("WeightMatrix: size does not match graph");
  if (w.cols() != n) throw ValidationError("WeightMatrix: matrix not square");
  for (int i = 0; i < n; ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > tol) throw ValidationError("WeightMatrix: row sums must be 1");
    if (std::abs(w.col(i).sum() - 1.0) > tol) throw ValidationError("WeightMatrix: column sums must be 1");
    if (w(i, i) <= 0.0) throw ValidationError("WeightMatrix: diagonal must be strictly positive");
    for (int j = 0; j < n; ++j) {
      if (w(i, j) < -tol) throw ValidationError("WeightMatrix: entries must be nonnegative");
      if (std::abs(w(i, j) - w(j, i)) > tol) throw ValidationError("WeightMatrix: matrix must be symmetric");
      if (i != j && !graph.has_edge(i, j) && std::abs(w(i, j)) > tol) {
        throw ValidationError("WeightMatrix: nonzero weight off the edge set");
      }
    }
  }
}

WeightMatrix metropolis_weights(const UndirectedGraph& graph) {
  if (!graph.connected()) throw TopologyError("metropolis_weights: graph must be connected");
  const int n = graph.vertex_count();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : graph.edges()) {
    const double wij = 1.0 / (1.0 + std::max(graph.degree(i), graph.degree(j)));
    w(i, j) = wij;
    w(j, i) = wij;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return WeightMatrix{std::move(w)};
}

double contraction_sigma(const WeightMatrix& wm) {
  const int n = wm.size();
  const Eigen::MatrixXd& w = wm.w;
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ValidationError("contraction_sigma: weight matrix must be symmetric");
  }
  for (int i = 0; i < n; ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > 1e-10) {
      throw ValidationError("contraction_sigma: weight matrix must be doubly stochastic");
    }
  }
  if (n == 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w);
  if (es.info() != Eigen::Success) throw ValidationError("contraction_sigma: eigendecomposition failed");
  Eigen::VectorXd moduli = es.eigenvalues().cwiseAbs();
  // Drop one eigenvalue equal to 1 (the consensus direction); the largest
  // remaining modulus is sigma. A second unit eigenvalue stays and reports 1.
  std::vector<double> vals(moduli.data(), moduli.data() + n);
  std::sort(vals.begin(), vals.end());
  vals.pop_back();
  return vals.back();
}

namespace {

// sigma for possibly-invalid weights: a matrix that cannot mix (or is not a
// valid consensus matrix at all) reports 1.0 so downstream checks fail
// instead of throwing. Lets validate_topology inspect broken inputs.
double lenient_sigma(const WeightMatrix& wm) {
  const Eigen::MatrixXd& w = wm.w;
  if (w.rows() != w.cols()) return 1.0;
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-10) return 1.0;
  for (int i = 0; i < w.rows(); ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > 1e-10) return 1.0;
  }
  return contraction_sigma(wm);
}

}  // namespace

CommTopology::CommTopology(UndirectedGraph global_graph, WeightMatrix global_weights,
                           std::vector<UndirectedGraph> cluster_graphs, std::vector<WeightMatrix> cluster_weights)
    : global_graph_(std::move(global_graph)),
      global_weights_(std::move(global_weights)),
      cluster_graphs_(std::move(cluster_graphs)),
      cluster_weights_(std::move(cluster_weights)) {
  if (cluster_graphs_.size() != cluster_weights_.size()) {
    throw TopologyError("CommTopology: cluster graph/weight count mismatch");
  }
  if (global_weights_.size() != global_graph_.vertex_count()) {
    throw TopologyError("CommTopology: global weight matrix size must match the global graph");
  }
  sigma_ = lenient_sigma(global_weights_);
  int total = 0;
  sigma_v_.reserve(cluster_graphs_.size());
  for (std::size_t h = 0; h < cluster_graphs_.size(); ++h) {
    if (cluster_weights_[h].size() != cluster_graphs_[h].vertex_count()) {
      throw TopologyError("CommTopology: cluster weight matrix size must match its graph");
    }
    sigma_v_.push_back(lenient_sigma(cluster_weights_[h]));
    total += cluster_graphs_[h].vertex_count();
  }
  if (total != global_graph_.vertex_count()) {
    throw TopologyError("CommTopology: cluster graph sizes must sum to the global vertex count");
  }
  sigma_v_max_ = *std::max_element(sigma_v_.begin(), sigma_v_.end());
}

CommTopology CommTopology::with_metropolis(UndirectedGraph global_graph,
                                           std::vector<UndirectedGraph> cluster_graphs) {
  WeightMatrix w = metropolis_weights(global_graph);
  std::vector<WeightMatrix> vs;
  vs.reserve(cluster_graphs.size());
  for (const auto& g : cluster_graphs) vs.push_back(metropolis_weights(g));
  return CommTopology(std::move(global_graph), std::move(w), std::move(cluster_graphs), std::move(vs));
}

bool ValidationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

void ValidationReport::add(std::string name, bool pass, std::string detail) {
  checks.push_back(CheckResult{std::move(name), pass, std::move(detail)});
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void check_stochastic(ValidationReport& report, const std::string& label, const Eigen::MatrixXd& w,
                      const UndirectedGraph& graph) {
  const int n = static_cast<int>(w.rows());
  double row_err = 0.0, col_err = 0.0, asym = 0.0, min_diag = 1.0, min_entry = 0.0, off_edge = 0.0;
  for (int i = 0; i < n; ++i) {
    row_err = std::max(row_err, std::abs(w.row(i).sum() - 1.0));
    col_err = std::max(col_err, std::abs(w.col(i).sum() - 1.0));
    min_diag = std::min(min_diag, w(i, i));
    for (int j = 0; j < n; ++j) {
      asym = std::max(asym, std::abs(w(i, j) - w(j, i)));
      min_entry = std::min(min_entry, w(i, j));
      if (i != j && !graph.has_edge(i, j)) off_edge = std::max(off_edge, std::abs(w(i, j)));
    }
  }
  report.add(label + " double stochastic", row_err <= 1e-12 && col_err <= 1e-12 && min_entry >= -1e-12,
             "max row/col sum error " + num(std::max(row_err, col_err)));
  report.add(label + " symmetric", asym <= 1e-12, "max asymmetry " + num(asym));
  report.add(label + " positive diagonal", min_diag > 0.0, "min diagonal " + num(min_diag));
  report.add(label + " sparsity on edges", off_edge <= 1e-12, "max off-edge weight " + num(off_edge));
}

}  // namespace

ValidationReport validate_topology(const Dimensions& dims, const CommTopology& topo) {
  ValidationReport report;
  report.add("global size matches N", topo.global_graph().vertex_count() == dims.agent_count(),
             num(topo.global_graph().vertex_count()) + " vertices vs N=" + num(dims.agent_count()));
  report.add("cluster count matches H", topo.cluster_count() == dims.cluster_count(), "");
  report.add("global graph connected", topo.global_graph().connected(), "");
  check_stochastic(report, "global W", topo.w(), topo.global_graph());
  report.add("sigma < 1", topo.sigma() < 1.0, "sigma = " + num(topo.sigma()));
  const int H = std::min(topo.cluster_count(), dims.cluster_count());
  for (int h = 0; h < H; ++h) {
    const std::string label = "cluster " + std::to_string(h);
    report.add(label + " size matches N_h", topo.cluster_graph(h).vertex_count() == dims.agents_in(h), "");
    report.add(label + " graph connected", topo.cluster_graph(h).connected(), "");
    check_stochastic(report, label + " V", topo.v(h), topo.cluster_graph(h));
    report.add(label + " sigma_V < 1", topo.sigma_v(h) < 1.0, "sigma_V = " + num(topo.sigma_v(h)));
  }
  return report;
}

}  // namespace mcgt
