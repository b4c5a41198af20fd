#include "mcgt/game.hpp"

namespace mcgt {

Eigen::MatrixXd QuadraticStructure::assemble_game_jacobian(const Dimensions& dims) const {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(dims.dim(), dims.dim());
  for (int i = 0; i < dims.agent_count(); ++i) {
    const int h = dims.cluster_of(i);
    const double scale = 1.0 / dims.agents_in(h);
    const Eigen::SparseMatrix<double>& g = grad_jacobian.at(i);
    for (int col = 0; col < g.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(g, col); it; ++it) {
        j(dims.block_offset(h) + it.row(), it.col()) += scale * it.value();
      }
    }
  }
  return j;
}

Eigen::VectorXd QuadraticStructure::assemble_game_affine(const Dimensions& dims) const {
  Eigen::VectorXd m0 = Eigen::VectorXd::Zero(dims.dim());
  for (int i = 0; i < dims.agent_count(); ++i) {
    const int h = dims.cluster_of(i);
    m0.segment(dims.block_offset(h), dims.block_dim(h)) += grad_affine.at(i) / dims.agents_in(h);
  }
  return m0;
}

double QuadraticStructure::max_mapping_curvature(const Dimensions& dims) const {
  double worst = 0.0;
  for (const CurvatureTerm& t : curvature_terms) {
    worst = std::max(worst, t.max_curvature / dims.agents_in(dims.cluster_of(t.agent)));
  }
  return worst;
}

double QuadraticStructure::max_agent_curvature(int agent) const {
  double worst = 0.0;
  for (const CurvatureTerm& t : curvature_terms) {
    if (t.agent == agent) worst = std::max(worst, t.max_curvature);
  }
  return worst;
}

MultiClusterGame::MultiClusterGame(Dimensions dims, std::vector<std::vector<AgentCost>> per_cluster_costs)
    : dims_(std::move(dims)) {
  if (static_cast<int>(per_cluster_costs.size()) != dims_.cluster_count()) {
    throw DimensionError("MultiClusterGame: need one cost list per cluster");
  }
  for (int h = 0; h < dims_.cluster_count(); ++h) {
    if (static_cast<int>(per_cluster_costs[h].size()) != dims_.agents_in(h)) {
      throw DimensionError("MultiClusterGame: cluster " + std::to_string(h) +
                           " cost list length does not match N_h");
    }
    for (auto& cost : per_cluster_costs[h]) {
      if (!cost.value || !cost.gradient) {
        throw ValidationError("MultiClusterGame: every agent needs value and gradient oracles");
      }
      costs_.push_back(std::move(cost));
    }
  }
}

double MultiClusterGame::agent_value(int agent, const Eigen::VectorXd& x) const {
  if (x.size() != dims_.dim()) throw DimensionError("agent_value: x must have dimension n");
  return costs_.at(agent).value(x);
}

Eigen::VectorXd MultiClusterGame::agent_gradient(int agent, const Eigen::VectorXd& x) const {
  if (x.size() != dims_.dim()) throw DimensionError("agent_gradient: x must have dimension n");
  Eigen::VectorXd g = costs_.at(agent).gradient(x);
  if (g.size() != dims_.block_dim(dims_.cluster_of(agent))) {
    throw DimensionError("agent_gradient: oracle returned a vector of the wrong block dimension");
  }
  return g;
}

double MultiClusterGame::cluster_cost(int cluster, const Eigen::VectorXd& x) const {
  if (cluster < 0 || cluster >= dims_.cluster_count()) throw DimensionError("cluster_cost: invalid cluster index");
  if (x.size() != dims_.dim()) throw DimensionError("cluster_cost: x must have dimension n");
  double sum = 0.0;
  for (int j = 0; j < dims_.agents_in(cluster); ++j) sum += costs_[dims_.first_agent(cluster) + j].value(x);
  return sum / dims_.agents_in(cluster);
}

Eigen::VectorXd MultiClusterGame::cluster_costs(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(dims_.cluster_count());
  for (int h = 0; h < dims_.cluster_count(); ++h) out[h] = cluster_cost(h, x);
  return out;
}

Eigen::VectorXd MultiClusterGame::cluster_gradient(int cluster, const Eigen::VectorXd& x) const {
  if (cluster < 0 || cluster >= dims_.cluster_count()) {
    throw DimensionError("cluster_gradient: invalid cluster index");
  }
  if (x.size() != dims_.dim()) throw DimensionError("cluster_gradient: x must have dimension n");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dims_.block_dim(cluster));
  for (int j = 0; j < dims_.agents_in(cluster); ++j) {
    g += agent_gradient(dims_.first_agent(cluster) + j, x);
  }
  return g / dims_.agents_in(cluster);
}

Eigen::VectorXd MultiClusterGame::game_mapping(const Eigen::VectorXd& x) const {
  if (x.size() != dims_.dim()) throw DimensionError("game_mapping: x must have dimension n");
  Eigen::VectorXd m(dims_.dim());
  for (int h = 0; h < dims_.cluster_count(); ++h) {
    m.segment(dims_.block_offset(h), dims_.block_dim(h)) = cluster_gradient(h, x);
  }
  return m;
}

Eigen::VectorXd MultiClusterGame::extended_mapping(const StackedEstimate& x) const {
  if (!(x.dims() == dims_)) throw DimensionError("extended_mapping: estimate dimensions do not match the game");
  Eigen::VectorXd out(dims_.tracking_dim());
  for (int h = 0; h < dims_.cluster_count(); ++h) {
    const int nh = dims_.block_dim(h);
    const int Nh = dims_.agents_in(h);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(nh);
    for (int j = 0; j < Nh; ++j) {
      const int agent = dims_.first_agent(h) + j;
      avg += agent_gradient(agent, x.agent(agent));
    }
    avg /= Nh;
    for (int j = 0; j < Nh; ++j) out.segment(dims_.tracking_offset(h) + j * nh, nh) = avg;
  }
  return out;
}

void MultiClusterGame::set_quadratic(QuadraticStructure q) {
  if (static_cast<int>(q.grad_jacobian.size()) != dims_.agent_count() ||
      static_cast<int>(q.grad_affine.size()) != dims_.agent_count()) {
    throw DimensionError("set_quadratic: need per-agent Jacobian rows and affine parts");
  }
  for (int i = 0; i < dims_.agent_count(); ++i) {
    const int nh = dims_.block_dim(dims_.cluster_of(i));
    if (q.grad_jacobian[i].rows() != nh || q.grad_jacobian[i].cols() != dims_.dim() ||
        q.grad_affine[i].size() != nh) {
      throw DimensionError("set_quadratic: agent " + std::to_string(i) + " has mis-sized gradient data");
    }
  }
  quadratic_ = std::move(q);
}

const QuadraticStructure& MultiClusterGame::quadratic() const {
  if (!quadratic_) throw ValidationError("MultiClusterGame: no quadratic structure attached");
  return *quadratic_;
}

}  // namespace mcgt
