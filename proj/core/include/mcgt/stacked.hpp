#pragma once

#include <Eigen/Dense>

#include "mcgt/dimensions.hpp"

namespace mcgt {

/// Per-agent estimates of the joint strategy, stored as one stacked vector of
/// dimension N*n in agent-major order (cluster 0's agents first). Each agent
/// slot holds a full copy of R^n; block accessors slice out the per-cluster
/// pieces.
class StackedEstimate {
 public:
  /// Trivial one-agent placeholder; lets state aggregates default-construct.
  StackedEstimate() : dims_({1}, {1}), data_(Eigen::VectorXd::Zero(1)) {}
  StackedEstimate(Dimensions dims, Eigen::VectorXd data);
  /// All agents initialized to the same joint vector x (consensus state).
  static StackedEstimate consensus(const Dimensions& dims, const Eigen::VectorXd& x);
  static StackedEstimate zero(const Dimensions& dims);

  const Dimensions& dims() const { return dims_; }
  const Eigen::VectorXd& data() const { return data_; }
  Eigen::VectorXd& data() { return data_; }

  Eigen::VectorBlock<Eigen::VectorXd> agent(int i) {
    return data_.segment(static_cast<long>(i) * dims_.dim(), dims_.dim());
  }
  Eigen::VectorBlock<const Eigen::VectorXd> agent(int i) const {
    return data_.segment(static_cast<long>(i) * dims_.dim(), dims_.dim());
  }
  /// Agent i's estimate of cluster h's block, x_i^{(h)}.
  Eigen::VectorBlock<Eigen::VectorXd> block(int i, int h) {
    return data_.segment(static_cast<long>(i) * dims_.dim() + dims_.block_offset(h), dims_.block_dim(h));
  }
  Eigen::VectorBlock<const Eigen::VectorXd> block(int i, int h) const {
    return data_.segment(static_cast<long>(i) * dims_.dim() + dims_.block_offset(h), dims_.block_dim(h));
  }
  /// Agent i's estimate of its own cluster's block, x_i^{(h(i))}.
  Eigen::VectorBlock<Eigen::VectorXd> own_block(int i) { return block(i, dims_.cluster_of(i)); }
  Eigen::VectorBlock<const Eigen::VectorXd> own_block(int i) const { return block(i, dims_.cluster_of(i)); }

  /// Agent-average of the estimates, x-bar in R^n.
  Eigen::VectorXd mean() const;
  /// ||x - 1_N (x) x-bar||, zero exactly at consensus.
  double consensus_residual() const;
  /// col over clusters of the first in-cluster agent's own block; the
  /// measurement point used for error-vs-reference traces.
  Eigen::VectorXd stitched_first_agents() const;

 private:
  Dimensions dims_;
  Eigen::VectorXd data_;
};

/// Index-map realizations of the assignment matrices. Q extracts every
/// agent's own-cluster block into the tracking layout; R averages each
/// cluster's sub-blocks. Neither matrix is ever materialized outside the
/// dense debug helpers.
namespace selectors {

/// Q x: tracking-layout vector of all own-cluster blocks.
Eigen::VectorXd apply_q(const StackedEstimate& x);
/// Q^T y: scatter a tracking-layout vector into stacked layout (zeros elsewhere).
Eigen::VectorXd apply_q_transpose(const Dimensions& dims, const Eigen::VectorXd& y);
/// R y: per-cluster block average repeated N_h times.
Eigen::VectorXd apply_r(const Dimensions& dims, const Eigen::VectorXd& y);

/// Dense Q / R for desk-scale cross-checks only.
Eigen::MatrixXd dense_q(const Dimensions& dims);
Eigen::MatrixXd dense_r(const Dimensions& dims);

}  // namespace selectors

}  // namespace mcgt
