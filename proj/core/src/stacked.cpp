#include "mcgt/stacked.hpp"

namespace mcgt {

StackedEstimate::StackedEstimate(Dimensions dims, Eigen::VectorXd data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (data_.size() != dims_.stacked_dim()) {
    throw DimensionError("StackedEstimate: data size does not match N*n");
  }
}

StackedEstimate StackedEstimate::consensus(const Dimensions& dims, const Eigen::VectorXd& x) {
  if (x.size() != dims.dim()) throw DimensionError("StackedEstimate::consensus: x must have dimension n");
  Eigen::VectorXd data(dims.stacked_dim());
  for (int i = 0; i < dims.agent_count(); ++i) data.segment(static_cast<long>(i) * dims.dim(), dims.dim()) = x;
  return StackedEstimate(dims, std::move(data));
}

StackedEstimate StackedEstimate::zero(const Dimensions& dims) {
  return StackedEstimate(dims, Eigen::VectorXd::Zero(dims.stacked_dim()));
}

Eigen::VectorXd StackedEstimate::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dims_.dim());
  for (int i = 0; i < dims_.agent_count(); ++i) m += agent(i);
  return m / dims_.agent_count();
}

double StackedEstimate::consensus_residual() const {
  const Eigen::VectorXd m = mean();
  double sq = 0.0;
  for (int i = 0; i < dims_.agent_count(); ++i) sq += (agent(i) - m).squaredNorm();
  return std::sqrt(sq);
}

Eigen::VectorXd StackedEstimate::stitched_first_agents() const {
  Eigen::VectorXd out(dims_.dim());
  for (int h = 0; h < dims_.cluster_count(); ++h) {
    out.segment(dims_.block_offset(h), dims_.block_dim(h)) = block(dims_.first_agent(h), h);
  }
  return out;
}

namespace selectors {

Eigen::VectorXd apply_q(const StackedEstimate& x) {
  const Dimensions& dims = x.dims();
  Eigen::VectorXd out(dims.tracking_dim());
  for (int i = 0; i < dims.agent_count(); ++i) {
    out.segment(dims.tracking_slot(i), dims.block_dim(dims.cluster_of(i))) = x.own_block(i);
  }
  return out;
}

Eigen::VectorXd apply_q_transpose(const Dimensions& dims, const Eigen::VectorXd& y) {
  if (y.size() != dims.tracking_dim()) throw DimensionError("apply_q_transpose: tracking-layout size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dims.stacked_dim());
  for (int i = 0; i < dims.agent_count(); ++i) {
    const int h = dims.cluster_of(i);
    out.segment(static_cast<long>(i) * dims.dim() + dims.block_offset(h), dims.block_dim(h)) =
        y.segment(dims.tracking_slot(i), dims.block_dim(h));
  }
  return out;
}

Eigen::VectorXd apply_r(const Dimensions& dims, const Eigen::VectorXd& y) {
  if (y.size() != dims.tracking_dim()) throw DimensionError("apply_r: tracking-layout size mismatch");
  Eigen::VectorXd out(dims.tracking_dim());
  for (int h = 0; h < dims.cluster_count(); ++h) {
    const int nh = dims.block_dim(h);
    const int Nh = dims.agents_in(h);
    const int off = dims.tracking_offset(h);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(nh);
    for (int j = 0; j < Nh; ++j) avg += y.segment(off + j * nh, nh);
    avg /= Nh;
    for (int j = 0; j < Nh; ++j) out.segment(off + j * nh, nh) = avg;
  }
  return out;
}

Eigen::MatrixXd dense_q(const Dimensions& dims) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(dims.tracking_dim(), dims.stacked_dim());
  for (int i = 0; i < dims.agent_count(); ++i) {
    const int h = dims.cluster_of(i);
    for (int d = 0; d < dims.block_dim(h); ++d) {
      q(dims.tracking_slot(i) + d, static_cast<long>(i) * dims.dim() + dims.block_offset(h) + d) = 1.0;
    }
  }
  return q;
}

Eigen::MatrixXd dense_r(const Dimensions& dims) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(dims.tracking_dim(), dims.tracking_dim());
  for (int h = 0; h < dims.cluster_count(); ++h) {
    const int nh = dims.block_dim(h);
    const int Nh = dims.agents_in(h);
    const int off = dims.tracking_offset(h);
    for (int j = 0; j < Nh; ++j) {
      for (int l = 0; l < Nh; ++l) {
        for (int d = 0; d < nh; ++d) r(off + j * nh + d, off + l * nh + d) = 1.0 / Nh;
      }
    }
  }
  return r;
}

}  // namespace selectors

}  // namespace mcgt
