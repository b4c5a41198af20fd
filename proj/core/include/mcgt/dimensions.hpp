#pragma once

#include <vector>

#include "mcgt/errors.hpp"

namespace mcgt {

/// Size bookkeeping for a multi-cluster game: H clusters, N_h agents and an
/// n_h-dimensional decision block per cluster. Agents are numbered globally
/// 0..N-1 with cluster 0's agents first, then cluster 1's, and so on; the
/// joint decision vector x in R^n stacks the cluster blocks in the same
/// order. Immutable after construction.
class Dimensions {
 public:
  Dimensions(std::vector<int> agents_per_cluster, std::vector<int> block_dims);

  int cluster_count() const { return static_cast<int>(agents_per_cluster_.size()); }
  int agent_count() const { return total_agents_; }
  /// Dimension n of the joint decision vector.
  int dim() const { return total_dim_; }
  /// Dimension of the stacked per-agent estimate vector, N*n.
  long stacked_dim() const { return static_cast<long>(total_agents_) * total_dim_; }
  /// Dimension of the stacked tracking vector, sum_h N_h*n_h.
  int tracking_dim() const { return tracking_dim_; }

  int agents_in(int cluster) const { return agents_per_cluster_.at(cluster); }
  int block_dim(int cluster) const { return block_dims_.at(cluster); }
  /// Offset of cluster `h`'s block inside x in R^n.
  int block_offset(int cluster) const { return block_offsets_.at(cluster); }
  /// Global index of the first agent of a cluster.
  int first_agent(int cluster) const { return agent_offsets_.at(cluster); }
  int cluster_of(int agent) const { return cluster_of_agent_.at(agent); }
  /// Position of an agent within its own cluster.
  int local_index(int agent) const { return agent - agent_offsets_[cluster_of_agent_.at(agent)]; }

  /// Offset of cluster `h`'s block inside the tracking vector.
  int tracking_offset(int cluster) const { return tracking_offsets_.at(cluster); }
  /// Offset of an agent's n_h-sized slot inside the tracking vector.
  int tracking_slot(int agent) const {
    const int h = cluster_of(agent);
    return tracking_offsets_[h] + local_index(agent) * block_dims_[h];
  }

  const std::vector<int>& agents_per_cluster() const { return agents_per_cluster_; }
  const std::vector<int>& block_dims() const { return block_dims_; }

  bool operator==(const Dimensions& other) const {
    return agents_per_cluster_ == other.agents_per_cluster_ && block_dims_ == other.block_dims_;
  }

 private:
  std::vector<int> agents_per_cluster_;
  std::vector<int> block_dims_;
  std::vector<int> block_offsets_;
  std::vector<int> agent_offsets_;
  std::vector<int> tracking_offsets_;
  std::vector<int> cluster_of_agent_;
  int total_agents_ = 0;
  int total_dim_ = 0;
  int tracking_dim_ = 0;
};

}  // namespace mcgt
