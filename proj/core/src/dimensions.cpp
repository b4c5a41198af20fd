#include "mcgt/dimensions.hpp"

namespace mcgt {

Dimensions::Dimensions(std::vector<int> agents_per_cluster, std::vector<int> block_dims)
    : agents_per_cluster_(std::move(agents_per_cluster)), block_dims_(std::move(block_dims)) {
  if (agents_per_cluster_.empty()) {
    throw DimensionError("Dimensions: need at least one cluster");
  }
  if (agents_per_cluster_.size() != block_dims_.size()) {
    throw DimensionError("Dimensions: agents_per_cluster and block_dims length mismatch");
  }
  const int H = static_cast<int>(agents_per_cluster_.size());
  block_offsets_.resize(H);
  agent_offsets_.resize(H);
  tracking_offsets_.resize(H);
  for (int h = 0; h < H; ++h) {
    if (agents_per_cluster_[h] < 1) throw DimensionError("Dimensions: every cluster needs at least one agent");
    if (block_dims_[h] < 1) throw DimensionError("Dimensions: every cluster block needs dimension >= 1");
    block_offsets_[h] = total_dim_;
    agent_offsets_[h] = total_agents_;
    tracking_offsets_[h] = tracking_dim_;
    total_dim_ += block_dims_[h];
    total_agents_ += agents_per_cluster_[h];
    tracking_dim_ += agents_per_cluster_[h] * block_dims_[h];
  }
  cluster_of_agent_.resize(total_agents_);
  for (int h = 0; h < H; ++h) {
    for (int j = 0; j < agents_per_cluster_[h]; ++j) {
      cluster_of_agent_[agent_offsets_[h] + j] = h;
    }
  }
}

}  // namespace mcgt
