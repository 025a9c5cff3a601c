#pragma once

#include <cstddef>
#include <vector>

#include "drmpc/common.hpp"

namespace drmpc {

struct TreeNode {
  int id = 0;
  int stage = 0;
  int mode = 1;           // 1-based arrival mode
  int parent = -1;        // -1 for the root
  std::vector<int> children;  // ordered by mode index; empty at leaves
};

/// Full d-ary scenario tree enumerating every mode sequence of length N
/// from the root mode. Ids are breadth-first, so each stage occupies a
/// contiguous id range and child k of a node has mode k+1. Immutable
/// after build.
class ScenarioTree {
 public:
  static ScenarioTree build(int root_mode, int horizon, int mode_count,
                            std::size_t node_cap = 1000000);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int horizon() const { return horizon_; }
  int mode_count() const { return mode_count_; }
  const TreeNode& node(int id) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  bool is_leaf(int id) const { return node(id).children.empty(); }

  /// Modes along the root -> id path; length = stage + 1.
  std::vector<int> node_history(int id) const;

  /// Half-open id range [first, last) of the nodes at stage k.
  std::pair<int, int> stage_range(int k) const;

 private:
  int horizon_ = 0;
  int mode_count_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<int> stage_first_;  // stage k starts at stage_first_[k]
};

}  // namespace drmpc
