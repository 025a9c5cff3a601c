#include "drmpc/tree.hpp"

#include <algorithm>
#include <sstream>

namespace drmpc {

ScenarioTree ScenarioTree::build(int root_mode, int horizon, int mode_count,
                                 std::size_t node_cap) {
  if (mode_count < 1) throw Error("mode count must be at least 1");
  if (horizon < 1) throw Error("horizon must be at least 1");
  if (root_mode < 1 || root_mode > mode_count) {
    throw Error("root mode out of range");
  }

  std::size_t total = 1, level = 1;
  for (int k = 1; k <= horizon; ++k) {
    if (level > node_cap / static_cast<std::size_t>(mode_count)) {
      std::ostringstream msg;
      msg << "scenario tree would exceed the node cap of " << node_cap;
      throw Error(msg.str());
    }
    level *= static_cast<std::size_t>(mode_count);
    total += level;
    if (total > node_cap) {
      std::ostringstream msg;
      msg << "scenario tree would exceed the node cap of " << node_cap;
      throw Error(msg.str());
    }
  }

  ScenarioTree tree;
  tree.horizon_ = horizon;
  tree.mode_count_ = mode_count;
  tree.nodes_.reserve(total);
  tree.stage_first_.assign(horizon + 2, 0);

  tree.nodes_.push_back({0, 0, root_mode, -1, {}});
  tree.stage_first_[0] = 0;
  int stage_begin = 0;
  for (int k = 0; k < horizon; ++k) {
    const int stage_end = static_cast<int>(tree.nodes_.size());
    tree.stage_first_[k + 1] = stage_end;
    for (int id = stage_begin; id < stage_end; ++id) {
      for (int mode = 1; mode <= mode_count; ++mode) {
        const int child_id = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back({child_id, k + 1, mode, id, {}});
        tree.nodes_[id].children.push_back(child_id);
      }
    }
    stage_begin = stage_end;
  }
  tree.stage_first_[horizon + 1] = static_cast<int>(tree.nodes_.size());
  return tree;
}

const TreeNode& ScenarioTree::node(int id) const {
  if (id < 0 || id >= node_count()) throw Error("node id out of range");
  return nodes_[static_cast<std::size_t>(id)];
}

std::vector<int> ScenarioTree::node_history(int id) const {
  std::vector<int> modes;
  for (int cur = id; cur >= 0; cur = node(cur).parent) {
    modes.push_back(node(cur).mode);
  }
  std::reverse(modes.begin(), modes.end());
  return modes;
}

std::pair<int, int> ScenarioTree::stage_range(int k) const {
  if (k < 0 || k > horizon_) throw Error("stage out of range");
  return {stage_first_[k], stage_first_[k + 1]};
}

}  // namespace drmpc
