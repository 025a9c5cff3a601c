#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstddef>

#include "doctest.h"
#include "drmpc/tree.hpp"

using namespace drmpc;

TEST_CASE("node counts follow the geometric series") {
  for (int d = 1; d <= 4; ++d) {
    for (int horizon = 1; horizon <= 4; ++horizon) {
      const ScenarioTree tree = ScenarioTree::build(1, horizon, d);
      int expected = 0;
      int layer = 1;
      for (int k = 0; k <= horizon; ++k) {
        expected += layer;
        layer *= d;
      }
      CHECK(tree.node_count() == expected);
      CHECK(tree.horizon() == horizon);
      CHECK(tree.mode_count() == d);
    }
  }
}

TEST_CASE("stages occupy contiguous breadth-first id ranges") {
  const ScenarioTree tree = ScenarioTree::build(2, 3, 3);
  int next = 0;
  int layer = 1;
  for (int k = 0; k <= 3; ++k) {
    const auto [first, last] = tree.stage_range(k);
    CHECK(first == next);
    CHECK(last - first == layer);
    for (int id = first; id < last; ++id) CHECK(tree.node(id).stage == k);
    next = last;
    layer *= 3;
  }
  CHECK(next == tree.node_count());
}

TEST_CASE("parent, child and mode bookkeeping is consistent") {
  const ScenarioTree tree = ScenarioTree::build(3, 3, 4);
  const TreeNode& root = tree.node(0);
  CHECK(root.parent == -1);
  CHECK(root.mode == 3);
  CHECK(root.stage == 0);
  for (int id = 0; id < tree.node_count(); ++id) {
    const TreeNode& node = tree.node(id);
    CHECK(node.id == id);
    if (node.stage < tree.horizon()) {
      REQUIRE(node.children.size() == 4);
      for (int k = 0; k < 4; ++k) {
        const TreeNode& child = tree.node(node.children[k]);
        CHECK(child.parent == id);
        CHECK(child.mode == k + 1);  // child order encodes the arrival mode
        CHECK(child.stage == node.stage + 1);
      }
    } else {
      CHECK(tree.is_leaf(id));
    }
  }
}

TEST_CASE("node_history walks the root path") {
  const ScenarioTree tree = ScenarioTree::build(2, 3, 3);
  CHECK(tree.node_history(0) == std::vector<int>{2});
  // Deepest-id leaf takes the highest mode at every branching.
  const int last = tree.node_count() - 1;
  CHECK(tree.node_history(last) == std::vector<int>{2, 3, 3, 3});
  // Every history starts at the root mode and matches node modes.
  for (int id = 0; id < tree.node_count(); ++id) {
    const auto history = tree.node_history(id);
    REQUIRE(static_cast<int>(history.size()) == tree.node(id).stage + 1);
    CHECK(history.front() == 2);
    CHECK(history.back() == tree.node(id).mode);
  }
}

TEST_CASE("horizon one is root plus one full layer") {
  const ScenarioTree tree = ScenarioTree::build(1, 1, 5);
  CHECK(tree.node_count() == 6);
  CHECK_FALSE(tree.is_leaf(0));
  for (int id = 1; id < 6; ++id) CHECK(tree.is_leaf(id));
  const auto [first, last] = tree.stage_range(1);
  CHECK(first == 1);
  CHECK(last == 6);
}

TEST_CASE("node cap rejects oversized trees") {
  CHECK_THROWS_AS(ScenarioTree::build(1, 10, 4, std::size_t{1000}), Error);
  CHECK_NOTHROW(ScenarioTree::build(1, 4, 4, std::size_t{1000}));
}

TEST_CASE("invalid build arguments are rejected") {
  CHECK_THROWS_AS(ScenarioTree::build(0, 2, 3), Error);  // modes are 1-based
  CHECK_THROWS_AS(ScenarioTree::build(4, 2, 3), Error);  // mode out of range
  CHECK_THROWS_AS(ScenarioTree::build(1, 0, 3), Error);  // horizon too short
  CHECK_THROWS_AS(ScenarioTree::build(1, 2, 0), Error);  // no modes
}
