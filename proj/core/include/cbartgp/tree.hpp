#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "cbartgp/errors.hpp"
#include "cbartgp/rng.hpp"

namespace cbartgp {

struct SplitRule {
  int var = -1;
  double cut = 0.0;
};

struct TreeNode {
  int var = -1;  // split variable; negative marks a leaf
  double cut = 0.0;
  int left = -1;
  int right = -1;
  int parent = -1;
  bool is_leaf() const { return var < 0; }
};

// Binary regression tree: interior nodes carry (var, cut) rules with the
// convention x[var] < cut goes left; leaves carry means indexed by their
// position in left-to-right depth-first order.
class Tree {
public:
  Tree();  // single root leaf with mean 0

  const TreeNode& node(int id) const { return nodes_[id]; }
  int root() const { return 0; }
  int n_leaves() const { return static_cast<int>(leaf_order_.size()); }
  int depth(int id) const;

  // Node ids of leaves in left-to-right DFS order.
  const std::vector<int>& leaf_order() const { return leaf_order_; }
  int leaf_position(int node_id) const { return leaf_pos_[node_id]; }

  // Interior nodes whose children are both leaves, in DFS order.
  std::vector<int> nog_nodes() const;

  std::vector<double>& leaf_means() { return leaf_means_; }
  const std::vector<double>& leaf_means() const { return leaf_means_; }

  // Leaf node id reached by row `row` of X.
  int route(const Eigen::MatrixXd& x, int row) const;
  double eval(const Eigen::MatrixXd& x, int row) const {
    return leaf_means_[leaf_pos_[route(x, row)]];
  }

  // Split a leaf; children start at the parent's mean. Returns (left, right) ids.
  std::pair<int, int> birth(int leaf_id, SplitRule rule);
  // Collapse a no-grandchildren node; it keeps its left child's mean.
  void death(int nog_id);

  bool operator==(const Tree& other) const;

  // Serialization support: nodes in preorder with remapped indices.
  std::vector<TreeNode> compact_nodes() const;
  static Tree from_nodes(std::vector<TreeNode> nodes, std::vector<double> leaf_means);

private:
  std::vector<TreeNode> nodes_;
  std::vector<int> free_slots_;
  std::vector<int> leaf_order_;
  std::vector<int> leaf_pos_;  // node id -> leaf position, -1 for interior
  std::vector<double> leaf_means_;

  int alloc_node();
  void refresh_leaf_index();
};

// Leaf-assignment structure of a tree over a dataset: assignment[i] is the
// leaf position observation i maps to, omega[j] the ascending index set of
// leaf j. Equivalent to the 0/1 matrix D with one 1 per row.
struct DummyDesign {
  std::vector<int> assignment;
  std::vector<std::vector<int>> omega;
  int b = 0;
  int n = 0;
};

DummyDesign build_dummy(const Tree& tree, const Eigen::MatrixXd& x);

// Permutation putting observations in leaf-contiguous order (stable within a
// leaf): perm[k] is the original row at block position k, so D = P D_P with
// P(i, k) = 1 iff perm[k] == i.
struct Reordering {
  std::vector<int> perm;
  DummyDesign block_design;
};

Reordering reorder(const DummyDesign& design);

// Per-variable cutpoint grids: midpoints between adjacent sorted unique
// values, thinned to at most max_cuts quantile-spaced points. The cap keeps
// single observations from being split off once n outgrows the grid.
struct CutpointGrid {
  std::vector<std::vector<double>> cuts;
  static CutpointGrid from_data(const Eigen::MatrixXd& x, int max_cuts = 100);
  int n_vars() const { return static_cast<int>(cuts.size()); }
};

enum class MoveKind { Birth, Death };

struct Proposal {
  MoveKind kind = MoveKind::Birth;
  bool valid = false;
  int node = -1;      // leaf id (birth) or nog id (death)
  int leaf_pos = -1;  // birth: split leaf position; death: left child position
  SplitRule rule;     // birth: new rule; death: the rule being removed
  std::vector<int> omega_left;
  std::vector<int> omega_right;
  double log_kernel_ratio = 0.0;  // log q(T*, T) / q(T, T*)
  double log_prior_ratio = 0.0;   // log p(T*) / p(T)
  int retries = 0;
};

struct ProposeConfig {
  double alpha = 0.95;
  double beta = 2.0;
  double birth_prob = 0.5;  // birth is forced at b = 1, death is never forced
  int retry_cap = 20;
  int min_leaf = 5;  // smallest child a birth may create
};

// Draw a birth/death proposal. Birth picks a uniform leaf, uniform variable
// and uniform cutpoint; draws whose children would fall under min_leaf are
// regenerated up to the retry cap and an exhausted cap returns an invalid
// proposal (counts as rejected).
Proposal propose(const Tree& tree, const DummyDesign& design, const Eigen::MatrixXd& x,
                 const CutpointGrid& grid, const ProposeConfig& cfg, Rng& rng);

// Mutate tree and design according to an accepted proposal.
void apply_proposal(Tree& tree, DummyDesign& design, const Proposal& prop);

}  // namespace cbartgp
