#include "cbartgp/tree.hpp"

#include <algorithm>
#include <cmath>

namespace cbartgp {

Tree::Tree() {
  nodes_.push_back(TreeNode{});
  leaf_means_.push_back(0.0);
  refresh_leaf_index();
}

int Tree::depth(int id) const {
  int d = 0;
  while (nodes_[id].parent >= 0) {
    id = nodes_[id].parent;
    ++d;
  }
  return d;
}

void Tree::refresh_leaf_index() {
  leaf_order_.clear();
  leaf_pos_.assign(nodes_.size(), -1);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& nd = nodes_[id];
    if (nd.is_leaf()) {
      leaf_pos_[id] = static_cast<int>(leaf_order_.size());
      leaf_order_.push_back(id);
    } else {
      stack.push_back(nd.right);
      stack.push_back(nd.left);
    }
  }
}

std::vector<int> Tree::nog_nodes() const {
  std::vector<int> out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& nd = nodes_[id];
    if (nd.is_leaf()) continue;
    if (nodes_[nd.left].is_leaf() && nodes_[nd.right].is_leaf()) {
      out.push_back(id);
    } else {
      stack.push_back(nd.right);
      stack.push_back(nd.left);
    }
  }
  return out;
}

int Tree::route(const Eigen::MatrixXd& x, int row) const {
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    id = x(row, nodes_[id].var) < nodes_[id].cut ? nodes_[id].left : nodes_[id].right;
  }
  return id;
}

int Tree::alloc_node() {
  if (!free_slots_.empty()) {
    const int id = free_slots_.back();
    free_slots_.pop_back();
    nodes_[id] = TreeNode{};
    return id;
  }
  nodes_.push_back(TreeNode{});
  return static_cast<int>(nodes_.size()) - 1;
}

std::pair<int, int> Tree::birth(int leaf_id, SplitRule rule) {
  if (!nodes_[leaf_id].is_leaf()) throw ConfigError("birth target is not a leaf");
  const int pos = leaf_pos_[leaf_id];
  const double parent_mean = leaf_means_[pos];
  const int l = alloc_node();
  const int r = alloc_node();
  nodes_[l].parent = leaf_id;
  nodes_[r].parent = leaf_id;
  nodes_[leaf_id].var = rule.var;
  nodes_[leaf_id].cut = rule.cut;
  nodes_[leaf_id].left = l;
  nodes_[leaf_id].right = r;
  leaf_means_.insert(leaf_means_.begin() + pos, parent_mean);  // children share it
  refresh_leaf_index();
  return {l, r};
}

void Tree::death(int nog_id) {
  const TreeNode& nd = nodes_[nog_id];
  if (nd.is_leaf() || !nodes_[nd.left].is_leaf() || !nodes_[nd.right].is_leaf())
    throw ConfigError("death target is not a no-grandchildren node");
  const int pos = leaf_pos_[nd.left];
  free_slots_.push_back(nd.left);
  free_slots_.push_back(nd.right);
  nodes_[nog_id].var = -1;
  nodes_[nog_id].left = -1;
  nodes_[nog_id].right = -1;
  leaf_means_.erase(leaf_means_.begin() + pos + 1);  // keep the left child's mean
  refresh_leaf_index();
}

bool Tree::operator==(const Tree& other) const {
  if (n_leaves() != other.n_leaves()) return false;
  if (leaf_means_ != other.leaf_means_) return false;
  // parallel DFS over live structure
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    const TreeNode& na = nodes_[a];
    const TreeNode& nb = other.nodes_[b];
    if (na.is_leaf() != nb.is_leaf()) return false;
    if (na.is_leaf()) continue;
    if (na.var != nb.var || na.cut != nb.cut) return false;
    stack.emplace_back(na.right, nb.right);
    stack.emplace_back(na.left, nb.left);
  }
  return true;
}

std::vector<TreeNode> Tree::compact_nodes() const {
  std::vector<TreeNode> out;
  // preorder copy; children are appended and indices fixed afterwards
  std::vector<std::pair<int, int>> stack{{0, -1}};  // (old id, new parent)
  while (!stack.empty()) {
    auto [id, parent] = stack.back();
    stack.pop_back();
    TreeNode nd = nodes_[id];
    nd.parent = parent;
    const int me = static_cast<int>(out.size());
    if (parent >= 0) {
      (out[parent].left < 0 ? out[parent].left : out[parent].right) = me;
    }
    const int old_left = nd.left, old_right = nd.right;
    nd.left = nd.right = -1;
    out.push_back(nd);
    if (!nodes_[id].is_leaf()) {
      stack.emplace_back(old_right, me);
      stack.emplace_back(old_left, me);
    }
  }
  return out;
}

Tree Tree::from_nodes(std::vector<TreeNode> nodes, std::vector<double> leaf_means) {
  if (nodes.empty()) throw ConfigError("Tree::from_nodes: empty node list");
  Tree t;
  t.nodes_ = std::move(nodes);
  t.free_slots_.clear();
  t.refresh_leaf_index();
  if (t.leaf_order_.size() != leaf_means.size())
    throw ConfigError("Tree::from_nodes: leaf mean count does not match the structure");
  t.leaf_means_ = std::move(leaf_means);
  return t;
}

DummyDesign build_dummy(const Tree& tree, const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  DummyDesign d;
  d.n = n;
  d.b = tree.n_leaves();
  d.assignment.resize(n);
  d.omega.assign(d.b, {});
  for (int i = 0; i < n; ++i) {
    const int pos = tree.leaf_position(tree.route(x, i));
    d.assignment[i] = pos;
    d.omega[pos].push_back(i);
  }
  return d;
}

Reordering reorder(const DummyDesign& design) {
  Reordering r;
  r.perm.reserve(design.n);
  r.block_design.n = design.n;
  r.block_design.b = design.b;
  r.block_design.assignment.reserve(design.n);
  r.block_design.omega.assign(design.b, {});
  int k = 0;
  for (int j = 0; j < design.b; ++j) {
    for (int i : design.omega[j]) {
      r.perm.push_back(i);
      r.block_design.assignment.push_back(j);
      r.block_design.omega[j].push_back(k);
      ++k;
    }
  }
  return r;
}

CutpointGrid CutpointGrid::from_data(const Eigen::MatrixXd& x, int max_cuts) {
  if (max_cuts < 1) throw ConfigError("CutpointGrid: max_cuts must be >= 1");
  CutpointGrid g;
  const int p = static_cast<int>(x.cols());
  g.cuts.resize(p);
  std::vector<double> vals, mids;
  for (int v = 0; v < p; ++v) {
    vals.assign(x.col(v).data(), x.col(v).data() + x.rows());
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    mids.clear();
    for (std::size_t t = 0; t + 1 < vals.size(); ++t) {
      mids.push_back(0.5 * (vals[t] + vals[t + 1]));
    }
    if (static_cast<int>(mids.size()) <= max_cuts) {
      g.cuts[v] = mids;
    } else {
      g.cuts[v].reserve(max_cuts);
      const double step = static_cast<double>(mids.size()) / max_cuts;
      for (int j = 0; j < max_cuts; ++j) {
        g.cuts[v].push_back(mids[static_cast<std::size_t>((j + 0.5) * step)]);
      }
    }
  }
  return g;
}

namespace {

// log of the split probability alpha (1 + depth)^-beta
double log_pg(double alpha, double beta, int depth) {
  return std::log(alpha) - beta * std::log1p(static_cast<double>(depth));
}

double pg(double alpha, double beta, int depth) {
  return alpha * std::pow(1.0 + depth, -beta);
}

// Both ratios are written from the birth side and negated for a death, so a
// birth and its reverse death return exact negations of each other.
double birth_log_kernel(double p_death_after, int nog_after, double p_birth_before,
                        int b_before, int p, int ncuts) {
  return std::log(p_death_after) - std::log(static_cast<double>(nog_after)) -
         std::log(p_birth_before) + std::log(static_cast<double>(b_before)) +
         std::log(static_cast<double>(p)) + std::log(static_cast<double>(ncuts));
}

double birth_log_prior(double alpha, double beta, int depth, int p, int ncuts) {
  return log_pg(alpha, beta, depth) + 2.0 * std::log1p(-pg(alpha, beta, depth + 1)) -
         std::log1p(-pg(alpha, beta, depth)) - std::log(static_cast<double>(p)) -
         std::log(static_cast<double>(ncuts));
}

}  // namespace

Proposal propose(const Tree& tree, const DummyDesign& design, const Eigen::MatrixXd& x,
                 const CutpointGrid& grid, const ProposeConfig& cfg, Rng& rng) {
  Proposal prop;
  const int b = design.b;
  const int p = grid.n_vars();
  const double u_move = rng.uniform();
  const bool do_birth = (b == 1) || (u_move < cfg.birth_prob);

  if (do_birth) {
    prop.kind = MoveKind::Birth;
    for (int attempt = 0; attempt < cfg.retry_cap; ++attempt) {
      const int j = rng.uniform_int(b);
      const int var = rng.uniform_int(p);
      const int ncuts = static_cast<int>(grid.cuts[var].size());
      if (ncuts == 0) {
        ++prop.retries;
        continue;
      }
      const double cut = grid.cuts[var][rng.uniform_int(ncuts)];
      std::vector<int> left, right;
      for (int i : design.omega[j]) {
        (x(i, var) < cut ? left : right).push_back(i);
      }
      const std::size_t floor = static_cast<std::size_t>(std::max(1, cfg.min_leaf));
      if (left.size() < floor || right.size() < floor) {
        ++prop.retries;
        continue;
      }
      prop.valid = true;
      prop.leaf_pos = j;
      prop.node = tree.leaf_order()[j];
      prop.rule = SplitRule{var, cut};
      prop.omega_left = std::move(left);
      prop.omega_right = std::move(right);

      const int d = tree.depth(prop.node);
      const int parent = tree.node(prop.node).parent;
      bool parent_was_nog = false;
      if (parent >= 0) {
        const TreeNode& pn = tree.node(parent);
        parent_was_nog =
            tree.node(pn.left).is_leaf() && tree.node(pn.right).is_leaf();
      }
      const int nog_cur = static_cast<int>(tree.nog_nodes().size());
      const int nog_new = nog_cur + 1 - (parent_was_nog ? 1 : 0);
      const double p_birth_cur = (b == 1) ? 1.0 : cfg.birth_prob;
      const double p_death_new = 1.0 - cfg.birth_prob;

      prop.log_kernel_ratio = birth_log_kernel(p_death_new, nog_new, p_birth_cur, b, p, ncuts);
      // depth prior times the uniform rule probability of the new split
      prop.log_prior_ratio = birth_log_prior(cfg.alpha, cfg.beta, d, p, ncuts);
      return prop;
    }
    prop.valid = false;
    return prop;
  }

  prop.kind = MoveKind::Death;
  const std::vector<int> nogs = tree.nog_nodes();
  const int nog_cur = static_cast<int>(nogs.size());
  const int g = nogs[rng.uniform_int(nog_cur)];
  const TreeNode& gn = tree.node(g);
  prop.valid = true;
  prop.node = g;
  prop.leaf_pos = tree.leaf_position(gn.left);
  prop.rule = SplitRule{gn.var, gn.cut};
  prop.omega_left = design.omega[prop.leaf_pos];
  prop.omega_right = design.omega[prop.leaf_pos + 1];

  const int d = tree.depth(g);
  const int ncuts = static_cast<int>(grid.cuts[gn.var].size());
  const int b_new = b - 1;
  const double p_birth_new = (b_new == 1) ? 1.0 : cfg.birth_prob;
  const double p_death_cur = 1.0 - cfg.birth_prob;

  prop.log_kernel_ratio = -birth_log_kernel(p_death_cur, nog_cur, p_birth_new, b_new, p, ncuts);
  prop.log_prior_ratio = -birth_log_prior(cfg.alpha, cfg.beta, d, p, ncuts);
  return prop;
}

void apply_proposal(Tree& tree, DummyDesign& design, const Proposal& prop) {
  if (!prop.valid) throw ConfigError("apply_proposal: proposal is invalid");
  const int j = prop.leaf_pos;
  if (prop.kind == MoveKind::Birth) {
    tree.birth(prop.node, prop.rule);
    for (int& a : design.assignment) {
      if (a > j) ++a;
    }
    for (int i : prop.omega_left) design.assignment[i] = j;
    for (int i : prop.omega_right) design.assignment[i] = j + 1;
    design.omega[j] = prop.omega_left;
    design.omega.insert(design.omega.begin() + j + 1, prop.omega_right);
    ++design.b;
  } else {
    tree.death(prop.node);
    std::vector<int> merged;
    merged.resize(design.omega[j].size() + design.omega[j + 1].size());
    std::merge(design.omega[j].begin(), design.omega[j].end(), design.omega[j + 1].begin(),
               design.omega[j + 1].end(), merged.begin());
    design.omega[j] = std::move(merged);
    design.omega.erase(design.omega.begin() + j + 1);
    for (int& a : design.assignment) {
      if (a == j + 1) {
        a = j;
      } else if (a > j + 1) {
        --a;
      }
    }
    --design.b;
  }
}

}  // namespace cbartgp
