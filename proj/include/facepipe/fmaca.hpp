#ifndef FACEPIPE_FMACA_HPP
#define FACEPIPE_FMACA_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "facepipe/clustering.hpp"
#include "facepipe/errors.hpp"
#include "facepipe/features.hpp"
#include "facepipe/rng.hpp"

namespace facepipe {

/// Result of splitting a node's examples into attractor basins: a basin
/// index per example plus one descriptor (centroid) per non-empty basin,
/// indexed contiguously from 0.
struct BasinPartition {
  std::vector<int> assignment;
  std::vector<std::vector<double>> centers;
};

/// Pluggable basin former. `k` is an upper bound on the basin count; the
/// partition may return fewer basins but assignment indices must stay
/// contiguous and match `centers`.
using BasinPartitioner =
    std::function<BasinPartition(const std::vector<std::vector<double>>&, int k, std::uint64_t seed)>;

/// Default basin former: the distinct-k-means scan over [2, k].
inline BasinPartition kmeans_basin_partitioner(const std::vector<std::vector<double>>& points,
                                               int k, std::uint64_t seed) {
  WeightedPoints data;
  data.points = points;
  data.weights.assign(points.size(), 1.0);
  const DistinctKmeansResult res = distinct_kmeans(data, 2, std::max(2, k), 4, seed);
  return {res.best.assignment, res.best.centers};
}

/// Tree node. Leaves carry a label with the purity of the training subset
/// that settled there; internal nodes route by nearest basin descriptor.
struct FmacaNode {
  std::string label;                          // leaves only
  std::size_t training_count = 0;             // leaves only
  double purity = 1.0;                        // leaves only
  std::vector<std::vector<double>> centers;   // internal only, one per child
  std::vector<FmacaNode> children;            // empty for leaves

  bool is_leaf() const { return children.empty(); }
};

struct FmacaTree {
  FmacaNode root;
  int basins = 0;            // configured top-level basin bound K
  int max_depth = 32;
  std::size_t dimension = 0;
  std::uint64_t seed = 0;
};

namespace detail {

struct TreeBuilder {
  const std::vector<FeatureVector>& train;
  const BasinPartitioner& partition;
  int top_k;
  int max_depth;

  // Majority label over a subset; ties go to the lexicographically
  // earliest label because std::map iterates in sorted order.
  static std::pair<std::string, double> majority(const std::map<std::string, std::size_t>& counts,
                                                 std::size_t total) {
    std::string label;
    std::size_t best = 0;
    for (const auto& [l, c] : counts) {
      if (c > best) {
        best = c;
        label = l;
      }
    }
    return {label, static_cast<double>(best) / static_cast<double>(total)};
  }

  FmacaNode build(const std::vector<std::size_t>& subset, int depth, std::uint64_t seed) const {
    std::map<std::string, std::size_t> counts;
    for (std::size_t idx : subset) ++counts[train[idx].label];

    FmacaNode node;
    node.training_count = subset.size();
    if (counts.size() == 1) {
      node.label = counts.begin()->first;
      node.purity = 1.0;
      return node;
    }

    bool identical = true;
    for (std::size_t i = 1; i < subset.size() && identical; ++i)
      identical = (train[subset[i]].values == train[subset[0]].values);
    if (identical || depth >= max_depth) {
      // cannot (or may not) split further: impure majority leaf
      const auto [label, purity] = majority(counts, subset.size());
      node.label = label;
      node.purity = purity;
      return node;
    }

    const int k = depth == 0 ? top_k : std::max(static_cast<int>(counts.size()), 2);
    std::vector<std::vector<double>> points;
    points.reserve(subset.size());
    for (std::size_t idx : subset) points.push_back(train[idx].values);
    const BasinPartition part = partition(points, k, seed);
    if (part.assignment.size() != subset.size() || part.centers.empty())
      throw DataError("build_tree: partitioner returned malformed partition");

    std::vector<std::vector<std::size_t>> groups(part.centers.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      const int basin = part.assignment[i];
      if (basin < 0 || static_cast<std::size_t>(basin) >= groups.size())
        throw DataError("build_tree: basin index out of range");
      groups[static_cast<std::size_t>(basin)].push_back(subset[i]);
    }

    std::size_t non_empty = 0;
    for (const auto& g : groups) non_empty += g.empty() ? 0 : 1;
    if (non_empty < 2) {
      // partition failed to separate anything; stop with a majority leaf
      const auto [label, purity] = majority(counts, subset.size());
      node.label = label;
      node.purity = purity;
      return node;
    }

    for (std::size_t b = 0; b < groups.size(); ++b) {
      if (groups[b].empty()) continue;
      node.centers.push_back(part.centers[b]);
      node.children.push_back(build(groups[b], depth + 1,
                                    mix_seed(seed, static_cast<std::uint64_t>(b) + 1)));
    }
    return node;
  }
};

}  // namespace detail

/// Grow the classifier tree: split the training set into basins, recurse
/// on mixed-class basins with the basin bound reset to the number of
/// classes present, and stop at pure subsets, the depth cap, or subsets
/// the partitioner cannot separate. Deterministic for a fixed seed.
inline FmacaTree build_tree(const std::vector<FeatureVector>& train, int basins,
                            std::uint64_t seed, int max_depth = 32,
                            const BasinPartitioner& partitioner = kmeans_basin_partitioner) {
  if (train.empty()) throw DataError("build_tree: empty training set");
  if (basins < 2) throw DataError("build_tree: need at least 2 basins");
  if (max_depth < 1) throw DataError("build_tree: max_depth must be positive");
  const std::size_t dim = train.front().values.size();
  if (dim == 0) throw DataError("build_tree: zero-dimensional features");
  for (const FeatureVector& fv : train) {
    if (fv.values.size() != dim) throw DataError("build_tree: inconsistent feature dimensions");
    if (fv.label.empty()) throw DataError("build_tree: unlabeled training vector");
  }

  FmacaTree tree;
  tree.basins = basins;
  tree.max_depth = max_depth;
  tree.dimension = dim;
  tree.seed = seed;
  std::vector<std::size_t> all(train.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  detail::TreeBuilder builder{train, partitioner, basins, max_depth};
  tree.root = builder.build(all, 0, seed);
  return tree;
}

struct TreePrediction {
  std::string label;
  double leaf_purity = 1.0;
  std::size_t leaf_training_count = 0;
};

/// Route down the tree by nearest basin descriptor (ties to the lowest
/// child index) and report the leaf reached.
inline TreePrediction predict(const FmacaTree& tree, const std::vector<double>& x) {
  if (x.size() != tree.dimension) throw DataError("predict: dimension mismatch");
  const FmacaNode* node = &tree.root;
  while (!node->is_leaf()) {
    std::size_t best = 0;
    double best_d = detail::sq_dist(x, node->centers[0]);
    for (std::size_t i = 1; i < node->centers.size(); ++i) {
      const double d = detail::sq_dist(x, node->centers[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    node = &node->children[best];
  }
  return {node->label, node->purity, node->training_count};
}

inline TreePrediction predict(const FmacaTree& tree, const FeatureVector& fv) {
  return predict(tree, fv.values);
}

struct TreeStats {
  int depth = 0;                        // levels below the root
  std::size_t node_count = 0;
  std::size_t leaf_count = 0;
  std::size_t impure_leaves = 0;
  std::vector<double> leaf_purities;    // preorder
  std::vector<std::size_t> level_nodes; // nodes per depth level
};

inline TreeStats tree_stats(const FmacaTree& tree) {
  TreeStats stats;
  const std::function<void(const FmacaNode&, int)> walk = [&](const FmacaNode& node, int depth) {
    ++stats.node_count;
    if (static_cast<std::size_t>(depth) >= stats.level_nodes.size())
      stats.level_nodes.resize(static_cast<std::size_t>(depth) + 1, 0);
    ++stats.level_nodes[static_cast<std::size_t>(depth)];
    stats.depth = std::max(stats.depth, depth);
    if (node.is_leaf()) {
      ++stats.leaf_count;
      stats.leaf_purities.push_back(node.purity);
      if (node.purity < 1.0) ++stats.impure_leaves;
      return;
    }
    for (const FmacaNode& child : node.children) walk(child, depth + 1);
  };
  walk(tree.root, 0);
  return stats;
}

}  // namespace facepipe

#endif  // FACEPIPE_FMACA_HPP
