#include "rmood/iforest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "rmood/error.hpp"
#include "rmood/rng.hpp"

namespace rmood {

FeatureMatrix::FeatureMatrix(std::size_t dim, std::vector<double> values)
    : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw ShapeError("feature dimensionality must be positive");
  if (values_.size() % dim_ != 0) {
    throw ShapeError("feature values are not a whole number of rows");
  }
}

void FeatureMatrix::push_back(std::span<const double> row) {
  if (row.size() != dim_) {
    throw ShapeError("feature row has " + std::to_string(row.size()) +
                     " entries, expected " + std::to_string(dim_));
  }
  values_.insert(values_.end(), row.begin(), row.end());
}

void ForestConfig::validate() const {
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (subsample < 2) throw ConfigError("subsample must be >= 2");
  if (max_depth && *max_depth < 1) throw ConfigError("max_depth must be >= 1");
}

std::size_t IsolationTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t best = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    const auto& node = nodes[static_cast<std::size_t>(idx)];
    best = std::max(best, d);
    if (!node.is_leaf()) {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return best;
}

namespace {

double c_factor_direct(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  const double harmonic = std::log(m) + std::numbers::egamma;
  return 2.0 * harmonic - 2.0 * m / static_cast<double>(n);
}

// Leaf sizes are bounded by psi, so scoring almost always hits the table.
constexpr std::size_t kCTableSize = 4096;

const std::array<double, kCTableSize> kCTable = [] {
  std::array<double, kCTableSize> t{};
  for (std::size_t n = 0; n < kCTableSize; ++n) t[n] = c_factor_direct(n);
  return t;
}();

inline double c_lookup(std::size_t n) {
  return n < kCTableSize ? kCTable[n] : c_factor_direct(n);
}

}  // namespace

double c_factor(std::size_t n) { return c_lookup(n); }

std::size_t default_max_depth(std::size_t psi) {
  std::size_t depth = 0;
  while ((std::size_t{1} << depth) < psi) ++depth;
  return std::max<std::size_t>(depth, 1);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& data, std::size_t max_depth, Rng& rng)
      : data_(data), max_depth_(max_depth), rng_(rng) {}

  IsolationTree build(std::vector<std::size_t> points) {
    IsolationTree tree;
    nodes_ = &tree.nodes;
    grow(points, 0);
    return tree;
  }

 private:
  std::int32_t grow(std::span<std::size_t> points, std::size_t depth) {
    const auto index = static_cast<std::int32_t>(nodes_->size());
    nodes_->push_back(TreeNode{.size = points.size()});
    if (points.size() <= 1 || depth >= max_depth_) return index;

    const std::size_t dim = data_.dim();
    lo_.assign(dim, 0.0);
    hi_.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) lo_[j] = hi_[j] = data_(points[0], j);
    for (std::size_t p : points) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double v = data_(p, j);
        lo_[j] = std::min(lo_[j], v);
        hi_[j] = std::max(hi_[j], v);
      }
    }
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < dim; ++j) {
      if (hi_[j] > lo_[j]) candidates.push_back(j);
    }
    if (candidates.empty()) return index;

    const std::size_t feature = candidates[rng_.index(candidates.size())];
    const double lo = lo_[feature];
    const double hi = hi_[feature];
    double split = lo + rng_.uniform_open() * (hi - lo);
    // Rounding can land on an endpoint; pull it back inside. When lo and hi
    // are adjacent doubles, split = hi still separates them under x < split.
    if (split <= lo) split = std::nextafter(lo, hi);
    if (split > hi) split = hi;
    if (split == hi && std::nextafter(lo, hi) < hi) split = std::nextafter(hi, lo);

    auto mid = std::stable_partition(points.begin(), points.end(), [&](std::size_t p) {
      return data_(p, feature) < split;
    });
    const auto n_left = static_cast<std::size_t>(mid - points.begin());

    const std::int32_t left = grow(points.first(n_left), depth + 1);
    const std::int32_t right = grow(points.subspan(n_left), depth + 1);
    auto& node = (*nodes_)[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(feature);
    node.split = split;
    node.left = left;
    node.right = right;
    return index;
  }

  const FeatureMatrix& data_;
  std::size_t max_depth_;
  Rng& rng_;
  std::vector<TreeNode>* nodes_ = nullptr;
  std::vector<double> lo_, hi_;
};

}  // namespace

IsolationForest fit_forest(const FeatureMatrix& data, const ForestConfig& config) {
  config.validate();
  const std::size_t n = data.rows();
  if (n < 2) {
    throw InsufficientDataError("isolation forest needs at least 2 training vectors, got " +
                                std::to_string(n));
  }
  for (double v : data.values()) {
    if (!std::isfinite(v)) throw DataError("non-finite value in forest training data");
  }

  IsolationForest forest;
  forest.config = config;
  forest.dim = data.dim();
  forest.psi = std::min(config.subsample, n);
  forest.max_depth = config.max_depth.value_or(default_max_depth(forest.psi));
  forest.trees.reserve(config.n_trees);

  std::vector<std::size_t> all(n);
  for (std::size_t tree_index = 0; tree_index < config.n_trees; ++tree_index) {
    Rng rng(config.seed, tree_index);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    for (std::size_t i = 0; i < forest.psi; ++i) {
      const std::size_t j = i + rng.index(n - i);
      std::swap(all[i], all[j]);
    }
    std::vector<std::size_t> sample(all.begin(),
                                    all.begin() + static_cast<std::ptrdiff_t>(forest.psi));
    TreeBuilder builder(data, forest.max_depth, rng);
    forest.trees.push_back(builder.build(std::move(sample)));
  }
  return forest;
}

namespace {

// Unchecked walk; callers validate dimensionality once.
double walk(const IsolationTree& tree, std::span<const double> x) {
  std::size_t idx = 0;
  double edges = 0.0;
  for (;;) {
    const TreeNode& node = tree.nodes[idx];
    if (node.is_leaf()) return edges + c_lookup(node.size);
    idx = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] < node.split ? node.left : node.right);
    edges += 1.0;
  }
}

}  // namespace

double path_length(const IsolationTree& tree, std::span<const double> x) {
  if (tree.nodes.empty()) throw DataError("empty isolation tree");
  for (const auto& node : tree.nodes) {
    if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= x.size()) {
      throw DataError("feature vector of size " + std::to_string(x.size()) +
                      " does not match tree split feature " +
                      std::to_string(node.feature));
    }
  }
  return walk(tree, x);
}

double anomaly_score(const IsolationForest& forest, std::span<const double> x) {
  if (x.size() != forest.dim) {
    throw DataError("feature vector of size " + std::to_string(x.size()) +
                    " scored by a forest of dimensionality " + std::to_string(forest.dim));
  }
  if (forest.trees.empty()) throw DataError("forest has no trees");
  double total = 0.0;
  for (const auto& tree : forest.trees) total += walk(tree, x);
  const double mean = total / static_cast<double>(forest.trees.size());
  return std::exp2(-mean / c_factor(forest.psi));
}

std::vector<double> anomaly_scores(const IsolationForest& forest, const FeatureMatrix& rows) {
  if (rows.dim() != forest.dim) {
    throw DataError("feature rows of size " + std::to_string(rows.dim()) +
                    " scored by a forest of dimensionality " + std::to_string(forest.dim));
  }
  if (forest.trees.empty()) throw DataError("forest has no trees");
  std::vector<double> totals(rows.rows(), 0.0);
  for (const auto& tree : forest.trees) {
    for (std::size_t i = 0; i < totals.size(); ++i) totals[i] += walk(tree, rows.row(i));
  }
  const double c = c_factor(forest.psi);
  const auto n_trees = static_cast<double>(forest.trees.size());
  for (auto& t : totals) t = std::exp2(-(t / n_trees) / c);
  return totals;
}

}  // namespace rmood
