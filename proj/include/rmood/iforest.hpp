#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rmood {

/// Row-major matrix of feature vectors; one row per training point.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(std::size_t dim = 2) : dim_(dim) {}
  FeatureMatrix(std::size_t dim, std::vector<double> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[i * dim_ + j];
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }
  void push_back(std::span<const double> row);
  void reserve(std::size_t rows) { values_.reserve(rows * dim_); }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t dim_;
  std::vector<double> values_;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
  // Defaults to ceil(log2(psi)) where psi is the effective subsample size.
  std::optional<std::size_t> max_depth;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Flat node of an isolation tree. Leaves have feature == -1.
struct TreeNode {
  std::int32_t feature = -1;
  double split = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint64_t size = 0;  // training points reaching this node

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Nodes in pre-order (node, left subtree, right subtree); the root is
/// nodes[0]. Points with x[feature] < split go left.
struct IsolationTree {
  std::vector<TreeNode> nodes;

  std::size_t depth() const;
  friend bool operator==(const IsolationTree&, const IsolationTree&) = default;
};

struct IsolationForest {
  std::vector<IsolationTree> trees;
  std::size_t psi = 0;  // per-tree training subset size
  std::size_t dim = 0;
  std::size_t max_depth = 0;
  ForestConfig config;

  friend bool operator==(const IsolationForest& a, const IsolationForest& b) {
    return a.trees == b.trees && a.psi == b.psi && a.dim == b.dim &&
           a.max_depth == b.max_depth;
  }
};

/// Average path length of an unsuccessful binary-search-tree lookup over n
/// points: 2 H(n-1) - 2 (n-1) / n, c(2) = 1, c(n <= 1) = 0.
double c_factor(std::size_t n);

std::size_t default_max_depth(std::size_t psi);

/// Fits `config.n_trees` trees. Tree i draws from Rng(config.seed, i): first a
/// partial Fisher-Yates subsample of min(subsample, rows) points, then, per
/// node in pre-order, a feature index uniform over the features that are not
/// constant on the node's points followed by a threshold
/// min + uniform_open() * (max - min).
IsolationForest fit_forest(const FeatureMatrix& data, const ForestConfig& config);

double path_length(const IsolationTree& tree, std::span<const double> x);

/// 2^(-mean path length / c(psi)); in (0, 1), higher is more anomalous.
double anomaly_score(const IsolationForest& forest, std::span<const double> x);

/// anomaly_score for every row, bit-identical to scoring them one at a time.
/// Walks tree by tree so each tree stays in cache across the batch.
std::vector<double> anomaly_scores(const IsolationForest& forest, const FeatureMatrix& rows);

}  // namespace rmood
