#ifndef CITYEXPO_FOREST_H_
#define CITYEXPO_FOREST_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace cityexpo {

// Dense row-major feature table.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  void push_row(std::span<const double> values);
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct ForestConfig {
  std::size_t trees = 100;
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 5;
  // Features tried per split; default floor(sqrt(#features)), at least 1.
  std::optional<std::size_t> features_per_split;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

// Bagged variance-reduction regression trees. Rows are put into a canonical
// order before bootstrapping, so the fit does not depend on row order.
class RegressionForest {
 public:
  RegressionForest() = default;
  RegressionForest(std::vector<RegressionTree> trees, std::size_t num_features)
      : trees_(std::move(trees)), num_features_(num_features) {}

  double predict(std::span<const double> x) const;
  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::size_t num_features() const { return num_features_; }

 private:
  std::vector<RegressionTree> trees_;
  std::size_t num_features_ = 0;
};

// Throws EmptyInput / ValidationError.
RegressionForest train_forest(const FeatureMatrix& x, std::span<const double> y,
                              const ForestConfig& config);

nlohmann::json to_json(const RegressionForest& forest);
// Throws BundleError.
RegressionForest forest_from_json(const nlohmann::json& j);

// Ordinary least squares with intercept.
struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;
  double predict(std::span<const double> x) const;
};
LinearModel fit_linear(const FeatureMatrix& x, std::span<const double> y);

struct RegressionMetrics {
  double mae = 0.0;
  double rmse = 0.0;
};

struct CrossValidationReport {
  std::size_t folds = 0;
  RegressionMetrics forest;
  RegressionMetrics mean_baseline;  // predicts the training-fold mean
  RegressionMetrics linear;
};

// k-fold CV over a seeded assignment of canonically ordered rows; forest
// predictions are clipped to [clip_lo, clip_hi]. When `groups` is given
// (one id per row), rows sharing an id always land in the same fold.
CrossValidationReport cross_validate(const FeatureMatrix& x, std::span<const double> y,
                                     const ForestConfig& config, std::size_t folds = 10,
                                     std::span<const std::size_t> groups = {},
                                     double clip_lo = 0.0, double clip_hi = 1.0);

}  // namespace cityexpo

#endif  // CITYEXPO_FOREST_H_
