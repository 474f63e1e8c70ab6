#include "cityexpo/forest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "cityexpo/errors.h"
#include "cityexpo/parallel.h"
#include "cityexpo/rng.h"

namespace cityexpo {
namespace {

std::vector<std::size_t> canonical_order(const FeatureMatrix& x, std::span<const double> y) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ra = x.row(a);
    auto rb = x.row(b);
    for (std::size_t c = 0; c < ra.size(); ++c) {
      if (ra[c] != rb[c]) return ra[c] < rb[c];
    }
    return y[a] < y[b];
  });
  return order;
}

// Presorted CART: each feature keeps the node's samples sorted by value in
// one contiguous segment, so a split scan is linear and children are made by
// stable partitioning.
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> y, const ForestConfig& config,
              std::size_t features_per_split, std::uint64_t seed)
      : x_(x), y_(y), config_(config), mtry_(features_per_split), rng_(seed) {
    features_.resize(x.cols());
    goes_left_.resize(x.rows());
  }

  RegressionTree build(std::vector<std::size_t> samples) {
    std::sort(samples.begin(), samples.end());
    sorted_.assign(x_.cols(), samples);
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      std::stable_sort(sorted_[f].begin(), sorted_[f].end(), [&](std::size_t a, std::size_t b) {
        return x_(a, f) < x_(b, f);
      });
    }
    buffer_.resize(samples.size());
    build_node(0, samples.size(), 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
    std::size_t left_count = 0;
  };

  std::int32_t build_node(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double t = y_[sorted_[0][i]];
      sum += t;
      sq += t * t;
    }
    const std::size_t count = end - begin;
    const double n = static_cast<double>(count);
    nodes_[id].value = sum / n;
    const double sse = sq - sum * sum / n;
    if (depth >= config_.max_depth || count < 2 * config_.min_samples_leaf ||
        sse <= 1e-12 * std::max(1.0, sq)) {
      return id;
    }

    const Split split = best_split(begin, end, sum, sum * sum / n);
    if (split.feature < 0) return id;

    const auto sf = static_cast<std::size_t>(split.feature);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t r = sorted_[sf][i];
      goes_left_[r] = x_(r, sf) <= split.threshold;
    }
    for (auto& order : sorted_) {
      std::size_t nl = 0;
      std::size_t nr = split.left_count;
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t r = order[i];
        buffer_[goes_left_[r] ? nl++ : nr++] = r;
      }
      std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(end - begin),
                order.begin() + static_cast<std::ptrdiff_t>(begin));
    }
    const std::size_t middle = begin + split.left_count;
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    const std::int32_t l = build_node(begin, middle, depth + 1);
    const std::int32_t r = build_node(middle, end, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Samples features without replacement; keeps drawing past mtry until one
  // admits a valid split.
  Split best_split(std::size_t begin, std::size_t end, double total, double parent_score) {
    std::iota(features_.begin(), features_.end(), 0);
    Split best;
    best.score = parent_score;
    const std::size_t p = features_.size();
    for (std::size_t i = 0; i < p; ++i) {
      std::swap(features_[i], features_[i + rng_.below(p - i)]);
      evaluate(begin, end, total, features_[i], best);
      if (i + 1 >= mtry_ && best.feature >= 0) break;
    }
    return best;
  }

  void evaluate(std::size_t begin, std::size_t end, double total, int feature, Split& best) {
    const auto f = static_cast<std::size_t>(feature);
    const auto& order = sorted_[f];
    const std::size_t n = end - begin;
    const std::size_t min_leaf = std::max<std::size_t>(1, config_.min_samples_leaf);
    double left_sum = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const std::size_t r = order[begin + j];
      left_sum += y_[r];
      const std::size_t nl = j + 1;
      const std::size_t nr = n - nl;
      const double v = x_(r, f);
      const double next = x_(order[begin + j + 1], f);
      if (v == next) continue;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double right_sum = total - left_sum;
      const double score = left_sum * left_sum / static_cast<double>(nl) +
                           right_sum * right_sum / static_cast<double>(nr);
      if (score > best.score + 1e-12 * std::abs(best.score)) {
        best.score = score;
        best.feature = feature;
        best.left_count = nl;
        double mid = 0.5 * (v + next);
        if (!(mid < next)) mid = v;
        best.threshold = mid;
      }
    }
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  const ForestConfig& config_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
  std::vector<int> features_;
  std::vector<std::vector<std::size_t>> sorted_;
  std::vector<std::size_t> buffer_;
  std::vector<char> goes_left_;
};

void accumulate(RegressionMetrics& m, double err) {
  m.mae += std::abs(err);
  m.rmse += err * err;
}

void finish(RegressionMetrics& m, std::size_t n) {
  m.mae /= static_cast<double>(n);
  m.rmse = std::sqrt(m.rmse / static_cast<double>(n));
}

}  // namespace

void FeatureMatrix::push_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw ValidationError("feature row has wrong width");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.cols_ = cols_;
  for (std::size_t r : rows) out.push_row(row(r));
  out.cols_ = cols_;
  return out;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::int32_t i = 0;
  while (nodes_[i].feature >= 0) {
    i = x[static_cast<std::size_t>(nodes_[i].feature)] <= nodes_[i].threshold ? nodes_[i].left
                                                                               : nodes_[i].right;
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double RegressionForest::predict(std::span<const double> x) const {
  if (trees_.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict(x);
  return s / static_cast<double>(trees_.size());
}

RegressionForest train_forest(const FeatureMatrix& x, std::span<const double> y,
                              const ForestConfig& config) {
  if (x.rows() == 0) throw EmptyInput("forest needs at least one row");
  if (y.size() != x.rows()) throw ValidationError("target count does not match rows");
  if (config.trees == 0) throw ConfigError("forest needs at least one tree");
  const std::size_t p = x.cols();
  const std::size_t mtry = std::clamp<std::size_t>(
      config.features_per_split.value_or(
          static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p))))),
      1, std::max<std::size_t>(p, 1));

  const auto order = canonical_order(x, y);
  std::vector<RegressionTree> trees(config.trees);
  parallel_for(
      config.trees,
      [&](std::size_t t) {
        const std::uint64_t seed = derive_seed(config.seed, t);
        Rng rng(derive_seed(seed, 0));
        std::vector<std::size_t> rows(order.size());
        for (auto& r : rows) r = order[rng.below(order.size())];
        TreeBuilder builder(x, y, config, mtry, derive_seed(seed, 1));
        trees[t] = builder.build(std::move(rows));
      },
      config.threads);
  return RegressionForest(std::move(trees), p);
}

nlohmann::json to_json(const RegressionForest& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : forest.trees()) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   value = nlohmann::json::array();
    for (const auto& n : t.nodes()) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"value", value}});
  }
  return {{"num_features", forest.num_features()}, {"trees", trees}};
}

RegressionForest forest_from_json(const nlohmann::json& j) {
  try {
    const auto p = j.at("num_features").get<std::size_t>();
    std::vector<RegressionTree> trees;
    for (const auto& jt : j.at("trees")) {
      const auto feature = jt.at("feature").get<std::vector<int>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<std::int32_t>>();
      const auto right = jt.at("right").get<std::vector<std::int32_t>>();
      const auto value = jt.at("value").get<std::vector<double>>();
      const std::size_t n = feature.size();
      if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
          value.size() != n) {
        throw BundleError("forest tree arrays have inconsistent lengths");
      }
      std::vector<TreeNode> nodes(n);
      for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
        if (feature[i] >= 0) {
          if (static_cast<std::size_t>(feature[i]) >= p || left[i] <= static_cast<int>(i) ||
              right[i] <= static_cast<int>(i) || static_cast<std::size_t>(left[i]) >= n ||
              static_cast<std::size_t>(right[i]) >= n) {
            throw BundleError("forest tree node " + std::to_string(i) + " is malformed");
          }
        }
      }
      trees.emplace_back(std::move(nodes));
    }
    return RegressionForest(std::move(trees), p);
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(std::string("malformed forest: ") + e.what());
  }
}

double LinearModel::predict(std::span<const double> x) const {
  double s = intercept;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x[i];
  return s;
}

LinearModel fit_linear(const FeatureMatrix& x, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto p = static_cast<Eigen::Index>(x.cols());
  Eigen::MatrixXd a(n, p + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      a(i, j) = x(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    a(i, p) = 1.0;
    b(i) = y[static_cast<std::size_t>(i)];
  }
  // Minimum-norm solution; one-hot blocks plus an intercept are collinear.
  Eigen::VectorXd coef = a.completeOrthogonalDecomposition().solve(b);
  LinearModel m;
  m.weights.assign(coef.data(), coef.data() + p);
  m.intercept = coef(p);
  return m;
}

CrossValidationReport cross_validate(const FeatureMatrix& x, std::span<const double> y,
                                     const ForestConfig& config, std::size_t folds,
                                     std::span<const std::size_t> groups, double clip_lo,
                                     double clip_hi) {
  if (folds < 2) throw ConfigError("cross validation needs at least two folds");
  if (x.rows() < folds) throw DegenerateDataset("fewer rows than folds");
  if (!groups.empty() && groups.size() != x.rows()) {
    throw ValidationError("cross validation needs one group id per row");
  }
  const auto order = canonical_order(x, y);
  Rng rng(derive_seed(config.seed, 0xC0FFEE));
  // position[i] % folds is the fold of order[i].
  std::vector<std::size_t> position(order.size());
  if (groups.empty()) {
    std::iota(position.begin(), position.end(), std::size_t{0});
    rng.shuffle(position);
  } else {
    std::vector<std::size_t> ids(groups.begin(), groups.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < folds) throw DegenerateDataset("fewer groups than folds");
    std::vector<std::size_t> slot(ids.size());
    std::iota(slot.begin(), slot.end(), std::size_t{0});
    rng.shuffle(slot);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto g = std::lower_bound(ids.begin(), ids.end(), groups[order[i]]) - ids.begin();
      position[i] = slot[static_cast<std::size_t>(g)];
    }
  }

  CrossValidationReport report;
  report.folds = folds;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (position[i] % folds == f ? test : train).push_back(order[i]);
    }
    const FeatureMatrix xtr = x.select_rows(train);
    std::vector<double> ytr;
    for (std::size_t r : train) ytr.push_back(y[r]);
    const RegressionForest forest = train_forest(xtr, ytr, config);
    const LinearModel linear = fit_linear(xtr, ytr);
    const double mean = std::accumulate(ytr.begin(), ytr.end(), 0.0) /
                        static_cast<double>(ytr.size());
    for (std::size_t r : test) {
      const auto row = x.row(r);
      accumulate(report.forest, std::clamp(forest.predict(row), clip_lo, clip_hi) - y[r]);
      accumulate(report.linear, linear.predict(row) - y[r]);
      accumulate(report.mean_baseline, mean - y[r]);
    }
  }
  finish(report.forest, x.rows());
  finish(report.linear, x.rows());
  finish(report.mean_baseline, x.rows());
  return report;
}

}  // namespace cityexpo
