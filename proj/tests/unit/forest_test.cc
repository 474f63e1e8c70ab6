#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cityexpo/errors.h"
#include "cityexpo/forest.h"
#include "cityexpo/rng.h"

namespace cityexpo {
namespace {

FeatureMatrix column(const std::vector<double>& xs) {
  FeatureMatrix x;
  for (double v : xs) x.push_row(std::vector<double>{v});
  return x;
}

TEST(Forest, ConstantTargetIsReproduced) {
  Rng rng(81);
  FeatureMatrix x;
  std::vector<double> y;
  for (int i = 0; i < 60; ++i) {
    x.push_row(std::vector<double>{rng.uniform(), rng.uniform()});
    y.push_back(0.35);
  }
  ForestConfig cfg;
  cfg.trees = 20;
  auto f = train_forest(x, y, cfg);
  for (std::size_t r = 0; r < x.rows(); ++r) EXPECT_NEAR(f.predict(x.row(r)), 0.35, 1e-12);
  auto cv = cross_validate(x, y, cfg, 5);
  EXPECT_NEAR(cv.forest.mae, 0.0, 1e-12);
}

// Best single split by exhaustive search over midpoints of distinct values.
double oracle_split(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> cand(xs);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  double best_sse = INFINITY, best_t = 0.0;
  for (std::size_t i = 0; i + 1 < cand.size(); ++i) {
    const double t = 0.5 * (cand[i] + cand[i + 1]);
    double sl = 0, sr = 0, nl = 0, nr = 0;
    for (std::size_t r = 0; r < xs.size(); ++r) {
      (xs[r] <= t ? sl : sr) += ys[r];
      (xs[r] <= t ? nl : nr) += 1;
    }
    double sse = 0.0;
    for (std::size_t r = 0; r < xs.size(); ++r) {
      const double m = xs[r] <= t ? sl / nl : sr / nr;
      sse += (ys[r] - m) * (ys[r] - m);
    }
    if (sse < best_sse) {
      best_sse = sse;
      best_t = t;
    }
  }
  return best_t;
}

TEST(Forest, DepthOneTreeRecoversStep) {
  // 30 copies of each value, so every value survives the bootstrap.
  for (double step : {0.25, 0.45, 0.65}) {
    std::vector<double> xs, ys;
    for (int v = 0; v < 10; ++v) {
      for (int c = 0; c < 30; ++c) {
        xs.push_back(v / 10.0);
        ys.push_back(v / 10.0 > step ? 0.9 : 0.2);
      }
    }
    ForestConfig cfg;
    cfg.trees = 1;
    cfg.max_depth = 1;
    cfg.seed = 7;
    auto f = train_forest(column(xs), ys, cfg);
    const auto& root = f.trees()[0].nodes()[0];
    EXPECT_EQ(root.feature, 0);
    EXPECT_DOUBLE_EQ(root.threshold, oracle_split(xs, ys));
    EXPECT_EQ(f.trees()[0].depth(), 1u);
    EXPECT_NEAR(f.predict(std::vector<double>{0.0}), 0.2, 1e-12);
    EXPECT_NEAR(f.predict(std::vector<double>{0.9}), 0.9, 1e-12);
  }
}

std::pair<FeatureMatrix, std::vector<double>> noisy_data(Rng& rng, std::size_t n) {
  FeatureMatrix x;
  std::vector<double> y;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    x.push_row(std::vector<double>{a, b, c});
    y.push_back(std::clamp(0.7 * a + 0.2 * (b > 0.5) + 0.1 * rng.normal(), 0.0, 1.0));
  }
  return {x, y};
}

TEST(Forest, RowOrderDoesNotMatter) {
  Rng rng(82);
  auto [x, y] = noisy_data(rng, 150);
  std::vector<std::size_t> perm(x.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  auto xp = x.select_rows(perm);
  std::vector<double> yp;
  for (auto i : perm) yp.push_back(y[i]);
  ForestConfig cfg;
  cfg.trees = 15;
  cfg.seed = 3;
  auto a = train_forest(x, y, cfg), b = train_forest(xp, yp, cfg);
  for (std::size_t r = 0; r < x.rows(); ++r) EXPECT_EQ(a.predict(x.row(r)), b.predict(x.row(r)));
}

TEST(Forest, DeterministicAcrossThreadCounts) {
  Rng rng(83);
  auto [x, y] = noisy_data(rng, 120);
  ForestConfig one, many;
  one.trees = many.trees = 12;
  one.threads = 1;
  many.threads = 4;
  auto a = train_forest(x, y, one), b = train_forest(x, y, many);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Forest, RespectsDepthAndLeafSize) {
  Rng rng(84);
  auto [x, y] = noisy_data(rng, 300);
  ForestConfig cfg;
  cfg.trees = 10;
  cfg.max_depth = 3;
  auto f = train_forest(x, y, cfg);
  for (const auto& t : f.trees()) EXPECT_LE(t.depth(), 3u);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double p = f.predict(x.row(r));
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(Forest, BeatsMeanBaselineOnSignal) {
  Rng rng(85);
  auto [x, y] = noisy_data(rng, 400);
  ForestConfig cfg;
  cfg.trees = 30;
  auto cv = cross_validate(x, y, cfg, 10);
  EXPECT_EQ(cv.folds, 10u);
  EXPECT_LT(cv.forest.mae, cv.mean_baseline.mae);
  EXPECT_LE(cv.forest.mae, cv.forest.rmse + 1e-12);
}

TEST(CrossValidate, GroupsPreventMemorizingRepeatedRows) {
  // Each group repeats one random (x, y) five times; y carries no signal.
  Rng rng(86);
  FeatureMatrix x;
  std::vector<double> y;
  std::vector<std::size_t> groups;
  for (std::size_t g = 0; g < 80; ++g) {
    const double a = rng.uniform(), b = rng.uniform(), target = rng.uniform();
    for (int c = 0; c < 5; ++c) {
      x.push_row(std::vector<double>{a, b});
      y.push_back(target);
      groups.push_back(g);
    }
  }
  ForestConfig cfg;
  cfg.trees = 20;
  cfg.min_samples_leaf = 1;
  auto leaky = cross_validate(x, y, cfg, 5);
  auto grouped = cross_validate(x, y, cfg, 5, groups);
  EXPECT_LT(leaky.forest.mae, 0.5 * leaky.mean_baseline.mae);
  EXPECT_GT(grouped.forest.mae, 0.8 * grouped.mean_baseline.mae);
  std::vector<std::size_t> short_groups(3, 0);
  EXPECT_THROW(cross_validate(x, y, cfg, 5, short_groups), ValidationError);
}

TEST(Forest, JsonRoundTrip) {
  Rng rng(87);
  auto [x, y] = noisy_data(rng, 100);
  ForestConfig cfg;
  cfg.trees = 5;
  auto f = train_forest(x, y, cfg);
  auto back = forest_from_json(to_json(f));
  EXPECT_EQ(back.num_features(), f.num_features());
  for (std::size_t r = 0; r < x.rows(); ++r) EXPECT_EQ(back.predict(x.row(r)), f.predict(x.row(r)));
  EXPECT_THROW(forest_from_json(nlohmann::json::object()), BundleError);
  auto broken = to_json(f);
  broken["trees"][0]["left"][0] = 999;
  EXPECT_THROW(forest_from_json(broken), BundleError);
}

TEST(Forest, InputErrors) {
  ForestConfig cfg;
  EXPECT_THROW(train_forest(FeatureMatrix{}, std::vector<double>{}, cfg), EmptyInput);
  EXPECT_THROW(train_forest(column({1, 2}), std::vector<double>{1}, cfg), ValidationError);
  FeatureMatrix x(0, 2);
  EXPECT_THROW(x.push_row(std::vector<double>{1.0}), ValidationError);
  EXPECT_THROW(cross_validate(column({1, 2}), std::vector<double>{1, 2}, cfg, 5), DegenerateDataset);
}

TEST(LinearModel, RecoversExactPlane) {
  Rng rng(88);
  FeatureMatrix x;
  std::vector<double> y;
  for (int i = 0; i < 50; ++i) {
    const double a = rng.uniform(), b = rng.uniform();
    x.push_row(std::vector<double>{a, b});
    y.push_back(0.3 + 2.0 * a - 0.5 * b);
  }
  auto m = fit_linear(x, y);
  EXPECT_NEAR(m.intercept, 0.3, 1e-9);
  EXPECT_NEAR(m.weights[0], 2.0, 1e-9);
  EXPECT_NEAR(m.weights[1], -0.5, 1e-9);
}

}  // namespace
}  // namespace cityexpo
