#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "cityexpo/errors.h"
#include "cityexpo/pipeline.h"
#include "cityexpo/synth.h"

namespace cityexpo {
namespace {

SocialDataset world(std::uint64_t seed = 1) {
  WorldConfig wc;
  wc.n_users = 400;
  wc.n_cities = 20;
  wc.n_orgs = 30;
  wc.seed = seed;
  return generate_world(wc).masked;
}

TEST(PipelineConfig, JsonRoundTripAndValidation) {
  PipelineConfig c;
  c.seed = 77;
  c.cluster_threshold_km = 55;
  c.pfli.logistic.l2 = 0.01;
  auto back = pipeline_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  auto partial = pipeline_config_from_json(nlohmann::json::parse(R"({"error_distance_km": 80})"));
  EXPECT_EQ(partial.error_distance_km, 80.0);
  EXPECT_EQ(partial.seed, PipelineConfig{}.seed);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"cluster_threshold_km": 0})")),
               ConfigError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"seed": "x"})")), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::array()), ConfigError);
}

TEST(SplitLaUsers, SeededDisjointAndSized) {
  auto ds = world();
  const auto la = partition_users(ds).la;
  auto a = split_la_users(ds, 0.2, 5);
  auto b = split_la_users(ds, 0.2, 5);
  EXPECT_EQ(a.eval, b.eval);
  EXPECT_NE(a.eval, split_la_users(ds, 0.2, 6).eval);
  EXPECT_EQ(a.eval.size(), static_cast<std::size_t>(std::round(0.2 * la.size())));
  EXPECT_EQ(a.train.size() + a.eval.size(), la.size());
  std::set<UserIndex> all(a.train.begin(), a.train.end());
  for (UserIndex u : a.eval) EXPECT_TRUE(all.insert(u).second);
  EXPECT_THROW(split_la_users(ds, 1.5, 1), ConfigError);
}

TEST(FoldLaUsers, PartitionsLaUsers) {
  auto ds = world();
  auto folds = fold_la_users(ds, 5, 3);
  ASSERT_EQ(folds.size(), 5u);
  std::set<UserIndex> seen;
  for (const auto& f : folds) {
    for (UserIndex u : f) {
      EXPECT_TRUE(ds.is_la(u));
      EXPECT_TRUE(seen.insert(u).second);
    }
  }
  EXPECT_EQ(seen.size(), partition_users(ds).la.size());
  EXPECT_THROW(fold_la_users(ds, 0, 3), ConfigError);
}

TEST(TrainModel, MaskedCitiesCannotLeak) {
  // Moving an evaluation user's true city before masking changes nothing.
  auto ds = world(2);
  auto split = split_la_users(ds, 0.2, 9);
  auto records = ds.to_records();
  for (UserIndex u : split.eval) {
    records[u].current_city = ds.location((*ds.user(u).current_city + 1) % ds.num_locations()).id;
  }
  auto moved = SocialDataset::from_records(
      std::vector<Location>(ds.locations().begin(), ds.locations().end()), records, ds.kinds());
  auto m1 = train_model(ds.with_hidden_cities(split.eval), PipelineConfig{});
  auto m2 = train_model(moved.with_hidden_cities(split.eval), PipelineConfig{});
  EXPECT_EQ(m1.weights.mu, m2.weights.mu);
  EXPECT_EQ(m1.weights.nu, m2.weights.nu);
  auto masked1 = ds.with_hidden_cities(split.eval);
  auto masked2 = moved.with_hidden_cities(split.eval);
  for (UserIndex u : split.eval) {
    auto p1 = m1.predictor().predict(make_user_view(masked1, u), 20);
    auto p2 = m2.predictor().predict(make_user_view(masked2, u), 20);
    EXPECT_EQ(to_json(p1), to_json(p2));
  }
}

TEST(TrainModel, DeterministicAndReusesClusters) {
  auto ds = world(3);
  PipelineConfig cfg;
  auto a = train_model(ds, cfg);
  auto b = train_model(ds, cfg, cluster_locations(ds.locations(), cfg.cluster_threshold_km));
  EXPECT_EQ(a.weights.mu, b.weights.mu);
  EXPECT_EQ(a.clusters.clusters, b.clusters.clusters);
  EXPECT_EQ(a.kinds, ds.kinds());
}

}  // namespace
}  // namespace cityexpo
