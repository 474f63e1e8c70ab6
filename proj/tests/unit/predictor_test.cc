#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "cityexpo/errors.h"
#include "cityexpo/pipeline.h"
#include "cityexpo/predictor.h"
#include "testing.h"

namespace cityexpo {
namespace {

using testing::rec;

ClusterSet make_clusters(std::vector<std::vector<LocationIndex>> groups, std::size_t n) {
  ClusterSet cs;
  cs.clusters = std::move(groups);
  cs.cluster_of.assign(n, 0);
  for (std::size_t c = 0; c < cs.clusters.size(); ++c) {
    for (LocationIndex l : cs.clusters[c]) cs.cluster_of[l] = c;
  }
  for (std::size_t i = 0; i < n; ++i) cs.leaf_ids.push_back("l" + std::to_string(i));
  return cs;
}

LocationScores scores(SparseVector v) {
  LocationScores s{std::move(v), false};
  s.normalize();
  return s;
}

TEST(SelectCluster, Examples) {
  auto cs = make_clusters({{0, 1}, {2}}, 3);
  auto all = select_cluster(scores({{0, 0.3}, {1, 0.7}}), cs);
  EXPECT_EQ(all.index, 0u);
  EXPECT_DOUBLE_EQ(all.probability, 1.0);

  auto split = select_cluster(scores({{0, 0.6}, {2, 0.4}}), cs);
  EXPECT_EQ(split.index, 0u);
  EXPECT_DOUBLE_EQ(split.probability, 0.6);

  auto tie = select_cluster(scores({{1, 0.5}, {2, 0.5}}), cs);
  EXPECT_EQ(tie.index, 0u);

  EXPECT_THROW(select_cluster(LocationScores{}, cs), EmptyScores);
}

TEST(SelectCluster, BeijingVersusParisAndEvry) {
  std::vector<Location> locs = {
      {"beijing", 39.9042, 116.4074}, {"evry", 48.6241, 2.4278}, {"paris", 48.8566, 2.3522}};
  auto cs = cluster_locations(locs, 100.0);
  ASSERT_EQ(cs.size(), 2u);
  auto s = scores({{0, 0.40}, {1, 0.25}, {2, 0.35}});
  auto choice = select_cluster(s, cs);
  EXPECT_EQ(cs.clusters[choice.index], (std::vector<LocationIndex>{1, 2}));
  EXPECT_NEAR(choice.probability, 0.60, 1e-12);
  // Without clustering Beijing is the single most likely point.
  PfliWeights w;
  IndicationModel m;
  Predictor p(m, w, cs, locs);
  EXPECT_EQ(*p.unclustered(s).location, 0u);
}

TEST(ClusterProbabilities, SumToOne) {
  Rng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    std::vector<Location> locs;
    for (std::size_t i = 0; i < n; ++i) {
      locs.push_back({"l" + std::to_string(100 + i), rng.uniform(40, 52), rng.uniform(-4, 12)});
    }
    auto cs = cluster_locations(locs, 100.0);
    SparseVector v;
    for (LocationIndex l = 0; l < n; ++l) {
      if (rng.bernoulli(0.6)) v.emplace_back(l, rng.uniform(0.0, 5.0));
    }
    auto s = scores(v);
    if (s.empty()) continue;
    EXPECT_NEAR(s.total(), 1.0, 1e-9);
    auto probs = cluster_probabilities(s, cs);
    double t = 0.0;
    for (double p : probs) t += p;
    EXPECT_NEAR(t, 1.0, 1e-9);
    EXPECT_NEAR(probs[select_cluster(s, cs).index],
                *std::max_element(probs.begin(), probs.end()), 0.0);
  }
}

TEST(SelectLocation, SingletonAndTwoPoint) {
  std::vector<Location> locs = {{"a", 10.0, 20.0}, {"b", 12.0, 24.0}, {"c", 0.0, 0.0}};
  auto cs = make_clusters({{0, 1}, {2}}, 3);
  auto s = scores({{0, 0.5}, {1, 0.5}, {2, 1.0}});
  for (Selector m : {Selector::kProb, Selector::kCentroid, Selector::kMinDist}) {
    EXPECT_EQ(select_location(s, cs, 1, m, locs).coordinate, (LatLon{0.0, 0.0}));
  }
  auto cent = select_location(s, cs, 0, Selector::kCentroid, locs);
  EXPECT_NEAR(cent.coordinate.lat, 11.0, 1e-12);
  EXPECT_NEAR(cent.coordinate.lon, 22.0, 1e-12);
  EXPECT_FALSE(cent.member.has_value());
  EXPECT_EQ(*select_location(s, cs, 0, Selector::kProb, locs).member, 0u);

  ClusterSet hollow = make_clusters({{}}, 0);
  EXPECT_THROW(select_location(s, hollow, 0, Selector::kProb, locs), EmptyCluster);
}

TEST(SelectLocation, MinDistMatchesExhaustiveScan) {
  Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Location> locs;
    for (int i = 0; i < 4; ++i) {
      locs.push_back({"l" + std::to_string(i), rng.uniform(48, 49), rng.uniform(2, 3)});
    }
    auto cs = make_clusters({{0, 1, 2, 3}}, 4);
    SparseVector v;
    for (LocationIndex l = 0; l < 4; ++l) v.emplace_back(l, rng.uniform(0.01, 1.0));
    auto s = scores(v);
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 4; ++i) {
      double cost = 0.0;
      for (std::size_t j = 0; j < 4; ++j) cost += s.at(j) * haversine_km(coord(locs[i]), coord(locs[j]));
      if (cost < best_cost) {
        best_cost = cost;
        best = i;
      }
    }
    EXPECT_EQ(*select_location(s, cs, 0, Selector::kMinDist, locs).member, best);
  }
}

TEST(Selection, InvariantUnderPositiveScaling) {
  Rng rng(63);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Location> locs;
    for (int i = 0; i < 10; ++i) {
      locs.push_back({"l" + std::to_string(i), rng.uniform(45, 50), rng.uniform(0, 6)});
    }
    auto cs = cluster_locations(locs, 100.0);
    SparseVector v;
    for (LocationIndex l = 0; l < 10; ++l) v.emplace_back(l, rng.uniform(0.01, 1.0));
    LocationScores raw{v, false};
    LocationScores scaled{v, false};
    for (auto& [l, p] : scaled.scores) p *= 37.5;
    auto a = select_cluster(raw, cs), b = select_cluster(scaled, cs);
    EXPECT_EQ(a.index, b.index);
    for (Selector m : {Selector::kProb, Selector::kMinDist}) {
      EXPECT_EQ(select_location(raw, cs, a.index, m, locs).member,
                select_location(scaled, cs, b.index, m, locs).member);
    }
  }
}

TEST(CombinedSelector, SwitchesAtFortyKm) {
  EXPECT_EQ(combined_selector(20.0), Selector::kProb);
  EXPECT_EQ(combined_selector(39.999), Selector::kProb);
  EXPECT_EQ(combined_selector(40.0), Selector::kCentroid);
  EXPECT_EQ(combined_selector(100.0), Selector::kCentroid);
}

struct ToyWorld {
  SocialDataset ds;
  TrainedModel model;
};

// u's hometown and both LA-friends point to Lyon.
ToyWorld toy_world() {
  std::vector<Location> locs = {{"lyon", 45.764, 4.8357}, {"nice", 43.7102, 7.262},
                                {"paris", 48.8566, 2.3522}};
  auto ds = SocialDataset::from_records(
      locs, {rec("u", {}, "h_lyon", {}, {"f1", "f2"}), rec("f1", "lyon", "h_lyon"),
             rec("f2", "lyon", "h_x"), rec("g", "paris", "h_paris", {}, {"h"}),
             rec("h", "nice", "h_lyon"), rec("k", "lyon", "h_lyon"), rec("blank", {})});
  ToyWorld w{ds, {}};
  w.model.locations.assign(locs.begin(), locs.end());
  w.model.kinds = ds.kinds();
  w.model.indication = build_indication_model(ds);
  w.model.weights = {{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}, 0.1, 0.0, 0.0};
  w.model.clusters = cluster_locations(ds.locations(), 100.0);
  return w;
}

TEST(Predictor, UnambiguousArgmax) {
  auto w = toy_world();
  auto p = w.model.predictor();
  auto pred = p.predict(make_user_view(w.ds, w.ds.user_index("u")), 20.0, "u");
  ASSERT_FALSE(pred.abstained);
  EXPECT_EQ(pred.selector, Selector::kProb);
  EXPECT_EQ(*pred.coordinate, coord(w.ds.location(*w.ds.find_location("lyon"))));
  EXPECT_EQ(pred.user, "u");
  EXPECT_GT(pred.cluster_confidence, 0.5);

  auto far = p.predict(make_user_view(w.ds, w.ds.user_index("u")), 100.0);
  EXPECT_EQ(far.selector, Selector::kCentroid);
}

TEST(Predictor, EmptyUserAbstains) {
  auto w = toy_world();
  auto pred = w.model.predictor().predict(make_user_view(w.ds, w.ds.user_index("blank")), 20.0);
  EXPECT_TRUE(pred.abstained);
  EXPECT_FALSE(pred.coordinate.has_value());
  auto j = to_json(pred);
  EXPECT_TRUE(j["lat"].is_null());
  EXPECT_TRUE(j["abstained"].get<bool>());
}

TEST(Predictor, JsonKeys) {
  auto w = toy_world();
  auto pred = w.model.predictor().predict(make_user_view(w.ds, 0), 20.0, "x");
  std::vector<std::string> keys;
  const auto j = to_json(pred);
  for (auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"user", "lat", "lon", "cluster", "confidence",
                                            "selector", "abstained"}));
}

// Cities 500 km apart unless named n*, which sit 5 km from c2.
std::vector<Location> baseline_cities() {
  return {{"c1", 40.0, 0.0}, {"c2", 45.0, 0.0}, {"c3", 45.04, 0.0}, {"c4", 50.0, 0.0}};
}

SocialDataset voters(std::vector<std::string> friend_cities) {
  std::vector<UserRecord> users = {rec("u", {})};
  for (std::size_t i = 0; i < friend_cities.size(); ++i) {
    const std::string id = "f" + std::to_string(i);
    users[0].friends.push_back(id);
    users.push_back(rec(id, friend_cities[i]));
  }
  return SocialDataset::from_records(baseline_cities(), users);
}

std::string predicted_city(const SocialDataset& ds, const Prediction& p) {
  if (p.abstained) return "abstain";
  return ds.location(*p.location).id;
}

TEST(BaselineFreq, Examples) {
  auto friendless = voters({});
  EXPECT_TRUE(baseline_freq(friendless, 0).abstained);
  auto ds = voters({"c1", "c1", "c2"});
  EXPECT_EQ(predicted_city(ds, baseline_freq(ds, ds.user_index("u"))), "c1");
  auto tie = voters({"c4", "c1"});
  EXPECT_EQ(predicted_city(tie, baseline_freq(tie, tie.user_index("u"))), "c1");
}

TEST(BaselineFreqPlus, Examples) {
  EXPECT_TRUE(baseline_freq_plus(voters({}), 0).abstained);
  auto isolated = voters({"c1", "c4", "c4"});
  const auto u = isolated.user_index("u");
  EXPECT_EQ(baseline_freq_plus(isolated, u).location, baseline_freq(isolated, u).location);
  // c1 has 2 votes; c2 has 2 plus 1 from c3 four km away.
  auto ds = voters({"c1", "c1", "c2", "c2", "c3"});
  EXPECT_EQ(predicted_city(ds, baseline_freq(ds, ds.user_index("u"))), "c1");
  EXPECT_EQ(predicted_city(ds, baseline_freq_plus(ds, ds.user_index("u"))), "c2");
}

TEST(BaselineKnn, Examples) {
  auto ds = voters({"c1", "c4", "c4"});
  const auto u = ds.user_index("u");
  EXPECT_EQ(baseline_knn(ds, u, 10).location, baseline_freq(ds, u).location);

  // u: friends a(c1), b(c2), c(c2), d(c4). a shares two friends with u,
  // d shares one, b and c none.
  auto crafted = SocialDataset::from_records(
      baseline_cities(), {rec("u", {}, {}, {}, {"a", "b", "c", "d", "x", "y"}),
                          rec("a", "c1", {}, {}, {"x", "y"}), rec("b", "c2"), rec("c", "c2"),
                          rec("d", "c4", {}, {}, {"x"}), rec("x", {}), rec("y", {})});
  const auto cu = crafted.user_index("u");
  EXPECT_EQ(predicted_city(crafted, baseline_knn(crafted, cu, 1)), "c1");
  // Top two are a and d: one vote each, lowest id wins.
  EXPECT_EQ(predicted_city(crafted, baseline_knn(crafted, cu, 2)), "c1");
  EXPECT_EQ(predicted_city(crafted, baseline_freq(crafted, cu)), "c2");
  EXPECT_EQ(predicted_city(crafted, baseline_knn(crafted, cu, 4)), "c2");
  EXPECT_TRUE(baseline_knn(voters({}), 0).abstained);
}

}  // namespace
}  // namespace cityexpo
