#include "cityexpo/predictor.h"

#include <algorithm>
#include <limits>
#include <map>

#include "cityexpo/errors.h"

namespace cityexpo {
namespace {

Prediction abstain(std::string user_id, Selector s) {
  Prediction p;
  p.user = std::move(user_id);
  p.selector = s;
  p.abstained = true;
  return p;
}

Prediction vote(const SocialDataset& ds, UserIndex u,
                const std::map<LocationIndex, double>& votes) {
  Prediction p = abstain(ds.user(u).id, Selector::kProb);
  if (votes.empty()) return p;
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  p.location = best->first;
  p.coordinate = coord(ds.location(best->first));
  p.abstained = false;
  return p;
}

std::map<LocationIndex, double> friend_city_counts(const SocialDataset& ds,
                                                   std::span<const UserIndex> friends) {
  std::map<LocationIndex, double> counts;
  for (UserIndex f : friends) {
    if (const auto& c = ds.user(f).current_city) counts[*c] += 1.0;
  }
  return counts;
}

}  // namespace

std::string_view to_string(Selector s) {
  switch (s) {
    case Selector::kProb:
      return "prob";
    case Selector::kCentroid:
      return "centroid";
    case Selector::kMinDist:
      return "mindist";
  }
  return "prob";
}

Selector combined_selector(double error_distance_km) {
  return error_distance_km < kCombinedSwitchKm ? Selector::kProb : Selector::kCentroid;
}

nlohmann::ordered_json to_json(const Prediction& p) {
  nlohmann::ordered_json j;
  j["user"] = p.user;
  j["lat"] = p.coordinate ? nlohmann::ordered_json(p.coordinate->lat) : nlohmann::ordered_json(nullptr);
  j["lon"] = p.coordinate ? nlohmann::ordered_json(p.coordinate->lon) : nlohmann::ordered_json(nullptr);
  j["cluster"] = p.cluster ? nlohmann::ordered_json(*p.cluster) : nlohmann::ordered_json(nullptr);
  j["confidence"] = p.cluster_confidence;
  j["selector"] = to_string(p.selector);
  j["abstained"] = p.abstained;
  return j;
}

std::vector<double> cluster_probabilities(const LocationScores& scores,
                                          const ClusterSet& clusters) {
  std::vector<double> mass(clusters.size(), 0.0);
  double total = 0.0;
  for (const auto& [l, p] : scores.scores) {
    mass[clusters.cluster_of.at(l)] += p;
    total += p;
  }
  if (total > 0.0) {
    for (double& m : mass) m /= total;
  }
  return mass;
}

ClusterChoice select_cluster(const LocationScores& scores, const ClusterSet& clusters) {
  if (scores.empty()) throw EmptyScores();
  const auto mass = cluster_probabilities(scores, clusters);
  ClusterChoice best;
  for (std::size_t c = 0; c < mass.size(); ++c) {
    if (mass[c] > mass[best.index]) best.index = c;
  }
  best.probability = mass[best.index];
  return best;
}

LocationChoice select_location(const LocationScores& scores, const ClusterSet& clusters,
                               std::size_t cluster, Selector method,
                               std::span<const Location> locations) {
  const auto& members = clusters.clusters.at(cluster);
  if (members.empty()) throw EmptyCluster();

  std::vector<double> w(members.size());
  double total = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    w[i] = scores.at(members[i]);
    total += w[i];
  }
  if (total > 0.0) {
    for (double& x : w) x /= total;
  } else {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(members.size()));
  }

  switch (method) {
    case Selector::kProb: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < members.size(); ++i) {
        if (w[i] > w[best]) best = i;
      }
      return {coord(locations[members[best]]), members[best]};
    }
    case Selector::kCentroid: {
      LatLon c{0.0, 0.0};
      for (std::size_t i = 0; i < members.size(); ++i) {
        c.lat += w[i] * locations[members[i]].lat;
        c.lon += w[i] * locations[members[i]].lon;
      }
      return {c, std::nullopt};
    }
    case Selector::kMinDist: {
      std::size_t best = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < members.size(); ++i) {
        double cost = 0.0;
        for (std::size_t j = 0; j < members.size(); ++j) {
          if (w[j] > 0.0) {
            cost += w[j] * haversine_km(coord(locations[members[i]]),
                                        coord(locations[members[j]]));
          }
        }
        if (cost < best_cost) {
          best_cost = cost;
          best = i;
        }
      }
      return {coord(locations[members[best]]), members[best]};
    }
  }
  throw EmptyCluster();
}

Predictor::Predictor(const IndicationModel& model, const PfliWeights& weights,
                     const ClusterSet& clusters, std::span<const Location> locations)
    : model_(model), weights_(weights), clusters_(clusters), locations_(locations) {}

LocationScores Predictor::scores(const UserView& user) const {
  return pfli_scores(user, model_, weights_, true);
}

Prediction Predictor::predict(const UserView& user, double error_distance_km,
                              std::string user_id) const {
  return predict_with(user, combined_selector(error_distance_km), std::move(user_id));
}

Prediction Predictor::predict_with(const UserView& user, Selector selector,
                                   std::string user_id) const {
  return from_scores(scores(user), selector, std::move(user_id));
}

Prediction Predictor::from_scores(const LocationScores& scores, Selector selector,
                                  std::string user_id) const {
  if (scores.empty()) return abstain(std::move(user_id), selector);
  const ClusterChoice c = select_cluster(scores, clusters_);
  const LocationChoice loc = select_location(scores, clusters_, c.index, selector, locations_);
  Prediction p;
  p.user = std::move(user_id);
  p.coordinate = loc.coordinate;
  p.location = loc.member;
  p.cluster = c.index;
  p.cluster_confidence = std::clamp(c.probability, 0.0, 1.0);
  p.selector = selector;
  p.abstained = false;
  return p;
}

Prediction Predictor::unclustered(const LocationScores& scores, std::string user_id) const {
  if (scores.empty()) return abstain(std::move(user_id), Selector::kProb);
  auto best = scores.scores.begin();
  for (auto it = scores.scores.begin(); it != scores.scores.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  Prediction p;
  p.user = std::move(user_id);
  p.location = best->first;
  p.coordinate = coord(locations_[best->first]);
  p.cluster = clusters_.cluster_of.at(best->first);
  p.cluster_confidence = select_cluster(scores, clusters_).probability;
  p.selector = Selector::kProb;
  p.abstained = false;
  return p;
}

Prediction baseline_freq(const SocialDataset& ds, UserIndex u) {
  return vote(ds, u, friend_city_counts(ds, ds.user(u).friends));
}

Prediction baseline_freq_plus(const SocialDataset& ds, UserIndex u, double radius_km) {
  const auto counts = friend_city_counts(ds, ds.user(u).friends);
  std::map<LocationIndex, double> smoothed;
  for (const auto& [c, n] : counts) {
    double s = n;
    for (const auto& [o, m] : counts) {
      if (o != c &&
          haversine_km(coord(ds.location(c)), coord(ds.location(o))) < radius_km) {
        s += m;
      }
    }
    smoothed[c] = s;
  }
  return vote(ds, u, smoothed);
}

Prediction baseline_knn(const SocialDataset& ds, UserIndex u, std::size_t k) {
  const auto& mine = ds.user(u).friends;
  struct Ranked {
    std::size_t common;
    UserIndex id;
  };
  std::vector<Ranked> ranked;
  for (UserIndex f : mine) {
    if (!ds.is_la(f)) continue;
    const auto& theirs = ds.user(f).friends;
    std::size_t common = 0;
    auto a = mine.begin();
    auto b = theirs.begin();
    while (a != mine.end() && b != theirs.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        ++common;
        ++a;
        ++b;
      }
    }
    ranked.push_back({common, f});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& x, const Ranked& y) {
    return x.common != y.common ? x.common > y.common : x.id < y.id;
  });
  if (ranked.size() > k) ranked.resize(k);
  std::vector<UserIndex> top;
  for (const auto& r : ranked) top.push_back(r.id);
  return vote(ds, u, friend_city_counts(ds, top));
}

}  // namespace cityexpo
