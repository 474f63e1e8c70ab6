#ifndef CITYEXPO_PREDICTOR_H_
#define CITYEXPO_PREDICTOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cityexpo/geo.h"
#include "cityexpo/indication.h"
#include "cityexpo/pfli.h"
#include "cityexpo/social_graph.h"

namespace cityexpo {

enum class Selector { kProb, kCentroid, kMinDist };

std::string_view to_string(Selector s);

// Error distances below this use the highest-probability point, otherwise
// the weighted centroid.
inline constexpr double kCombinedSwitchKm = 40.0;
inline constexpr double kNeighborhoodRadiusKm = 20.0;
inline constexpr std::size_t kDefaultKnn = 10;

Selector combined_selector(double error_distance_km);

struct Prediction {
  std::string user;
  std::optional<LatLon> coordinate;
  std::optional<LocationIndex> location;  // candidate chosen, when the selector picks one
  std::optional<std::size_t> cluster;
  double cluster_confidence = 0.0;
  Selector selector = Selector::kProb;
  bool abstained = true;
};

// {"user","lat","lon","cluster","confidence","selector","abstained"}
nlohmann::ordered_json to_json(const Prediction& p);

struct ClusterChoice {
  std::size_t index = 0;
  double probability = 0.0;
};

// Argmax of per-cluster mass (as a share of the total), lowest index on
// ties. Throws EmptyScores.
ClusterChoice select_cluster(const LocationScores& scores, const ClusterSet& clusters);

// Per-cluster share of the score mass; sums to 1 for non-empty scores.
std::vector<double> cluster_probabilities(const LocationScores& scores,
                                          const ClusterSet& clusters);

struct LocationChoice {
  LatLon coordinate;
  std::optional<LocationIndex> member;  // unset for the centroid
};

// Picks a point inside `cluster` from the scores restricted to it. Members
// with no mass weigh zero; a cluster with no mass at all is treated as
// uniform. Ties go to the lowest location index. Throws EmptyCluster.
LocationChoice select_location(const LocationScores& scores, const ClusterSet& clusters,
                               std::size_t cluster, Selector method,
                               std::span<const Location> locations);

// Scores users with a trained PFLI model and turns scores into predictions.
// Holds references; the model, clusters and locations must outlive it.
class Predictor {
 public:
  Predictor(const IndicationModel& model, const PfliWeights& weights,
            const ClusterSet& clusters, std::span<const Location> locations);

  LocationScores scores(const UserView& user) const;

  // Cluster selection then the combined selector for `error_distance_km`.
  Prediction predict(const UserView& user, double error_distance_km,
                     std::string user_id = {}) const;
  Prediction predict_with(const UserView& user, Selector selector,
                          std::string user_id = {}) const;
  Prediction from_scores(const LocationScores& scores, Selector selector,
                         std::string user_id = {}) const;
  // Highest-probability candidate over all locations, no clustering.
  Prediction unclustered(const LocationScores& scores, std::string user_id = {}) const;

  const ClusterSet& clusters() const { return clusters_; }
  std::span<const Location> locations() const { return locations_; }

 private:
  const IndicationModel& model_;
  const PfliWeights& weights_;
  const ClusterSet& clusters_;
  std::span<const Location> locations_;
};

// Most frequent LA-friend city.
Prediction baseline_freq(const SocialDataset& ds, UserIndex u);
// Frequency plus the frequencies of cities strictly closer than radius_km.
Prediction baseline_freq_plus(const SocialDataset& ds, UserIndex u,
                              double radius_km = kNeighborhoodRadiusKm);
// Frequency vote over the k LA-friends sharing the most common friends.
Prediction baseline_knn(const SocialDataset& ds, UserIndex u, std::size_t k = kDefaultKnn);

}  // namespace cityexpo

#endif  // CITYEXPO_PREDICTOR_H_
