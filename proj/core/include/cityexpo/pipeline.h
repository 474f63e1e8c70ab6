#ifndef CITYEXPO_PIPELINE_H_
#define CITYEXPO_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cityexpo/geo.h"
#include "cityexpo/indication.h"
#include "cityexpo/pfli.h"
#include "cityexpo/predictor.h"
#include "cityexpo/social_graph.h"

namespace cityexpo {

struct PipelineConfig {
  std::uint64_t seed = 42;
  double cluster_threshold_km = kDefaultClusterThresholdKm;
  double error_distance_km = 20.0;
  IndicationOptions indication;
  PfliTrainingConfig pfli;
};

nlohmann::json to_json(const PipelineConfig& c);
// Missing keys keep their defaults. Throws ConfigError.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                         PipelineConfig base = {});

// A PFLI model trained on the LA-users of one dataset, plus the location
// clustering it predicts with.
struct TrainedModel {
  std::vector<Location> locations;
  std::vector<std::string> kinds;
  IndicationModel indication;
  PfliWeights weights;
  ClusterSet clusters;
  std::vector<std::string> warnings;

  Predictor predictor() const { return Predictor(indication, weights, clusters, locations); }
};

ClusterSet cluster_locations(std::span<const Location> locations, double threshold_km);

// Every LA-user of `ds` is training data. Pass `clusters` to reuse a
// clustering of the same location list.
TrainedModel train_model(const SocialDataset& ds, const PipelineConfig& config,
                         std::optional<ClusterSet> clusters = std::nullopt);

struct EvalSplit {
  std::vector<UserIndex> train;  // LA-users kept visible
  std::vector<UserIndex> eval;   // LA-users whose city is masked
};

// Seeded split over LA-users; eval gets round(eval_fraction * |LA|) users.
EvalSplit split_la_users(const SocialDataset& ds, double eval_fraction, std::uint64_t seed);

// Seeded partition of LA-users into `folds` disjoint groups.
std::vector<std::vector<UserIndex>> fold_la_users(const SocialDataset& ds, std::size_t folds,
                                                  std::uint64_t seed);

}  // namespace cityexpo

#endif  // CITYEXPO_PIPELINE_H_
