#ifndef CITYEXPO_SYNTH_H_
#define CITYEXPO_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cityexpo/social_graph.h"

namespace cityexpo {

struct VisibilityRates {
  double current_city = 0.7;
  double hometown = 0.6;
  double work_education = 0.5;
  double friends = 0.7;  // publishes the friend list; edges need both ends
};

struct WorldConfig {
  std::size_t n_cities = 40;
  std::size_t n_orgs = 60;
  std::size_t n_users = 2000;
  double multi_city_org_fraction = 0.2;
  // Per km. Friendship odds fall off as exp(-decay * distance).
  double friendship_distance_decay = 0.01;
  VisibilityRates visibility;
  std::uint64_t seed = 1;

  double mean_degree = 16.0;
  double org_boost = 4.0;           // extra relative odds for coworkers
  std::size_t n_continents = 4;
  double continent_radius_km = 900.0;
  double satellite_fraction = 0.3;  // cities placed 15..60 km from another
  double hometown_local_rate = 0.5;
  double work_local_rate = 0.9;

  static WorldConfig ci() { return {}; }
  static WorldConfig large();
};

// Missing keys keep the defaults of `base`. Throws ConfigError.
WorldConfig world_config_from_json(const nlohmann::json& j, WorldConfig base = {});
nlohmann::ordered_json to_json(const WorldConfig& c);
// "ci" or "large". Throws ConfigError.
WorldConfig world_preset(std::string_view name);

struct World {
  SocialDataset truth;   // every field visible, full friendship graph
  SocialDataset masked;  // fields hidden per the visibility rates
};

// Deterministic given the config. Throws ConfigError.
World generate_world(const WorldConfig& config);

}  // namespace cityexpo

#endif  // CITYEXPO_SYNTH_H_
