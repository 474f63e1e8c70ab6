#include "cityexpo/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cityexpo/errors.h"
#include "cityexpo/geo.h"
#include "cityexpo/rng.h"

namespace cityexpo {
namespace {

constexpr double kKmPerDegree = 111.195;

std::string padded(const char* prefix, std::size_t i, std::size_t n) {
  int width = 1;
  for (std::size_t v = n > 0 ? n - 1 : 0; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(i);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

void check_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
}

void validate(const WorldConfig& c) {
  if (c.n_cities < 1 || c.n_orgs < 1 || c.n_users < 1 || c.n_continents < 1) {
    throw ConfigError("world counts must be >= 1");
  }
  check_rate(c.multi_city_org_fraction, "multi_city_org_fraction");
  check_rate(c.satellite_fraction, "satellite_fraction");
  check_rate(c.hometown_local_rate, "hometown_local_rate");
  check_rate(c.work_local_rate, "work_local_rate");
  check_rate(c.visibility.current_city, "visibility.current_city");
  check_rate(c.visibility.hometown, "visibility.hometown");
  check_rate(c.visibility.work_education, "visibility.work_education");
  check_rate(c.visibility.friends, "visibility.friends");
  if (std::isnan(c.friendship_distance_decay) || c.friendship_distance_decay <= 0.0) {
    throw ConfigError("friendship_distance_decay must be > 0");
  }
  if (!(c.mean_degree >= 0.0) || !std::isfinite(c.mean_degree)) {
    throw ConfigError("mean_degree must be >= 0");
  }
  if (!(c.org_boost >= 0.0)) throw ConfigError("org_boost must be >= 0");
  if (!(c.continent_radius_km > 0.0)) throw ConfigError("continent_radius_km must be > 0");
}

LatLon offset(LatLon from, double km, double bearing) {
  LatLon p;
  p.lat = std::clamp(from.lat + km * std::cos(bearing) / kKmPerDegree, -85.0, 85.0);
  const double scale = kKmPerDegree * std::max(0.05, std::cos(from.lat * std::numbers::pi / 180));
  p.lon = from.lon + km * std::sin(bearing) / scale;
  if (p.lon > 180.0) p.lon -= 360.0;
  if (p.lon < -180.0) p.lon += 360.0;
  return p;
}

// Weighted draw from cumulative weights.
std::size_t draw(Rng& rng, const std::vector<double>& cumulative) {
  const double r = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
  return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
}

// Relative friendship odds between two users `d` km apart.
double affinity(double decay, double d) {
  if (d <= 0.0) return 1.0;
  return std::exp(-decay * d);
}

}  // namespace

WorldConfig WorldConfig::large() {
  WorldConfig c;
  c.n_cities = 200;
  c.n_orgs = 300;
  c.n_users = 10000;
  c.n_continents = 6;
  return c;
}

WorldConfig world_preset(std::string_view name) {
  if (name == "ci") return WorldConfig::ci();
  if (name == "large") return WorldConfig::large();
  throw ConfigError("unknown world preset '" + std::string(name) + "'");
}

WorldConfig world_config_from_json(const nlohmann::json& j, WorldConfig c) {
  try {
    if (!j.is_object()) throw ConfigError("world config must be an object");
    if (auto it = j.find("preset"); it != j.end()) c = world_preset(it->get<std::string>());
    auto get = [](const nlohmann::json& obj, const char* key, auto& field) {
      if (auto it = obj.find(key); it != obj.end()) {
        field = it->get<std::remove_reference_t<decltype(field)>>();
      }
    };
    get(j, "n_cities", c.n_cities);
    get(j, "n_orgs", c.n_orgs);
    get(j, "n_users", c.n_users);
    get(j, "multi_city_org_fraction", c.multi_city_org_fraction);
    get(j, "friendship_distance_decay", c.friendship_distance_decay);
    get(j, "seed", c.seed);
    get(j, "mean_degree", c.mean_degree);
    get(j, "org_boost", c.org_boost);
    get(j, "n_continents", c.n_continents);
    get(j, "continent_radius_km", c.continent_radius_km);
    get(j, "satellite_fraction", c.satellite_fraction);
    get(j, "hometown_local_rate", c.hometown_local_rate);
    get(j, "work_local_rate", c.work_local_rate);
    if (auto it = j.find("visibility_rates"); it != j.end()) {
      if (it->is_number()) {
        const double r = it->get<double>();
        c.visibility = {r, r, r, r};
      } else {
        get(*it, "current_city", c.visibility.current_city);
        get(*it, "hometown", c.visibility.hometown);
        get(*it, "work_education", c.visibility.work_education);
        get(*it, "friends", c.visibility.friends);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad world config: ") + e.what());
  }
  validate(c);
  return c;
}

nlohmann::ordered_json to_json(const WorldConfig& c) {
  return {{"n_cities", c.n_cities},
          {"n_orgs", c.n_orgs},
          {"n_users", c.n_users},
          {"multi_city_org_fraction", c.multi_city_org_fraction},
          {"friendship_distance_decay", c.friendship_distance_decay},
          {"visibility_rates",
           {{"current_city", c.visibility.current_city},
            {"hometown", c.visibility.hometown},
            {"work_education", c.visibility.work_education},
            {"friends", c.visibility.friends}}},
          {"seed", c.seed},
          {"mean_degree", c.mean_degree},
          {"org_boost", c.org_boost},
          {"n_continents", c.n_continents},
          {"continent_radius_km", c.continent_radius_km},
          {"satellite_fraction", c.satellite_fraction},
          {"hometown_local_rate", c.hometown_local_rate},
          {"work_local_rate", c.work_local_rate}};
}

World generate_world(const WorldConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const std::size_t nc = cfg.n_cities;

  // Cities: continents of hub cities, some with nearby satellite towns.
  std::vector<LatLon> centers(cfg.n_continents);
  for (auto& c : centers) c = {rng.uniform(-45.0, 60.0), rng.uniform(-175.0, 175.0)};
  std::vector<LatLon> city(nc);
  std::vector<std::size_t> continent(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    if (i > 0 && rng.bernoulli(cfg.satellite_fraction)) {
      const std::size_t host = rng.below(i);
      city[i] = offset(city[host], rng.uniform(15.0, 60.0), rng.uniform(0.0, 2 * std::numbers::pi));
      continent[i] = continent[host];
    } else {
      continent[i] = rng.below(cfg.n_continents);
      const double r = cfg.continent_radius_km * std::sqrt(rng.uniform());
      city[i] = offset(centers[continent[i]], r, rng.uniform(0.0, 2 * std::numbers::pi));
    }
  }
  std::vector<double> dist(nc * nc, 0.0);
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t j = i + 1; j < nc; ++j) {
      dist[i * nc + j] = dist[j * nc + i] = haversine_km(city[i], city[j]);
    }
  }

  // City sizes are skewed: weight 1 / (rank + 1)^0.7.
  std::vector<double> cumulative(nc);
  double acc = 0.0;
  for (std::size_t i = 0; i < nc; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i + 1), 0.7);
    cumulative[i] = acc;
  }

  // Organizations: a home office, plus offices elsewhere for some. Every
  // city hosts at least one org while orgs last; the rest favor big cities.
  std::vector<std::vector<std::size_t>> offices(cfg.n_orgs);
  std::vector<std::vector<std::size_t>> orgs_in_city(nc);
  for (std::size_t o = 0; o < cfg.n_orgs; ++o) {
    offices[o].push_back(o < nc ? o : draw(rng, cumulative));
    if (nc > 1 && rng.bernoulli(cfg.multi_city_org_fraction)) {
      const std::size_t extra = 1 + rng.below(std::min<std::size_t>(3, nc - 1));
      while (offices[o].size() < extra + 1) {
        const std::size_t c = draw(rng, cumulative);
        if (std::find(offices[o].begin(), offices[o].end(), c) == offices[o].end()) {
          offices[o].push_back(c);
        }
      }
    }
    for (std::size_t c : offices[o]) orgs_in_city[c].push_back(o);
  }

  struct Person {
    std::size_t city;
    std::size_t hometown;
    std::size_t org;
  };
  std::vector<Person> people(cfg.n_users);
  for (auto& p : people) {
    p.city = draw(rng, cumulative);
    if (rng.bernoulli(cfg.hometown_local_rate)) {
      p.hometown = p.city;
    } else {
      // Elsewhere on the same continent when possible.
      std::vector<std::size_t> same;
      for (std::size_t c = 0; c < nc; ++c) {
        if (continent[c] == continent[p.city]) same.push_back(c);
      }
      p.hometown = rng.bernoulli(0.7) ? same[rng.below(same.size())] : rng.below(nc);
    }
    const auto& local = orgs_in_city[p.city];
    p.org = !local.empty() && rng.bernoulli(cfg.work_local_rate) ? local[rng.below(local.size())]
                                                                     : rng.below(cfg.n_orgs);
  }

  // Friendships: odds exp(-decay d)(1 + boost [same org]), scaled so the
  // expected degree matches mean_degree.
  const std::size_t n = cfg.n_users;
  auto weight = [&](std::size_t a, std::size_t b) {
    const double w = affinity(cfg.friendship_distance_decay, dist[people[a].city * nc + people[b].city]);
    return w * (1.0 + (people[a].org == people[b].org ? cfg.org_boost : 0.0));
  };
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) total += weight(a, b);
  }
  const double scale = total > 0.0 ? cfg.mean_degree * static_cast<double>(n) / 2.0 / total : 0.0;
  std::vector<std::vector<std::size_t>> friends(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double w = weight(a, b);
      if (w > 0.0 && rng.bernoulli(std::min(1.0, scale * w))) {
        friends[a].push_back(b);
        friends[b].push_back(a);
      }
    }
  }

  std::vector<Location> locations(nc);
  for (std::size_t i = 0; i < nc; ++i) locations[i] = {padded("c", i, nc), city[i].lat, city[i].lon};
  auto user_id = [&](std::size_t i) { return padded("u", i, n); };

  // Visibility draws come from their own stream so graph sampling and
  // masking stay independent.
  Rng vis(derive_seed(cfg.seed, 1));
  struct Shown {
    bool city, hometown, work, friends;
  };
  std::vector<Shown> shown(n);
  for (auto& s : shown) {
    s.city = vis.bernoulli(cfg.visibility.current_city);
    s.hometown = vis.bernoulli(cfg.visibility.hometown);
    s.work = vis.bernoulli(cfg.visibility.work_education);
    s.friends = vis.bernoulli(cfg.visibility.friends);
  }

  std::vector<UserRecord> truth(n), masked(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Person& p = people[i];
    UserRecord r;
    r.id = user_id(i);
    r.current_city = locations[p.city].id;
    r.attrs["hometown"] = padded("town_", p.hometown, nc);
    r.attrs["work_education"] = padded("org_", p.org, cfg.n_orgs);
    UserRecord m = r;
    for (std::size_t f : friends[i]) {
      r.friends.push_back(user_id(f));
      if (shown[i].friends && shown[f].friends) m.friends.push_back(user_id(f));
    }
    if (!shown[i].city) m.current_city.reset();
    if (!shown[i].hometown) m.attrs["hometown"] = std::nullopt;
    if (!shown[i].work) m.attrs["work_education"] = std::nullopt;
    truth[i] = std::move(r);
    masked[i] = std::move(m);
  }
  World w;
  w.truth = SocialDataset::from_records(locations, std::move(truth));
  w.masked = SocialDataset::from_records(std::move(locations), std::move(masked));
  return w;
}

}  // namespace cityexpo
