#include "testing.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace cityexpo::testing {

UserRecord rec(std::string id, std::optional<std::string> city, Token hometown, Token work,
               std::vector<std::string> friends) {
  UserRecord r;
  r.id = std::move(id);
  r.current_city = std::move(city);
  r.attrs["hometown"] = std::move(hometown);
  r.attrs["work_education"] = std::move(work);
  r.friends = std::move(friends);
  return r;
}

SocialDataset random_dataset(Rng& rng, const RandomDatasetOptions& o) {
  const std::size_t nl = 2 + rng.below(o.max_locations - 1);
  const std::size_t nu = 3 + rng.below(o.max_users - 2);
  std::vector<Location> locs;
  for (std::size_t i = 0; i < nl; ++i) {
    locs.push_back({"l" + std::to_string(i), 45.0 + rng.uniform(-2.0, 2.0),
                    5.0 + rng.uniform(-3.0, 3.0)});
  }
  auto token = [&](const char* prefix) -> Token {
    if (rng.bernoulli(o.null_rate)) return std::nullopt;
    return prefix + std::to_string(rng.below(o.tokens_per_kind));
  };
  std::vector<UserRecord> users;
  for (std::size_t i = 0; i < nu; ++i) {
    std::optional<std::string> city;
    if (rng.bernoulli(o.la_rate)) city = locs[rng.below(nl)].id;
    users.push_back(rec("u" + std::to_string(i), city, token("h"), token("w")));
  }
  for (std::size_t i = 0; i < nu; ++i) {
    for (std::size_t j = i + 1; j < nu; ++j) {
      if (rng.bernoulli(o.edge_rate)) users[i].friends.push_back(users[j].id);
    }
  }
  return SocialDataset::from_records(std::move(locs), std::move(users));
}

std::vector<Merge> brute_upgma(const DistanceMatrix& d) {
  struct Cluster {
    std::size_t node;
    std::vector<std::size_t> leaves;  // ascending
  };
  const std::size_t n = d.size();
  std::vector<Cluster> active;
  for (std::size_t i = 0; i < n; ++i) active.push_back({i, {i}});
  std::vector<Merge> merges;
  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    bool found = false;
    // Clusters stay sorted by lowest leaf, so scanning a < b in order and
    // keeping the first strict minimum is the lexicographic tie rule.
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        double s = 0.0;
        for (std::size_t i : active[a].leaves) {
          for (std::size_t j : active[b].leaves) s += d(i, j);
        }
        const double avg =
            s / static_cast<double>(active[a].leaves.size() * active[b].leaves.size());
        if (!found || avg < best) {
          best = avg;
          ba = a;
          bb = b;
          found = true;
        }
      }
    }
    Cluster merged{n + merges.size(), active[ba].leaves};
    merged.leaves.insert(merged.leaves.end(), active[bb].leaves.begin(), active[bb].leaves.end());
    std::sort(merged.leaves.begin(), merged.leaves.end());
    merges.push_back({active[ba].node, active[bb].node, best, merged.leaves.size()});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bb));
    active[ba] = std::move(merged);
  }
  return merges;
}

double naive_indication(const SocialDataset& ds, std::size_t kind, const Token& token,
                        LocationIndex l) {
  if (!token) return 0.0;
  std::size_t holders = 0, at = 0;
  for (const User& u : ds.users()) {
    if (!u.current_city || u.attrs[kind] != token) continue;
    ++holders;
    if (*u.current_city == l) ++at;
  }
  return holders == 0 ? 0.0 : static_cast<double>(at) / static_cast<double>(holders);
}

double naive_similarity(const SocialDataset& ds, std::size_t kind, const Token& a,
                        const Token& b) {
  std::size_t cell = 0, cell_same = 0, all = 0, all_same = 0;
  for (UserIndex u = 0; u < ds.num_users(); ++u) {
    for (UserIndex v = u + 1; v < ds.num_users(); ++v) {
      const User& x = ds.user(u);
      const User& y = ds.user(v);
      if (!x.current_city || !y.current_city) continue;
      if (std::find(x.friends.begin(), x.friends.end(), v) == x.friends.end()) continue;
      const bool same = *x.current_city == *y.current_city;
      ++all;
      all_same += same;
      const bool match = (x.attrs[kind] == a && y.attrs[kind] == b) ||
                         (x.attrs[kind] == b && y.attrs[kind] == a);
      if (match) {
        ++cell;
        cell_same += same;
      }
    }
  }
  if (cell > 0) return static_cast<double>(cell_same) / static_cast<double>(cell);
  return all == 0 ? 0.0 : static_cast<double>(all_same) / static_cast<double>(all);
}

std::vector<double> naive_pfli(const SocialDataset& ds, UserIndex u, const PfliWeights& w) {
  const User& user = ds.user(u);
  std::vector<double> p(ds.num_locations(), 0.0);
  for (LocationIndex l = 0; l < ds.num_locations(); ++l) {
    for (std::size_t k = 0; k < ds.num_kinds(); ++k) {
      double sigma = naive_indication(ds, k, user.attrs[k], l);
      double delta = 0.0, eta = 0.0;
      for (UserIndex f : user.friends) {
        const User& fr = ds.user(f);
        if (fr.current_city) {
          if (*fr.current_city == l) delta += naive_similarity(ds, k, user.attrs[k], fr.attrs[k]);
        } else {
          eta += naive_indication(ds, k, fr.attrs[k], l);
        }
      }
      p[l] += w.mu[k] * sigma + w.nu[k] * delta + w.lambda_alpha * w.alpha[k] * eta;
    }
  }
  return p;
}

TempDir::TempDir() {
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("cityexpo_test_" + std::to_string(rd()) + std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

WorldConfig small_world_config() {
  WorldConfig wc;
  wc.n_users = 400;
  wc.n_cities = 20;
  wc.n_orgs = 30;
  return wc;
}

const ModelBundle& small_bundle() {
  static const ModelBundle b = [] {
    BundleOptions opt;
    opt.forest.trees = 20;
    return train_bundle(generate_world(small_world_config()).masked, PipelineConfig{}, opt);
  }();
  return b;
}

}  // namespace cityexpo::testing
