#include "cityexpo/geo.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "cityexpo/errors.h"

namespace cityexpo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Candidate pair ordering: linkage first, then the (lower key, higher key)
// pair where a cluster's key is its lowest leaf index.
struct PairKey {
  double linkage;
  std::size_t lo;
  std::size_t hi;

  bool operator<(const PairKey& o) const {
    return std::tie(linkage, lo, hi) < std::tie(o.linkage, o.lo, o.hi);
  }
};

}  // namespace

double haversine_km(LatLon a, LatLon b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

DistanceMatrix DistanceMatrix::haversine(std::span<const Location> locations) {
  DistanceMatrix m(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = i + 1; j < locations.size(); ++j) {
      m.set(i, j, haversine_km(coord(locations[i]), coord(locations[j])));
    }
  }
  return m;
}

ClusterTree upgma_cluster(std::span<const Location> locations) {
  if (locations.empty()) throw EmptyInput("upgma_cluster needs at least one location");
  std::vector<Location> sorted(locations.begin(), locations.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Location& a, const Location& b) { return a.id < b.id; });
  std::vector<std::string> ids;
  ids.reserve(sorted.size());
  for (const auto& l : sorted) ids.push_back(l.id);
  return upgma_cluster(DistanceMatrix::haversine(sorted), std::move(ids));
}

// Average linkage kept as the sum of pairwise leaf distances between two
// clusters; linkage = sum / (|A| |B|). Each active row caches its best
// partner, and only rows whose partner was consumed by a merge are rescanned.
ClusterTree upgma_cluster(const DistanceMatrix& distances,
                          std::vector<std::string> leaf_ids) {
  const std::size_t n = distances.size();
  if (n == 0) throw EmptyInput("upgma_cluster needs at least one location");
  if (leaf_ids.size() != n) throw ValidationError("leaf id count does not match matrix");

  ClusterTree tree;
  tree.leaves = std::move(leaf_ids);
  tree.merges.reserve(n - 1);
  if (n == 1) return tree;

  std::vector<double> sum(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) sum[i * n + j] = distances(i, j);
  }
  std::vector<std::size_t> size(n, 1), key(n), node(n);
  std::iota(key.begin(), key.end(), std::size_t{0});
  std::iota(node.begin(), node.end(), std::size_t{0});
  std::vector<char> active(n, 1);
  std::vector<std::size_t> best(n, n);
  std::vector<PairKey> best_key(n);

  auto link = [&](std::size_t i, std::size_t j) {
    return sum[i * n + j] / static_cast<double>(size[i] * size[j]);
  };
  auto pair_key = [&](std::size_t i, std::size_t j) {
    return PairKey{link(i, j), std::min(key[i], key[j]), std::max(key[i], key[j])};
  };
  auto rescan = [&](std::size_t i) {
    best[i] = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      PairKey k = pair_key(i, j);
      if (best[i] == n || k < best_key[i]) {
        best[i] = j;
        best_key[i] = k;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) rescan(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i] && best[i] != n && (a == n || best_key[i] < best_key[a])) a = i;
    }
    std::size_t b = best[a];
    const double height = best_key[a].linkage;
    std::size_t keep = key[a] < key[b] ? a : b;
    std::size_t gone = keep == a ? b : a;

    tree.merges.push_back({node[keep], node[gone], height, size[keep] + size[gone]});

    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == keep || c == gone) continue;
      double s = sum[keep * n + c] + sum[gone * n + c];
      sum[keep * n + c] = s;
      sum[c * n + keep] = s;
    }
    size[keep] += size[gone];
    node[keep] = n + step;
    active[gone] = 0;
    best[gone] = n;

    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || i == keep) continue;
      if (best[i] == keep || best[i] == gone) {
        rescan(i);
      } else {
        PairKey k = pair_key(i, keep);
        if (k < best_key[i]) {
          best[i] = keep;
          best_key[i] = k;
        }
      }
    }
    rescan(keep);
  }
  return tree;
}

ClusterSet cut_tree(const ClusterTree& tree, double threshold_km) {
  const std::size_t n = tree.leaves.size();
  ClusterSet out;
  out.threshold_km = threshold_km;
  out.leaf_ids = tree.leaves;
  if (n == 0) return out;

  // Highest merge anywhere inside each internal node's subtree.
  std::vector<double> max_height(tree.merges.size());
  for (std::size_t t = 0; t < tree.merges.size(); ++t) {
    const Merge& m = tree.merges[t];
    double h = m.height_km;
    if (m.left >= n) h = std::max(h, max_height[m.left - n]);
    if (m.right >= n) h = std::max(h, max_height[m.right - n]);
    max_height[t] = h;
  }

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  // Representative leaf of each node.
  std::vector<std::size_t> rep(n + tree.merges.size());
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
  for (std::size_t t = 0; t < tree.merges.size(); ++t) {
    const Merge& m = tree.merges[t];
    rep[n + t] = rep[m.left];
    if (max_height[t] < threshold_km) {
      std::size_t ra = find(rep[m.left]);
      std::size_t rb = find(rep[m.right]);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }

  std::unordered_map<std::size_t, std::size_t> root_to_cluster;
  out.cluster_of.assign(n, 0);
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    std::size_t r = find(leaf);
    auto [it, inserted] = root_to_cluster.emplace(r, out.clusters.size());
    if (inserted) out.clusters.emplace_back();
    out.clusters[it->second].push_back(static_cast<LocationIndex>(leaf));
    out.cluster_of[leaf] = it->second;
  }
  return out;
}

nlohmann::json to_json(const ClusterSet& clusters) {
  nlohmann::json j;
  j["threshold_km"] = clusters.threshold_km;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : clusters.clusters) {
    nlohmann::json ids = nlohmann::json::array();
    for (LocationIndex l : c) ids.push_back(clusters.leaf_ids.at(l));
    list.push_back(std::move(ids));
  }
  j["clusters"] = std::move(list);
  return j;
}

ClusterSet cluster_set_from_json(const nlohmann::json& j,
                                 std::span<const Location> locations) {
  ClusterSet out;
  try {
    out.threshold_km = j.at("threshold_km").get<double>();
    std::unordered_map<std::string, LocationIndex> index;
    for (std::size_t i = 0; i < locations.size(); ++i) {
      out.leaf_ids.push_back(locations[i].id);
      index.emplace(locations[i].id, static_cast<LocationIndex>(i));
    }
    out.cluster_of.assign(locations.size(), locations.size());
    for (const auto& c : j.at("clusters")) {
      std::vector<LocationIndex> members;
      for (const auto& id : c) {
        auto it = index.find(id.get<std::string>());
        if (it == index.end()) {
          throw DataError("cluster references unknown location " + id.dump());
        }
        if (out.cluster_of[it->second] != locations.size()) {
          throw DataError("location " + id.dump() + " appears in two clusters");
        }
        out.cluster_of[it->second] = out.clusters.size();
        members.push_back(it->second);
      }
      std::sort(members.begin(), members.end());
      out.clusters.push_back(std::move(members));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed cluster set: ") + e.what());
  }
  for (std::size_t l = 0; l < locations.size(); ++l) {
    if (out.cluster_of[l] == locations.size()) {
      throw DataError("location '" + locations[l].id + "' is not in any cluster");
    }
  }
  return out;
}

}  // namespace cityexpo
