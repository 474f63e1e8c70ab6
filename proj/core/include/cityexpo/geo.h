#ifndef CITYEXPO_GEO_H_
#define CITYEXPO_GEO_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cityexpo/social_graph.h"

namespace cityexpo {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kDefaultClusterThresholdKm = 100.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline LatLon coord(const Location& l) { return {l.lat, l.lon}; }

// Great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine_km(LatLon a, LatLon b);

// Symmetric n x n matrix with zero diagonal, row-major.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}
  static DistanceMatrix haversine(std::span<const Location> locations);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

// One agglomeration step. Nodes 0..n-1 are leaves; merge t creates node n+t.
// `left` is the child holding the lower-indexed leaf.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height_km = 0.0;  // average linkage at merge time
  std::size_t size = 0;    // leaves under the new node

  friend bool operator==(const Merge&, const Merge&) = default;
};

struct ClusterTree {
  std::vector<std::string> leaves;  // leaf ids, ascending
  std::vector<Merge> merges;        // |leaves| - 1 entries
};

// UPGMA over haversine distances. Locations are ordered by id first, so the
// result does not depend on input order. Ties in the closest pair are broken
// by the lexicographically smallest (lowest leaf of A, lowest leaf of B)
// pair. Throws EmptyInput.
ClusterTree upgma_cluster(std::span<const Location> locations);

// Same algorithm on an explicit distance matrix; leaf i is row i.
ClusterTree upgma_cluster(const DistanceMatrix& distances,
                          std::vector<std::string> leaf_ids);

// A flat cut of a ClusterTree. Clusters are ordered by their lowest leaf and
// list leaves in ascending order.
struct ClusterSet {
  double threshold_km = kDefaultClusterThresholdKm;
  std::vector<std::string> leaf_ids;
  std::vector<std::vector<LocationIndex>> clusters;
  std::vector<std::size_t> cluster_of;  // leaf -> cluster index

  std::size_t size() const { return clusters.size(); }
};

// Clusters are the maximal subtrees whose internal merge heights are all
// strictly below threshold_km.
ClusterSet cut_tree(const ClusterTree& tree, double threshold_km);

nlohmann::json to_json(const ClusterSet& clusters);
// Throws DataError on malformed input.
ClusterSet cluster_set_from_json(const nlohmann::json& j,
                                 std::span<const Location> locations);

}  // namespace cityexpo

#endif  // CITYEXPO_GEO_H_
