#ifndef CITYEXPO_INDICATION_H_
#define CITYEXPO_INDICATION_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cityexpo/social_graph.h"

namespace cityexpo {

// Sorted by location index, no duplicate indices, no zero entries.
using SparseVector = std::vector<std::pair<LocationIndex, double>>;

struct IndicationColumn {
  SparseVector probs;
  std::size_t support = 0;  // LA-users holding the token
  bool low_support = false;  // support < 2
};

// R_k: token -> distribution over current cities of LA-users holding it.
// NULL never has a column.
struct IndicationMatrix {
  std::size_t kind = 0;
  std::map<std::string, IndicationColumn, std::less<>> columns;
};

struct IndicationOptions {
  // Columns from tokens held by fewer LA-users are dropped.
  std::size_t min_support = 1;
};

IndicationMatrix build_indication_matrix(const SocialDataset& ds, std::size_t kind,
                                         const IndicationOptions& options = {});

// Empty for NULL and for tokens without a column.
const SparseVector& lookup_indication(const IndicationMatrix& mat, const Token& token);

struct PairCounts {
  std::uint64_t colocated = 0;
  std::uint64_t total = 0;

  double rate() const {
    return total == 0 ? 0.0 : static_cast<double>(colocated) / static_cast<double>(total);
  }
  friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

// W_k over unordered token pairs of LA-LA friend pairs, NULL included as a
// token. Keys are stored with first <= second (NULL sorts first).
struct SimilarityMatrix {
  std::size_t kind = 0;
  std::map<std::pair<Token, Token>, PairCounts> cells;
  PairCounts global;  // all LA-LA friend pairs
};

SimilarityMatrix build_similarity_matrix(const SocialDataset& ds, std::size_t kind);

// Symmetric. Pairs never observed fall back to the global co-location rate.
double lookup_similarity(const SimilarityMatrix& mat, const Token& a, const Token& b);

// All per-kind matrices estimated from one dataset's LA-users.
struct IndicationModel {
  std::vector<IndicationMatrix> indication;
  std::vector<SimilarityMatrix> similarity;
  std::size_t num_locations = 0;

  std::size_t num_kinds() const { return indication.size(); }
};

IndicationModel build_indication_model(const SocialDataset& ds,
                                       const IndicationOptions& options = {});

}  // namespace cityexpo

#endif  // CITYEXPO_INDICATION_H_
