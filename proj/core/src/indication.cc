#include "cityexpo/indication.h"

#include <map>

namespace cityexpo {

IndicationMatrix build_indication_matrix(const SocialDataset& ds, std::size_t kind,
                                         const IndicationOptions& options) {
  std::map<std::string, std::map<LocationIndex, std::size_t>, std::less<>> counts;
  for (const User& u : ds.users()) {
    if (!u.current_city || !u.attrs[kind]) continue;
    ++counts[*u.attrs[kind]][*u.current_city];
  }
  IndicationMatrix mat;
  mat.kind = kind;
  for (auto& [token, by_city] : counts) {
    std::size_t support = 0;
    for (const auto& [city, c] : by_city) support += c;
    if (support < options.min_support) continue;
    IndicationColumn col;
    col.support = support;
    col.low_support = support < 2;
    col.probs.reserve(by_city.size());
    for (const auto& [city, c] : by_city) {
      col.probs.emplace_back(city, static_cast<double>(c) / static_cast<double>(support));
    }
    mat.columns.emplace(token, std::move(col));
  }
  return mat;
}

const SparseVector& lookup_indication(const IndicationMatrix& mat, const Token& token) {
  static const SparseVector kEmpty;
  if (!token) return kEmpty;
  auto it = mat.columns.find(*token);
  return it == mat.columns.end() ? kEmpty : it->second.probs;
}

SimilarityMatrix build_similarity_matrix(const SocialDataset& ds, std::size_t kind) {
  SimilarityMatrix mat;
  mat.kind = kind;
  for (UserIndex u = 0; u < ds.num_users(); ++u) {
    const User& a = ds.user(u);
    if (!a.current_city) continue;
    for (UserIndex v : a.friends) {
      if (v <= u) continue;
      const User& b = ds.user(v);
      if (!b.current_city) continue;
      const bool same = *a.current_city == *b.current_city;
      const Token& ta = a.attrs[kind];
      const Token& tb = b.attrs[kind];
      auto key = ta <= tb ? std::make_pair(ta, tb) : std::make_pair(tb, ta);
      PairCounts& cell = mat.cells[key];
      ++cell.total;
      ++mat.global.total;
      if (same) {
        ++cell.colocated;
        ++mat.global.colocated;
      }
    }
  }
  return mat;
}

double lookup_similarity(const SimilarityMatrix& mat, const Token& a, const Token& b) {
  auto key = a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
  auto it = mat.cells.find(key);
  if (it == mat.cells.end() || it->second.total == 0) return mat.global.rate();
  return it->second.rate();
}

IndicationModel build_indication_model(const SocialDataset& ds,
                                       const IndicationOptions& options) {
  IndicationModel model;
  model.num_locations = ds.num_locations();
  for (std::size_t k = 0; k < ds.num_kinds(); ++k) {
    model.indication.push_back(build_indication_matrix(ds, k, options));
    model.similarity.push_back(build_similarity_matrix(ds, k));
  }
  return model;
}

}  // namespace cityexpo
