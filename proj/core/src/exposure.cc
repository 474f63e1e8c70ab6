#include "cityexpo/exposure.h"

#include <algorithm>
#include <cmath>

#include "cityexpo/errors.h"
#include "cityexpo/eval.h"
#include "cityexpo/parallel.h"
#include "cityexpo/rng.h"

namespace cityexpo {
namespace {

constexpr std::size_t kCategoryColumns = 8;

std::uint8_t bits(UserCategory c) { return static_cast<std::uint8_t>(c); }

struct UserSignal {
  UserCategory category;
  double pct_friends;
};

UserSignal signal_of(const Profile& p) {
  return {user_category(p.visibility()), p.pct_friends_with_attrs()};
}

// Features and prediction for one K, given scores already computed.
FeatureTrace trace_from_scores(const UserSignal& s, const LocationScores& scores,
                               const Predictor& predictor, double k_km) {
  FeatureTrace t;
  t.features.category = s.category;
  t.features.pct_friends_with_attrs = s.pct_friends;
  t.features.error_distance_km = k_km;
  t.prediction = predictor.from_scores(scores, combined_selector(k_km));
  t.features.cluster_confidence = t.prediction.abstained ? 0.0 : t.prediction.cluster_confidence;
  return t;
}

void append_rows(const SocialDataset& masked, const Predictor& predictor, UserIndex u,
                 const Location& truth, std::span<const double> k_grid,
                 std::vector<ExposureRow>& out) {
  const Profile profile = profile_of(masked, u);
  const UserSignal s = signal_of(profile);
  if (s.category == UserCategory::kNoSignal) return;
  const LocationScores scores = predictor.scores(make_user_view(masked, u));
  for (double k : k_grid) {
    FeatureTrace t = trace_from_scores(s, scores, predictor, k);
    ExposureRow row;
    row.user = masked.user(u).id;
    row.features = t.features;
    row.outcome = !t.prediction.abstained && error_distance(t.prediction, truth) < k ? 1.0 : 0.0;
    out.push_back(std::move(row));
  }
}

}  // namespace

UserCategory user_category(const Visibility& v) {
  std::uint8_t b = 0;
  if (v.hometown) b |= 1;
  if (v.work_education) b |= 2;
  if (v.friends) b |= 4;
  return static_cast<UserCategory>(b);
}

std::string_view to_string(UserCategory c) {
  switch (c) {
    case UserCategory::kNoSignal:
      return "NoSignal";
    case UserCategory::kHT:
      return "HT";
    case UserCategory::kWE:
      return "WE";
    case UserCategory::kHTWE:
      return "HT+WE";
    case UserCategory::kF:
      return "F";
    case UserCategory::kHTF:
      return "HT+F";
    case UserCategory::kWEF:
      return "WE+F";
    case UserCategory::kHTWEF:
      return "HT+WE+F";
  }
  return "NoSignal";
}

UserCategory parse_user_category(std::string_view s) {
  for (std::uint8_t b = 0; b < kCategoryColumns; ++b) {
    auto c = static_cast<UserCategory>(b);
    if (to_string(c) == s) return c;
  }
  throw ValidationError("unknown user category '" + std::string(s) + "'");
}

double cluster_confidence(const LocationScores& scores, const ClusterSet& clusters,
                          std::size_t cluster) {
  if (scores.empty()) throw EmptyScores();
  if (cluster >= clusters.clusters.size()) throw OutOfRange("cluster index out of range");
  const double total = scores.total();
  double in = 0.0;
  for (const auto& [l, p] : scores.scores) {
    if (clusters.cluster_of.at(l) == cluster) in += p;
  }
  return std::clamp(in / total, 0.0, 1.0);
}

double pct_friends_with_attrs(const SocialDataset& ds, UserIndex u) {
  const auto& friends = ds.user(u).friends;
  if (friends.empty()) return 0.0;
  std::size_t with = 0;
  for (UserIndex v : friends) {
    const auto& attrs = ds.user(v).attrs;
    if (std::any_of(attrs.begin(), attrs.end(), [](const Token& t) { return t.has_value(); })) {
      ++with;
    }
  }
  return static_cast<double>(with) / static_cast<double>(friends.size());
}

std::string_view to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::kCategory:
      return "user_category";
    case FeatureGroup::kClusterConfidence:
      return "cluster_confidence";
    case FeatureGroup::kPctFriendsAttrs:
      return "pct_friends_attrs";
    case FeatureGroup::kErrorDistance:
      return "error_distance";
  }
  return "?";
}

FeatureMask FeatureMask::without(FeatureGroup g) {
  FeatureMask m;
  switch (g) {
    case FeatureGroup::kCategory:
      m.category = false;
      break;
    case FeatureGroup::kClusterConfidence:
      m.cluster_confidence = false;
      break;
    case FeatureGroup::kPctFriendsAttrs:
      m.pct_friends_attrs = false;
      break;
    case FeatureGroup::kErrorDistance:
      m.error_distance = false;
      break;
  }
  return m;
}

std::size_t FeatureMask::width() const {
  return (category ? kCategoryColumns : 0) + cluster_confidence + pct_friends_attrs +
         error_distance;
}

std::vector<double> encode(const ExposureFeatures& f, const FeatureMask& mask) {
  std::vector<double> x;
  x.reserve(mask.width());
  if (mask.category) {
    for (std::uint8_t b = 0; b < kCategoryColumns; ++b) x.push_back(bits(f.category) == b ? 1 : 0);
  }
  if (mask.cluster_confidence) x.push_back(f.cluster_confidence);
  if (mask.pct_friends_attrs) x.push_back(f.pct_friends_with_attrs);
  if (mask.error_distance) x.push_back(f.error_distance_km);
  return x;
}

FeatureTrace exposure_features(const Profile& profile, const TrainedModel& model, double k_km) {
  const UserSignal s = signal_of(profile);
  const Predictor predictor = model.predictor();
  if (s.category == UserCategory::kNoSignal) {
    return trace_from_scores(s, LocationScores{}, predictor, k_km);
  }
  const ResolvedProfile resolved(profile, model.locations);
  return trace_from_scores(s, predictor.scores(resolved.view()), predictor, k_km);
}

FeatureMatrix ExposureDataset::matrix(const FeatureMask& mask) const {
  FeatureMatrix x(0, mask.width());
  for (const auto& r : rows) x.push_row(encode(r.features, mask));
  return x;
}

std::vector<double> ExposureDataset::outcomes() const {
  std::vector<double> y;
  y.reserve(rows.size());
  for (const auto& r : rows) y.push_back(r.outcome);
  return y;
}

std::vector<std::size_t> ExposureDataset::groups() const {
  std::vector<std::string_view> ids;
  for (const auto& r : rows) ids.push_back(r.user);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<std::size_t> g;
  g.reserve(rows.size());
  for (const auto& r : rows) {
    g.push_back(static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), std::string_view(r.user)) - ids.begin()));
  }
  return g;
}

const std::vector<double>& default_exposure_k_grid() {
  static const std::vector<double> grid = {20, 40, 60, 80, 100};
  return grid;
}

ExposureDataset build_exposure_dataset(const SocialDataset& masked, const TrainedModel& model,
                                       std::span<const UserIndex> held_out,
                                       const SocialDataset& truth,
                                       std::span<const double> k_grid, std::size_t threads) {
  const Predictor predictor = model.predictor();
  std::vector<std::vector<ExposureRow>> per_user(held_out.size());
  parallel_for(
      held_out.size(),
      [&](std::size_t i) {
        const UserIndex u = held_out[i];
        if (masked.is_la(u)) throw ValidationError("held-out user " + masked.user(u).id + " is not masked");
        const auto& city = truth.user(u).current_city;
        if (!city) throw ValidationError("held-out user " + truth.user(u).id + " has no true city");
        append_rows(masked, predictor, u, truth.location(*city), k_grid, per_user[i]);
      },
      threads);
  ExposureDataset out;
  for (auto& rows : per_user) {
    for (auto& r : rows) out.rows.push_back(std::move(r));
  }
  return out;
}

ExposureDataset build_exposure_dataset(const SocialDataset& truth, const PipelineConfig& config,
                                       std::span<const double> k_grid, std::size_t folds,
                                       std::size_t threads) {
  const ClusterSet clusters = cluster_locations(truth.locations(), config.cluster_threshold_km);
  const auto groups = fold_la_users(truth, folds, derive_seed(config.seed, 11));
  ExposureDataset out;
  for (const auto& held_out : groups) {
    if (held_out.empty()) continue;
    const SocialDataset masked = truth.with_hidden_cities(held_out);
    const TrainedModel model = train_model(masked, config, clusters);
    ExposureDataset part = build_exposure_dataset(masked, model, held_out, truth, k_grid, threads);
    for (auto& r : part.rows) out.rows.push_back(std::move(r));
  }
  return out;
}

double ExposureForest::predict(const ExposureFeatures& f) const {
  return std::clamp(forest.predict(encode(f)), 0.0, 1.0);
}

ExposureForest train_exposure_forest(const ExposureDataset& data, const ForestConfig& config,
                                     std::size_t cv_folds) {
  if (data.rows.size() < std::max<std::size_t>(cv_folds, 2)) {
    throw DegenerateDataset("exposure dataset has too few rows");
  }
  const std::vector<double> y = data.outcomes();
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
    throw DegenerateDataset("exposure dataset has a single outcome");
  }
  const FeatureMatrix x = data.matrix();
  ExposureForest out;
  out.config = config;
  out.forest = train_forest(x, y, config);
  out.cv = cross_validate(x, y, config, cv_folds, data.groups());
  return out;
}

AblationTable leave_one_feature_out(const ExposureDataset& data, const ForestConfig& config,
                                    std::size_t folds) {
  if (data.rows.empty()) throw DegenerateDataset("exposure dataset is empty");
  const std::vector<double> y = data.outcomes();
  const std::vector<std::size_t> groups = data.groups();
  AblationTable t;
  t.full = cross_validate(data.matrix(), y, config, folds, groups).forest;
  for (FeatureGroup g : kFeatureGroups) {
    FeatureAblation row;
    row.dropped = g;
    row.metrics = cross_validate(data.matrix(FeatureMask::without(g)), y, config, folds, groups).forest;
    row.mae_delta = row.metrics.mae - t.full.mae;
    row.rmse_delta = row.metrics.rmse - t.full.rmse;
    t.rows.push_back(row);
  }
  return t;
}

nlohmann::ordered_json to_json(const AblationTable& t) {
  nlohmann::ordered_json j;
  j["full"] = {{"mae", t.full.mae}, {"rmse", t.full.rmse}};
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"dropped", to_string(r.dropped)},
                    {"mae", r.metrics.mae},
                    {"rmse", r.metrics.rmse},
                    {"mae_delta", r.mae_delta},
                    {"rmse_delta", r.rmse_delta}});
  }
  j["rows"] = std::move(rows);
  return j;
}

int risk_level(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw OutOfRange("exposure probability must be in [0, 1]");
  if (p >= 0.9) return 5;
  if (p >= 0.75) return 4;
  if (p >= 0.5) return 3;
  if (p >= 0.25) return 2;
  return 1;
}

namespace {

// Probability only; the what-if table is left empty.
ExposureReport estimate_core(const Profile& profile, const TrainedModel& model,
                             const ExposureForest& forest, double k_km) {
  ExposureReport r;
  r.features = exposure_features(profile, model, k_km).features;
  // Nothing visible means no inference channel, so the forest is bypassed.
  r.probability = r.features.category == UserCategory::kNoSignal ? 0.0 : forest.predict(r.features);
  r.risk_level = risk_level(r.probability);
  return r;
}

}  // namespace

ExposureReport estimate_exposure(const Profile& profile, const TrainedModel& model,
                                 const ExposureForest& forest, double k_km) {
  if (!(k_km > 0.0) || !std::isfinite(k_km)) throw OutOfRange("K must be a positive distance");
  return estimate_core(profile, model, forest, k_km);
}

std::vector<WhatIfEntry> what_if(const Profile& profile, const TrainedModel& model,
                                 const ExposureForest& forest, double k_km) {
  if (!(k_km > 0.0) || !std::isfinite(k_km)) throw OutOfRange("K must be a positive distance");
  const Visibility vis = profile.visibility();
  std::vector<VisibleField> visible;
  for (VisibleField f : kAllVisibleFields) {
    if (vis.visible(f)) visible.push_back(f);
  }
  std::vector<WhatIfEntry> out;
  const unsigned subsets = 1u << visible.size();
  for (unsigned mask = 1; mask < subsets; ++mask) {
    WhatIfEntry e;
    Profile hidden = profile;
    for (std::size_t i = 0; i < visible.size(); ++i) {
      if (mask & (1u << i)) {
        e.hidden.push_back(visible[i]);
        hidden = hidden.with_hidden(visible[i]);
      }
    }
    const ExposureReport r = estimate_core(hidden, model, forest, k_km);
    e.probability = r.probability;
    e.risk_level = r.risk_level;
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const WhatIfEntry& a, const WhatIfEntry& b) {
    return a.probability < b.probability;
  });
  return out;
}

nlohmann::ordered_json to_json(const WhatIfEntry& e) {
  nlohmann::ordered_json hide = nlohmann::ordered_json::array();
  for (VisibleField f : e.hidden) hide.push_back(to_string(f));
  return {{"hide", std::move(hide)}, {"probability", e.probability}, {"risk_level", e.risk_level}};
}

nlohmann::ordered_json to_json(const ExposureReport& r) {
  nlohmann::ordered_json what = nlohmann::ordered_json::array();
  for (const auto& e : r.what_if) what.push_back(to_json(e));
  return {{"category", to_string(r.features.category)},
          {"confidence", r.features.cluster_confidence},
          {"pct_friends_attrs", r.features.pct_friends_with_attrs},
          {"K", r.features.error_distance_km},
          {"probability", r.probability},
          {"risk_level", r.risk_level},
          {"what_if", std::move(what)}};
}

}  // namespace cityexpo
