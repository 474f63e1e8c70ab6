#ifndef CITYEXPO_EXPOSURE_H_
#define CITYEXPO_EXPOSURE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cityexpo/forest.h"
#include "cityexpo/pipeline.h"
#include "cityexpo/profile.h"
#include "cityexpo/social_graph.h"

namespace cityexpo {

// Bitmask over the visible fields: HT = 1, WE = 2, F = 4. Zero is NoSignal.
enum class UserCategory : std::uint8_t {
  kNoSignal = 0,
  kHT = 1,
  kWE = 2,
  kHTWE = 3,
  kF = 4,
  kHTF = 5,
  kWEF = 6,
  kHTWEF = 7,
};

UserCategory user_category(const Visibility& v);
// "HT", "WE", "F", "HT+WE", "HT+F", "WE+F", "HT+WE+F", "NoSignal"
std::string_view to_string(UserCategory c);
UserCategory parse_user_category(std::string_view s);

// Share of the normalized mass inside `cluster`. Throws EmptyScores.
double cluster_confidence(const LocationScores& scores, const ClusterSet& clusters,
                          std::size_t cluster);

// Friends exposing at least one attribute over all friends; 0 when friendless.
double pct_friends_with_attrs(const SocialDataset& ds, UserIndex u);

struct ExposureFeatures {
  UserCategory category = UserCategory::kNoSignal;
  double cluster_confidence = 0.0;
  double pct_friends_with_attrs = 0.0;
  double error_distance_km = 0.0;
};

// The four feature groups the forest sees, in leave-one-out order.
enum class FeatureGroup { kCategory, kClusterConfidence, kPctFriendsAttrs, kErrorDistance };
inline constexpr std::array<FeatureGroup, 4> kFeatureGroups = {
    FeatureGroup::kCategory, FeatureGroup::kClusterConfidence, FeatureGroup::kPctFriendsAttrs,
    FeatureGroup::kErrorDistance};
std::string_view to_string(FeatureGroup g);

// Which groups get encoded. The category is one-hot over 8 columns
// (7 categories plus NoSignal); the others are one numeric column each.
struct FeatureMask {
  bool category = true;
  bool cluster_confidence = true;
  bool pct_friends_attrs = true;
  bool error_distance = true;

  static FeatureMask all() { return {}; }
  static FeatureMask without(FeatureGroup g);
  std::size_t width() const;
};

std::vector<double> encode(const ExposureFeatures& f, const FeatureMask& mask = {});

// Features plus the prediction they were derived from. A profile with no
// visible field is NoSignal and never reaches the predictor.
struct FeatureTrace {
  ExposureFeatures features;
  Prediction prediction;
};

FeatureTrace exposure_features(const Profile& profile, const TrainedModel& model, double k_km);

struct ExposureRow {
  std::string user;
  ExposureFeatures features;
  double outcome = 0.0;  // 1 iff error distance < K
};

struct ExposureDataset {
  std::vector<ExposureRow> rows;

  FeatureMatrix matrix(const FeatureMask& mask = {}) const;
  std::vector<double> outcomes() const;
  // Group id per row: rank of the row's user id. Cross-validation keeps a
  // user's rows (one per K) in one fold so users are never memorized.
  std::vector<std::size_t> groups() const;
};

// Error-distance horizon used to expand each held-out user into rows.
const std::vector<double>& default_exposure_k_grid();

// Rows for `held_out` users of `masked` (whose cities must be hidden there),
// scored against `truth`. NoSignal users produce no rows.
ExposureDataset build_exposure_dataset(const SocialDataset& masked, const TrainedModel& model,
                                       std::span<const UserIndex> held_out,
                                       const SocialDataset& truth,
                                       std::span<const double> k_grid,
                                       std::size_t threads = 0);

// Cross-fitted variant: LA-users are split into `folds` groups, and each group
// is masked and predicted by a model trained on the remaining LA-users. The
// location clustering is shared across folds.
ExposureDataset build_exposure_dataset(const SocialDataset& truth, const PipelineConfig& config,
                                       std::span<const double> k_grid, std::size_t folds = 5,
                                       std::size_t threads = 0);

struct ExposureForest {
  RegressionForest forest;
  ForestConfig config;
  CrossValidationReport cv;

  // Clipped to [0, 1].
  double predict(const ExposureFeatures& f) const;
};

// Throws DegenerateDataset when the dataset is empty, smaller than the fold
// count, or carries a single outcome.
ExposureForest train_exposure_forest(const ExposureDataset& data, const ForestConfig& config,
                                     std::size_t cv_folds = 10);

struct FeatureAblation {
  FeatureGroup dropped;
  RegressionMetrics metrics;
  double mae_delta = 0.0;   // vs the full model, positive means worse
  double rmse_delta = 0.0;
};

struct AblationTable {
  RegressionMetrics full;
  std::vector<FeatureAblation> rows;  // one per feature group
};

AblationTable leave_one_feature_out(const ExposureDataset& data, const ForestConfig& config,
                                    std::size_t folds = 10);
nlohmann::ordered_json to_json(const AblationTable& t);

// 1..5. Throws OutOfRange outside [0, 1].
int risk_level(double probability);

struct WhatIfEntry {
  std::vector<VisibleField> hidden;
  double probability = 0.0;
  int risk_level = 1;
};

struct ExposureReport {
  ExposureFeatures features;
  double probability = 0.0;
  int risk_level = 1;
  std::vector<WhatIfEntry> what_if;
};

ExposureReport estimate_exposure(const Profile& profile, const TrainedModel& model,
                                 const ExposureForest& forest, double k_km);

// One entry per non-empty subset of the currently visible fields, sorted by
// ascending probability (ties keep subset enumeration order).
std::vector<WhatIfEntry> what_if(const Profile& profile, const TrainedModel& model,
                                 const ExposureForest& forest, double k_km);

nlohmann::ordered_json to_json(const WhatIfEntry& e);
nlohmann::ordered_json to_json(const ExposureReport& r);

}  // namespace cityexpo

#endif  // CITYEXPO_EXPOSURE_H_
