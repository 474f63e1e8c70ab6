#ifndef CITYEXPO_BUNDLE_H_
#define CITYEXPO_BUNDLE_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cityexpo/exposure.h"
#include "cityexpo/pipeline.h"

namespace cityexpo {

inline constexpr int kBundleFormatVersion = 1;

// Everything `predict`, `estimate` and the service need: the location list,
// indication and similarity matrices, PFLI weights, clustering and the
// exposure forest. `id` is a content hash of the serialized bundle.
struct ModelBundle {
  PipelineConfig config;
  TrainedModel model;
  ExposureForest exposure;
  std::vector<double> exposure_k_grid;
  std::string id;
};

struct BundleOptions {
  ForestConfig forest;
  std::vector<double> k_grid = default_exposure_k_grid();
  std::size_t exposure_folds = 5;  // cross-fitting folds for exposure rows
  std::size_t cv_folds = 10;
};

// Trains the PFLI model on every LA-user and the exposure forest on
// cross-fitted rows. The forest seed derives from config.seed unless set.
ModelBundle train_bundle(const SocialDataset& ds, const PipelineConfig& config,
                         const BundleOptions& options = {});

nlohmann::ordered_json to_json(const ModelBundle& b);
// Throws BundleError, also when bundle_id does not match the contents.
ModelBundle bundle_from_json(const nlohmann::json& j);

void save_bundle(const ModelBundle& b, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace cityexpo

#endif  // CITYEXPO_BUNDLE_H_
