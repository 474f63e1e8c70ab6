#include "cityexpo/pipeline.h"

#include <algorithm>
#include <cmath>

#include "cityexpo/errors.h"
#include "cityexpo/rng.h"

namespace cityexpo {

nlohmann::json to_json(const PipelineConfig& c) {
  return {
      {"seed", c.seed},
      {"cluster_threshold_km", c.cluster_threshold_km},
      {"error_distance_km", c.error_distance_km},
      {"min_support", c.indication.min_support},
      {"close_threshold_km", c.pfli.close_threshold_km},
      {"regulator_scale", c.pfli.regulator_scale},
      {"max_negative_ratio", c.pfli.max_negative_ratio},
      {"l2", c.pfli.logistic.l2},
      {"tolerance", c.pfli.logistic.tolerance},
      {"max_epochs", c.pfli.logistic.max_epochs},
  };
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig c) {
  try {
    if (!j.is_object()) throw ConfigError("pipeline config must be an object");
    auto get = [&](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end()) {
        field = it->get<std::remove_reference_t<decltype(field)>>();
      }
    };
    get("seed", c.seed);
    get("cluster_threshold_km", c.cluster_threshold_km);
    get("error_distance_km", c.error_distance_km);
    get("min_support", c.indication.min_support);
    get("close_threshold_km", c.pfli.close_threshold_km);
    get("regulator_scale", c.pfli.regulator_scale);
    get("max_negative_ratio", c.pfli.max_negative_ratio);
    get("l2", c.pfli.logistic.l2);
    get("tolerance", c.pfli.logistic.tolerance);
    get("max_epochs", c.pfli.logistic.max_epochs);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad pipeline config: ") + e.what());
  }
  if (!(c.cluster_threshold_km > 0.0)) throw ConfigError("cluster_threshold_km must be > 0");
  if (!(c.pfli.close_threshold_km >= 0.0)) throw ConfigError("close_threshold_km must be >= 0");
  if (c.pfli.logistic.l2 < 0.0) throw ConfigError("l2 must be >= 0");
  return c;
}

ClusterSet cluster_locations(std::span<const Location> locations, double threshold_km) {
  if (locations.empty()) {
    ClusterSet empty;
    empty.threshold_km = threshold_km;
    return empty;
  }
  return cut_tree(upgma_cluster(locations), threshold_km);
}

TrainedModel train_model(const SocialDataset& ds, const PipelineConfig& config,
                         std::optional<ClusterSet> clusters) {
  TrainedModel out;
  out.locations.assign(ds.locations().begin(), ds.locations().end());
  out.kinds = ds.kinds();
  out.indication = build_indication_model(ds, config.indication);
  PfliTrainingConfig pfli = config.pfli;
  pfli.seed = derive_seed(config.seed, 101);
  out.weights = fit_pfli(ds, out.indication, pfli, &out.warnings);
  out.clusters = clusters ? std::move(*clusters)
                          : cluster_locations(out.locations, config.cluster_threshold_km);
  return out;
}

EvalSplit split_la_users(const SocialDataset& ds, double eval_fraction, std::uint64_t seed) {
  if (eval_fraction < 0.0 || eval_fraction > 1.0) {
    throw ConfigError("eval fraction must be in [0, 1]");
  }
  std::vector<UserIndex> la = partition_users(ds).la;
  Rng rng(seed);
  rng.shuffle(la);
  const auto n_eval =
      static_cast<std::size_t>(std::llround(eval_fraction * static_cast<double>(la.size())));
  EvalSplit split;
  split.eval.assign(la.begin(), la.begin() + static_cast<std::ptrdiff_t>(n_eval));
  split.train.assign(la.begin() + static_cast<std::ptrdiff_t>(n_eval), la.end());
  std::sort(split.eval.begin(), split.eval.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<std::vector<UserIndex>> fold_la_users(const SocialDataset& ds, std::size_t folds,
                                                  std::uint64_t seed) {
  if (folds == 0) throw ConfigError("need at least one fold");
  std::vector<UserIndex> la = partition_users(ds).la;
  Rng rng(seed);
  rng.shuffle(la);
  std::vector<std::vector<UserIndex>> out(folds);
  for (std::size_t i = 0; i < la.size(); ++i) out[i % folds].push_back(la[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

}  // namespace cityexpo
