#include "cityexpo/bundle.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cityexpo/errors.h"
#include "cityexpo/rng.h"

namespace cityexpo {
namespace {

using ojson = nlohmann::ordered_json;

ojson token_json(const Token& t) { return t ? ojson(*t) : ojson(nullptr); }

Token token_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ojson forest_config_json(const ForestConfig& c) {
  ojson j = {{"trees", c.trees},
             {"max_depth", c.max_depth},
             {"min_samples_leaf", c.min_samples_leaf},
             {"seed", c.seed}};
  j["features_per_split"] = c.features_per_split ? ojson(*c.features_per_split) : ojson(nullptr);
  return j;
}

ojson metrics_json(const RegressionMetrics& m) { return {{"mae", m.mae}, {"rmse", m.rmse}}; }

RegressionMetrics metrics_from(const nlohmann::json& j) {
  return {j.at("mae").get<double>(), j.at("rmse").get<double>()};
}

// The serialized body, without the id.
ojson body_json(const ModelBundle& b) {
  const TrainedModel& m = b.model;
  ojson j;
  j["format_version"] = kBundleFormatVersion;
  j["config"] = to_json(b.config);
  j["kinds"] = m.kinds;
  ojson locs = ojson::array();
  for (const auto& l : m.locations) locs.push_back({{"id", l.id}, {"lat", l.lat}, {"lon", l.lon}});
  j["locations"] = std::move(locs);

  ojson ind = ojson::array();
  for (const auto& mat : m.indication.indication) {
    ojson cols = ojson::object();
    for (const auto& [token, col] : mat.columns) {
      ojson probs = ojson::array();
      for (const auto& [l, p] : col.probs) probs.push_back({l, p});
      cols[token] = {{"support", col.support}, {"probs", std::move(probs)}};
    }
    ind.push_back({{"kind", mat.kind}, {"columns", std::move(cols)}});
  }
  j["indication"] = std::move(ind);

  ojson sim = ojson::array();
  for (const auto& mat : m.indication.similarity) {
    ojson cells = ojson::array();
    for (const auto& [key, pc] : mat.cells) {
      cells.push_back({token_json(key.first), token_json(key.second), pc.colocated, pc.total});
    }
    sim.push_back({{"kind", mat.kind},
                   {"global", {mat.global.colocated, mat.global.total}},
                   {"cells", std::move(cells)}});
  }
  j["similarity"] = std::move(sim);

  j["weights"] = {{"mu", m.weights.mu},
                  {"nu", m.weights.nu},
                  {"alpha", m.weights.alpha},
                  {"lambda_alpha", m.weights.lambda_alpha},
                  {"bias", m.weights.bias},
                  {"alpha_bias", m.weights.alpha_bias}};
  j["clusters"] = to_json(m.clusters);
  j["warnings"] = m.warnings;

  ojson ex;
  ex["config"] = forest_config_json(b.exposure.config);
  ex["k_grid"] = b.exposure_k_grid;
  ex["cv"] = {{"folds", b.exposure.cv.folds},
              {"forest", metrics_json(b.exposure.cv.forest)},
              {"mean_baseline", metrics_json(b.exposure.cv.mean_baseline)},
              {"linear", metrics_json(b.exposure.cv.linear)}};
  ex["forest"] = to_json(b.exposure.forest);
  j["exposure"] = std::move(ex);
  return j;
}

}  // namespace

ModelBundle train_bundle(const SocialDataset& ds, const PipelineConfig& config,
                         const BundleOptions& options) {
  ModelBundle b;
  b.config = config;
  b.model = train_model(ds, config);
  b.exposure_k_grid = options.k_grid;
  ForestConfig forest = options.forest;
  if (forest.seed == 0) forest.seed = derive_seed(config.seed, 202);
  const ExposureDataset rows = build_exposure_dataset(ds, config, options.k_grid,
                                                      options.exposure_folds, forest.threads);
  b.exposure = train_exposure_forest(rows, forest, options.cv_folds);
  b.id = fnv1a_hex(body_json(b).dump());
  return b;
}

nlohmann::ordered_json to_json(const ModelBundle& b) {
  ojson body = body_json(b);
  ojson j;
  j["format_version"] = kBundleFormatVersion;
  j["bundle_id"] = b.id;
  for (auto& [key, value] : body.items()) {
    if (key != "format_version") j[key] = value;
  }
  return j;
}

ModelBundle bundle_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw BundleError("bundle must be a JSON object");
    const int version = j.at("format_version").get<int>();
    if (version != kBundleFormatVersion) {
      throw BundleError("unsupported bundle format_version " + std::to_string(version));
    }
    ModelBundle b;
    b.id = j.at("bundle_id").get<std::string>();
    b.config = pipeline_config_from_json(j.at("config"));
    TrainedModel& m = b.model;
    m.kinds = j.at("kinds").get<std::vector<std::string>>();
    for (const auto& l : j.at("locations")) {
      m.locations.push_back({l.at("id").get<std::string>(), l.at("lat").get<double>(),
                             l.at("lon").get<double>()});
    }
    const std::size_t nl = m.locations.size();
    for (std::size_t i = 1; i < nl; ++i) {
      if (!(m.locations[i - 1].id < m.locations[i].id)) {
        throw BundleError("bundle locations must be sorted by id and unique");
      }
    }
    m.indication.num_locations = nl;
    for (const auto& jm : j.at("indication")) {
      IndicationMatrix mat;
      mat.kind = jm.at("kind").get<std::size_t>();
      for (const auto& [token, jc] : jm.at("columns").items()) {
        IndicationColumn col;
        col.support = jc.at("support").get<std::size_t>();
        col.low_support = col.support < 2;
        for (const auto& e : jc.at("probs")) {
          const auto l = e.at(0).get<LocationIndex>();
          if (l >= nl) throw BundleError("indication entry names an unknown location");
          col.probs.emplace_back(l, e.at(1).get<double>());
        }
        mat.columns.emplace(token, std::move(col));
      }
      m.indication.indication.push_back(std::move(mat));
    }
    for (const auto& jm : j.at("similarity")) {
      SimilarityMatrix mat;
      mat.kind = jm.at("kind").get<std::size_t>();
      mat.global = {jm.at("global").at(0).get<std::uint64_t>(),
                    jm.at("global").at(1).get<std::uint64_t>()};
      for (const auto& c : jm.at("cells")) {
        mat.cells[{token_from(c.at(0)), token_from(c.at(1))}] = {c.at(2).get<std::uint64_t>(),
                                                                  c.at(3).get<std::uint64_t>()};
      }
      m.indication.similarity.push_back(std::move(mat));
    }
    if (m.indication.indication.size() != m.kinds.size() ||
        m.indication.similarity.size() != m.kinds.size()) {
      throw BundleError("bundle matrices do not match its kinds");
    }
    const auto& w = j.at("weights");
    m.weights.mu = w.at("mu").get<std::vector<double>>();
    m.weights.nu = w.at("nu").get<std::vector<double>>();
    m.weights.alpha = w.at("alpha").get<std::vector<double>>();
    m.weights.lambda_alpha = w.at("lambda_alpha").get<double>();
    m.weights.bias = w.at("bias").get<double>();
    m.weights.alpha_bias = w.at("alpha_bias").get<double>();
    if (m.weights.mu.size() != m.kinds.size() || m.weights.nu.size() != m.kinds.size() ||
        m.weights.alpha.size() != m.kinds.size()) {
      throw BundleError("bundle weights do not match its kinds");
    }
    m.clusters = cluster_set_from_json(j.at("clusters"), m.locations);
    m.warnings = j.value("warnings", std::vector<std::string>{});

    const auto& ex = j.at("exposure");
    const auto& fc = ex.at("config");
    b.exposure.config.trees = fc.at("trees").get<std::size_t>();
    b.exposure.config.max_depth = fc.at("max_depth").get<std::size_t>();
    b.exposure.config.min_samples_leaf = fc.at("min_samples_leaf").get<std::size_t>();
    b.exposure.config.seed = fc.at("seed").get<std::uint64_t>();
    if (!fc.at("features_per_split").is_null()) {
      b.exposure.config.features_per_split = fc.at("features_per_split").get<std::size_t>();
    }
    b.exposure_k_grid = ex.at("k_grid").get<std::vector<double>>();
    const auto& cv = ex.at("cv");
    b.exposure.cv.folds = cv.at("folds").get<std::size_t>();
    b.exposure.cv.forest = metrics_from(cv.at("forest"));
    b.exposure.cv.mean_baseline = metrics_from(cv.at("mean_baseline"));
    b.exposure.cv.linear = metrics_from(cv.at("linear"));
    b.exposure.forest = forest_from_json(ex.at("forest"));
    if (b.exposure.forest.num_features() != FeatureMask::all().width()) {
      throw BundleError("exposure forest has the wrong feature count");
    }
    if (fnv1a_hex(body_json(b).dump()) != b.id) {
      throw BundleError("bundle_id does not match the bundle contents");
    }
    return b;
  } catch (const BundleError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(std::string("malformed bundle: ") + e.what());
  } catch (const DataError& e) {
    throw BundleError(std::string("malformed bundle: ") + e.what());
  }
}

void save_bundle(const ModelBundle& b, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BundleError("cannot write bundle " + path.string());
  out << to_json(b).dump(1) << '\n';
  if (!out) throw BundleError("failed writing bundle " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BundleError("cannot read bundle " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(std::string("bundle is not valid JSON: ") + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace cityexpo
