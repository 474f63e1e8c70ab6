#include "cityexpo/app/cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cityexpo/app/service.h"
#include "cityexpo/bundle.h"
#include "cityexpo/errors.h"
#include "cityexpo/eval.h"
#include "cityexpo/synth.h"

namespace cityexpo::app {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold_km;
  std::optional<double> error_distance_km;
  std::string config_path;
  std::string format = "json";
};

// Defaults, then the --config file, then flags.
struct Settings {
  PipelineConfig pipeline;
  ForestConfig forest;
  BundleOptions bundle;
  std::optional<nlohmann::json> world;  // applied over the chosen preset
  double eval_fraction = 0.2;
  std::size_t knn_k = kDefaultKnn;
};

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + " is not valid JSON: " + e.what());
  }
}

ForestConfig forest_config_from_json(const nlohmann::json& j, ForestConfig c) {
  try {
    if (!j.is_object()) throw ConfigError("forest config must be an object");
    if (auto it = j.find("trees"); it != j.end()) c.trees = it->get<std::size_t>();
    if (auto it = j.find("max_depth"); it != j.end()) c.max_depth = it->get<std::size_t>();
    if (auto it = j.find("min_samples_leaf"); it != j.end()) {
      c.min_samples_leaf = it->get<std::size_t>();
    }
    if (auto it = j.find("features_per_split"); it != j.end() && !it->is_null()) {
      c.features_per_split = it->get<std::size_t>();
    }
    if (auto it = j.find("seed"); it != j.end()) c.seed = it->get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad forest config: ") + e.what());
  }
  if (c.trees == 0) throw ConfigError("forest needs at least one tree");
  return c;
}

Settings load_settings(const GlobalFlags& g) {
  Settings s;
  if (!g.config_path.empty()) {
    const nlohmann::json j = read_json_file(g.config_path);
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    try {
      if (auto it = j.find("pipeline"); it != j.end()) {
        s.pipeline = pipeline_config_from_json(*it, s.pipeline);
      }
      if (auto it = j.find("forest"); it != j.end()) {
        s.forest = forest_config_from_json(*it, s.forest);
      }
      if (auto it = j.find("world"); it != j.end()) s.world = *it;
      if (auto it = j.find("exposure"); it != j.end()) {
        if (auto k = it->find("k_grid"); k != it->end()) {
          s.bundle.k_grid = k->get<std::vector<double>>();
        }
        if (auto f = it->find("folds"); f != it->end()) {
          s.bundle.exposure_folds = f->get<std::size_t>();
        }
        if (auto f = it->find("cv_folds"); f != it->end()) s.bundle.cv_folds = f->get<std::size_t>();
      }
      if (auto it = j.find("benchmark"); it != j.end()) {
        s.eval_fraction = it->value("eval_fraction", s.eval_fraction);
        s.knn_k = it->value("knn_k", s.knn_k);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad config file: ") + e.what());
    }
  }
  if (g.seed) s.pipeline.seed = *g.seed;
  if (g.threshold_km) s.pipeline.cluster_threshold_km = *g.threshold_km;
  if (g.error_distance_km) s.pipeline.error_distance_km = *g.error_distance_km;
  if (!(s.pipeline.cluster_threshold_km > 0.0)) throw ConfigError("--threshold-km must be > 0");
  if (!(s.pipeline.error_distance_km > 0.0)) throw ConfigError("--error-distance-km must be > 0");
  if (s.bundle.k_grid.empty()) throw ConfigError("exposure k_grid must not be empty");
  for (double k : s.bundle.k_grid) {
    if (!(k > 0.0)) throw ConfigError("exposure k_grid entries must be > 0");
  }
  s.bundle.forest = s.forest;
  return s;
}

DatasetFormat resolve_format(const std::string& name, const std::string& path) {
  if (name == "auto") return fs::is_directory(path) ? DatasetFormat::kCsvBundle : DatasetFormat::kJsonl;
  return parse_dataset_format(name);
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f << text;
}

std::string json_text(const ojson& j) { return j.dump(2) + "\n"; }

std::size_t edge_count(const SocialDataset& ds) {
  std::size_t twice = 0;
  for (const auto& u : ds.users()) twice += u.friends.size();
  return twice / 2;
}

// --- subcommands -----------------------------------------------------------

struct GenerateArgs {
  std::string out;
  std::string truth_out;
  std::string format = "jsonl";
  std::string preset = "ci";
  std::optional<std::size_t> users, cities, orgs;
};

int cmd_generate(const GenerateArgs& a, const GlobalFlags& g, std::ostream& out) {
  const Settings s = load_settings(g);
  WorldConfig wc = world_preset(a.preset);
  if (s.world) wc = world_config_from_json(*s.world, wc);
  if (g.seed) wc.seed = *g.seed;
  if (a.users) wc.n_users = *a.users;
  if (a.cities) wc.n_cities = *a.cities;
  if (a.orgs) wc.n_orgs = *a.orgs;
  const World w = generate_world(wc);
  const DatasetFormat fmt = parse_dataset_format(a.format);
  save_dataset(w.masked, a.out, fmt);
  if (!a.truth_out.empty()) save_dataset(w.truth, a.truth_out, fmt);

  const auto parts = partition_users(w.masked);
  if (g.format == "text") {
    out << "users " << w.masked.num_users() << "\nlocations " << w.masked.num_locations()
        << "\nla_users " << parts.la.size() << "\nedges " << edge_count(w.masked) << "\n";
  } else {
    out << json_text({{"world", to_json(wc)},
                      {"users", w.masked.num_users()},
                      {"locations", w.masked.num_locations()},
                      {"la_users", parts.la.size()},
                      {"edges", edge_count(w.masked)},
                      {"truth_edges", edge_count(w.truth)}});
  }
  return kOk;
}

struct DataArgs {
  std::string data;
  std::string data_format = "auto";
};

SocialDataset load_data(const DataArgs& a) {
  return load_dataset(a.data, resolve_format(a.data_format, a.data));
}

struct TrainArgs {
  DataArgs data;
  std::string bundle;
};

int cmd_train(const TrainArgs& a, const GlobalFlags& g, std::ostream& out) {
  const Settings s = load_settings(g);
  const SocialDataset ds = load_data(a.data);
  const ModelBundle b = train_bundle(ds, s.pipeline, s.bundle);
  save_bundle(b, a.bundle);

  const auto& w = b.model.weights;
  const auto& cv = b.exposure.cv;
  if (g.format == "text") {
    out << "bundle " << b.id << "\nlocations " << b.model.locations.size() << "\nclusters "
        << b.model.clusters.clusters.size() << "\nexposure_cv_mae forest " << cv.forest.mae
        << " mean " << cv.mean_baseline.mae << " linear " << cv.linear.mae << "\n";
    for (const auto& warning : b.model.warnings) out << "warning " << warning << "\n";
  } else {
    out << json_text({{"bundle", bundle_stamp(b)},
                      {"locations", b.model.locations.size()},
                      {"clusters", b.model.clusters.clusters.size()},
                      {"weights",
                       {{"mu", w.mu}, {"nu", w.nu}, {"alpha", w.alpha},
                        {"lambda_alpha", w.lambda_alpha}}},
                      {"exposure_cv",
                       {{"folds", cv.folds},
                        {"forest", {{"mae", cv.forest.mae}, {"rmse", cv.forest.rmse}}},
                        {"mean_baseline",
                         {{"mae", cv.mean_baseline.mae}, {"rmse", cv.mean_baseline.rmse}}},
                        {"linear", {{"mae", cv.linear.mae}, {"rmse", cv.linear.rmse}}}}},
                      {"warnings", b.model.warnings}});
  }
  return kOk;
}

struct PredictArgs {
  DataArgs data;
  std::string bundle;
  std::string out;
  bool all = false;
};

int cmd_predict(const PredictArgs& a, const GlobalFlags& g, std::ostream& out) {
  const ModelBundle b = load_bundle(a.bundle);
  const SocialDataset ds = load_data(a.data);
  if (ds.locations().size() != b.model.locations.size() ||
      !std::equal(ds.locations().begin(), ds.locations().end(), b.model.locations.begin())) {
    throw ValidationError("dataset locations do not match the bundle's");
  }
  if (ds.kinds() != b.model.kinds) throw ValidationError("dataset kinds do not match the bundle's");
  const double k = g.error_distance_km.value_or(b.config.error_distance_km);
  const Predictor predictor = b.model.predictor();
  std::ostringstream text;
  for (UserIndex u = 0; u < ds.num_users(); ++u) {
    if (!a.all && ds.is_la(u)) continue;
    const Prediction p = predictor.predict(make_user_view(ds, u), k, ds.user(u).id);
    if (g.format == "text") {
      text << p.user << '\t';
      if (p.coordinate) {
        text << p.coordinate->lat << '\t' << p.coordinate->lon;
      } else {
        text << "-\t-";
      }
      text << '\t' << p.cluster_confidence << '\n';
    } else {
      text << to_json(p).dump() << '\n';
    }
  }
  write_output(a.out, text.str(), out);
  return kOk;
}

struct EvaluateArgs {
  DataArgs data;
  std::string out;
  std::string curves;
  std::optional<double> eval_fraction;
};

int cmd_evaluate(const EvaluateArgs& a, const GlobalFlags& g, std::ostream& out) {
  const Settings s = load_settings(g);
  const SocialDataset ds = load_data(a.data);
  BenchmarkConfig bc;
  bc.pipeline = s.pipeline;
  bc.eval_fraction = a.eval_fraction.value_or(s.eval_fraction);
  bc.knn_k = s.knn_k;
  const BenchmarkReport report = run_benchmark(ds, bc);
  write_output(a.out, g.format == "text" ? to_text(report) : json_text(to_json(report)), out);
  if (!a.curves.empty()) write_output(a.curves, acc_curves_csv(report), out);
  return kOk;
}

struct EstimateArgs {
  std::string bundle;
  std::string profile;
  std::optional<double> k;
  bool what_if = false;
};

int cmd_estimate(const EstimateArgs& a, const GlobalFlags& g, std::ostream& out) {
  const ModelBundle b = load_bundle(a.bundle);
  nlohmann::json j;
  try {
    if (a.profile == "-") {
      j = nlohmann::json::parse(std::cin);
    } else {
      std::ifstream in(a.profile);
      if (!in) throw ValidationError("cannot open " + a.profile);
      j = nlohmann::json::parse(in);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("profile is not valid JSON: ") + e.what());
  }
  // Accept either a bare profile or an API-style {"profile": ..., "K": ...}.
  std::optional<double> body_k;
  if (j.is_object() && j.contains("profile")) {
    if (auto it = j.find("K"); it != j.end() && it->is_number()) body_k = it->get<double>();
    j = j.at("profile");
  }
  const Profile profile = profile_from_json(j, b.model.kinds);
  const double k = a.k ? *a.k : body_k ? *body_k : g.error_distance_km.value_or(b.config.error_distance_km);
  if (!(k > 0.0) || k > kMaxApiKm) throw OutOfRange("K must be in (0, 1000] km");
  const ojson report = exposure_report_json(b, profile, k, a.what_if);
  if (g.format == "text") {
    out << "category " << report["category"].get<std::string>() << "\nconfidence "
        << report["confidence"].get<double>() << "\npct_friends_attrs "
        << report["pct_friends_attrs"].get<double>() << "\nK " << k << "\nprobability "
        << report["probability"].get<double>() << "\nrisk_level "
        << report["risk_level"].get<int>() << "\n";
    for (const auto& e : report["what_if"]) {
      std::string hide;
      for (const auto& h : e["hide"]) hide += (hide.empty() ? "" : "+") + h.get<std::string>();
      out << "what_if hide=" << hide << " probability " << e["probability"].get<double>()
          << " level " << e["risk_level"].get<int>() << "\n";
    }
  } else {
    out << json_text(report);
  }
  return kOk;
}

struct ServeArgs {
  std::string bundle;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<ModelBundle> bundle;
  if (!a.bundle.empty()) bundle = load_bundle(a.bundle);
  const Service service(std::move(bundle), a.cors_origin);
  out << "listening on " << a.host << ":" << a.port << std::endl;
  if (!serve(service, a.host, a.port)) {
    err << "error: cannot listen on " << a.host << ":" << a.port << "\n";
    return kDataError;
  }
  return kOk;
}

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.data, "Dataset file (jsonl) or directory (csv bundle)")->required();
  cmd->add_option("--data-format", a.data_format, "auto, jsonl or csv")
      ->check(CLI::IsMember({"auto", "jsonl", "csv", "csv-bundle"}));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cityexpo: current-city inference and exposure estimation"};
  app.name("cityexpo");
  app.require_subcommand(1, 1);

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threshold-km", g.threshold_km, "UPGMA cluster cut, km");
  app.add_option("--error-distance-km", g.error_distance_km, "Error distance, km");
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "text"}));

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Generate a synthetic world");
  c_gen->add_option("--out", gen.out, "Masked dataset output path")->required();
  c_gen->add_option("--truth-out", gen.truth_out, "Ground-truth dataset output path");
  c_gen->add_option("--data-format", gen.format, "jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv", "csv-bundle"}));
  c_gen->add_option("--preset", gen.preset, "ci or large")->check(CLI::IsMember({"ci", "large"}));
  c_gen->add_option("--users", gen.users, "Number of users");
  c_gen->add_option("--cities", gen.cities, "Number of cities");
  c_gen->add_option("--orgs", gen.orgs, "Number of organizations");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a model bundle");
  add_data_options(c_train, train.data);
  c_train->add_option("--bundle", train.bundle, "Bundle output path")->required();

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Predict hidden current cities");
  add_data_options(c_pred, pred.data);
  c_pred->add_option("--bundle", pred.bundle, "Model bundle")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--out", pred.out, "Predictions output (default stdout)");
  c_pred->add_flag("--all", pred.all, "Predict every user, not only LN-users");

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Benchmark PFLI against baselines");
  add_data_options(c_eval, ev.data);
  c_eval->add_option("--out", ev.out, "Report output (default stdout)");
  c_eval->add_option("--curves", ev.curves, "ACC@K curves CSV output");
  c_eval->add_option("--eval-fraction", ev.eval_fraction, "Share of LA-users to hold out")
      ->check(CLI::Range(0.0, 1.0));

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Estimate current-city exposure of a profile");
  c_est->add_option("--bundle", est.bundle, "Model bundle")->required()->check(CLI::ExistingFile);
  c_est->add_option("--profile", est.profile, "Profile JSON file, or - for stdin")->required();
  c_est->add_option("-K,--k", est.k, "Error distance horizon, km");
  c_est->add_flag("--what-if", est.what_if, "Include the what-if table");

  ServeArgs srv;
  auto* c_srv = app.add_subcommand("serve", "Start the HTTP service");
  c_srv->add_option("--bundle", srv.bundle, "Model bundle")->check(CLI::ExistingFile);
  c_srv->add_option("--host", srv.host, "Bind address");
  c_srv->add_option("--port", srv.port, "Port")->check(CLI::Range(0, 65535));
  c_srv->add_option("--cors-origin", srv.cors_origin, "Access-Control-Allow-Origin value");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kUsage;
  }

  try {
    if (c_gen->parsed()) return cmd_generate(gen, g, out);
    if (c_train->parsed()) return cmd_train(train, g, out);
    if (c_pred->parsed()) return cmd_predict(pred, g, out);
    if (c_eval->parsed()) return cmd_evaluate(ev, g, out);
    if (c_est->parsed()) return cmd_estimate(est, g, out);
    if (c_srv->parsed()) return cmd_serve(srv, out, err);
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kModelError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kModelError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  err << app.help();
  return kUsage;
}

}  // namespace cityexpo::app
