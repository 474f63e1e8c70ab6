#include "cityexpo/app/service.h"

#include <cmath>

#include <httplib.h>

#include "cityexpo/errors.h"

namespace cityexpo::app {
namespace {

using ojson = nlohmann::ordered_json;

struct RequestError {
  int status;
  std::string message;
};

HttpResponse error_response(int status, const std::string& message, const ojson& stamp) {
  return {status, {{"error", message}, {"bundle", stamp}}};
}

double request_k(const nlohmann::json& request, double fallback) {
  auto it = request.find("K");
  if (it == request.end() || it->is_null()) return fallback;
  if (!it->is_number()) throw RequestError{400, "'K' must be a number"};
  const double k = it->get<double>();
  if (!std::isfinite(k) || k <= 0.0 || k > kMaxApiKm) {
    throw RequestError{422, "'K' must be in (0, 1000] km"};
  }
  return k;
}

Profile request_profile(const nlohmann::json& request, const ModelBundle& b) {
  auto it = request.find("profile");
  if (it == request.end()) throw RequestError{400, "missing 'profile'"};
  try {
    return profile_from_json(*it, b.model.kinds);
  } catch (const DataError& e) {
    throw RequestError{400, e.what()};
  }
}

}  // namespace

ojson bundle_stamp(const ModelBundle& b) {
  return {{"id", b.id}, {"format_version", kBundleFormatVersion}};
}

ojson exposure_report_json(const ModelBundle& b, const Profile& profile, double k_km,
                           bool with_what_if) {
  ExposureReport r = estimate_exposure(profile, b.model, b.exposure, k_km);
  if (with_what_if) r.what_if = what_if(profile, b.model, b.exposure, k_km);
  ojson j = to_json(r);
  j["bundle"] = bundle_stamp(b);
  return j;
}

Service::Service(std::optional<ModelBundle> bundle, std::string cors_origin)
    : bundle_(std::move(bundle)), cors_origin_(std::move(cors_origin)) {}

HttpResponse Service::handle(std::string_view method, std::string_view path,
                             std::string_view body) const {
  const ojson stamp = bundle_ ? bundle_stamp(*bundle_) : ojson(nullptr);
  const bool known = path == "/health" || path == "/estimate" || path == "/whatif" ||
                     path == "/predict";
  if (!known) return error_response(404, "no such endpoint", stamp);
  const bool get = path == "/health";
  if (method != (get ? "GET" : "POST")) return error_response(405, "method not allowed", stamp);
  if (get) return health();
  if (!bundle_) return error_response(503, "no model bundle loaded", stamp);

  nlohmann::json request;
  try {
    request = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return error_response(400, "request body is not valid JSON", stamp);
  }
  if (!request.is_object()) return error_response(400, "request body must be an object", stamp);
  try {
    if (path == "/predict") return predict(request);
    return estimate(request, path == "/whatif");
  } catch (const RequestError& e) {
    return error_response(e.status, e.message, stamp);
  } catch (const DataError& e) {
    return error_response(400, e.what(), stamp);
  } catch (const std::exception& e) {
    return error_response(500, e.what(), stamp);
  }
}

HttpResponse Service::health() const {
  if (!bundle_) return {503, {{"status", "unavailable"}, {"bundle", nullptr}}};
  return {200, {{"status", "ok"}, {"bundle", bundle_stamp(*bundle_)}}};
}

HttpResponse Service::estimate(const nlohmann::json& request, bool what_if_only) const {
  const ModelBundle& b = *bundle_;
  const Profile profile = request_profile(request, b);
  const double k = request_k(request, b.config.error_distance_km);
  if (what_if_only) {
    ojson rows = ojson::array();
    for (const auto& e : what_if(profile, b.model, b.exposure, k)) rows.push_back(to_json(e));
    return {200, {{"K", k}, {"what_if", std::move(rows)}, {"bundle", bundle_stamp(b)}}};
  }
  bool with_what_if = false;
  if (auto it = request.find("what_if"); it != request.end() && !it->is_null()) {
    if (!it->is_boolean()) throw RequestError{400, "'what_if' must be a boolean"};
    with_what_if = it->get<bool>();
  }
  return {200, exposure_report_json(b, profile, k, with_what_if)};
}

HttpResponse Service::predict(const nlohmann::json& request) const {
  const ModelBundle& b = *bundle_;
  const Profile profile = request_profile(request, b);
  const double k = request_k(request, b.config.error_distance_km);
  const ResolvedProfile resolved(profile, b.model.locations);
  ojson j = to_json(b.model.predictor().predict(resolved.view(), k, profile.id));
  j["bundle"] = bundle_stamp(b);
  return {200, std::move(j)};
}

void Service::mount(httplib::Server& server) const {
  const std::string origin = cors_origin_;
  auto route = [this, origin](const char* method) {
    return [this, origin, method](const httplib::Request& req, httplib::Response& res) {
      const HttpResponse r = handle(method, req.path, req.body);
      res.status = r.status;
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_content(r.body.dump(), "application/json");
    };
  };
  server.Get("/health", route("GET"));
  for (const char* path : {"/estimate", "/whatif", "/predict"}) {
    server.Post(path, route("POST"));
  }
  server.Options(R"(/.*)", [origin](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
}

bool serve(const Service& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  return server.listen(host, port);
}

}  // namespace cityexpo::app
