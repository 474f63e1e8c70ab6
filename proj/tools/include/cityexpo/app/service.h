#ifndef CITYEXPO_APP_SERVICE_H_
#define CITYEXPO_APP_SERVICE_H_

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cityexpo/bundle.h"

namespace httplib {
class Server;
}

namespace cityexpo::app {

inline constexpr double kMaxApiKm = 1000.0;

// {"id": ..., "format_version": ...}
nlohmann::ordered_json bundle_stamp(const ModelBundle& b);

// The ExposureReport JSON shared by `estimate` and POST /estimate, stamped
// with the bundle version. The what-if table is filled only on request.
nlohmann::ordered_json exposure_report_json(const ModelBundle& b, const Profile& profile,
                                            double k_km, bool with_what_if);

struct HttpResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

// Request handling without sockets; the bundle is immutable after
// construction, so handle() is safe to call concurrently.
class Service {
 public:
  explicit Service(std::optional<ModelBundle> bundle, std::string cors_origin = "*");

  HttpResponse handle(std::string_view method, std::string_view path,
                      std::string_view body) const;

  // Routes GET /health, POST /estimate, /whatif, /predict and CORS preflight.
  void mount(httplib::Server& server) const;

  const std::optional<ModelBundle>& bundle() const { return bundle_; }

 private:
  HttpResponse health() const;
  HttpResponse estimate(const nlohmann::json& request, bool what_if_only) const;
  HttpResponse predict(const nlohmann::json& request) const;

  std::optional<ModelBundle> bundle_;
  std::string cors_origin_;
};

// Blocks until the server stops. Returns false if the port cannot be bound.
bool serve(const Service& service, const std::string& host, int port);

}  // namespace cityexpo::app

#endif  // CITYEXPO_APP_SERVICE_H_
