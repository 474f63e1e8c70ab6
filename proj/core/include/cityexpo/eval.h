#ifndef CITYEXPO_EVAL_H_
#define CITYEXPO_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cityexpo/pipeline.h"
#include "cityexpo/predictor.h"
#include "cityexpo/social_graph.h"

namespace cityexpo {

// Throws Abstained.
double error_distance(const Prediction& prediction, const Location& truth);

// Mean error of the `percent`% best-predicted users: errors are ranked in
// descending order and the last ceil(n * percent / 100) are averaged, so
// AED@60% <= AED@80% <= AED@100%. Throws EmptyInput / OutOfRange.
double aed_at_percent(std::span<const double> errors, double percent);

// |{errors < k_km}| / (|errors| + abstentions); 0 when there are no users.
double acc_at_k(std::span<const double> errors, std::size_t abstentions, double k_km);

const std::vector<double>& default_k_grid();

inline constexpr double kAedPercents[] = {60.0, 80.0, 100.0};

struct ApproachResult {
  std::string name;
  std::size_t users = 0;
  std::size_t abstained = 0;
  std::vector<std::optional<double>> aed;  // per kAedPercents; unset when nothing predicted
  std::vector<double> acc;                 // per K grid entry

  double coverage() const {
    return users == 0 ? 0.0
                      : static_cast<double>(users - abstained) / static_cast<double>(users);
  }
};

struct UserSetReport {
  std::string name;  // "users_with_la_friends" or "overall_users"
  std::size_t users = 0;
  std::vector<ApproachResult> approaches;

  const ApproachResult& approach(std::string_view name) const;
};

struct BenchmarkReport {
  std::uint64_t seed = 0;
  double eval_fraction = 0.0;
  std::size_t train_users = 0;
  std::size_t eval_users = 0;
  std::vector<double> k_grid;
  std::vector<UserSetReport> user_sets;

  const UserSetReport& user_set(std::string_view name) const;
};

struct BenchmarkConfig {
  PipelineConfig pipeline;
  double eval_fraction = 0.2;
  std::vector<double> k_grid = default_k_grid();
  std::size_t knn_k = kDefaultKnn;
};

// Approach names in report order.
const std::vector<std::string>& benchmark_approaches();

// Masks a seeded share of LA-users, trains on the rest and scores every
// approach on both user sets. PFLI_cmb takes PFLI_prob's prediction for
// K < 40 km and PFLI_cent's otherwise; its AED uses the pipeline's
// error_distance_km.
BenchmarkReport run_benchmark(const SocialDataset& ds, const BenchmarkConfig& config);

nlohmann::ordered_json to_json(const BenchmarkReport& report);
std::string to_text(const BenchmarkReport& report);
// user_set,approach,K,acc
std::string acc_curves_csv(const BenchmarkReport& report);

}  // namespace cityexpo

#endif  // CITYEXPO_EVAL_H_
