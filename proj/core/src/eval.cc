#include "cityexpo/eval.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "cityexpo/errors.h"
#include "cityexpo/rng.h"

namespace cityexpo {
namespace {

struct Outcomes {
  std::vector<double> errors;
  std::size_t abstained = 0;

  void add(const Prediction& p, const Location& truth) {
    if (p.abstained) {
      ++abstained;
    } else {
      errors.push_back(error_distance(p, truth));
    }
  }
};

ApproachResult summarize(std::string name, const Outcomes& o,
                         const std::vector<double>& k_grid) {
  ApproachResult r;
  r.name = std::move(name);
  r.users = o.errors.size() + o.abstained;
  r.abstained = o.abstained;
  for (double p : kAedPercents) {
    r.aed.push_back(o.errors.empty() ? std::nullopt
                                     : std::optional<double>(aed_at_percent(o.errors, p)));
  }
  for (double k : k_grid) r.acc.push_back(acc_at_k(o.errors, o.abstained, k));
  return r;
}

}  // namespace

double error_distance(const Prediction& prediction, const Location& truth) {
  if (prediction.abstained || !prediction.coordinate) throw Abstained();
  return haversine_km(*prediction.coordinate, coord(truth));
}

double aed_at_percent(std::span<const double> errors, double percent) {
  if (errors.empty()) throw EmptyInput("AED needs at least one error");
  if (!(percent > 0.0 && percent <= 100.0)) throw OutOfRange("AED percent must be in (0, 100]");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double n = static_cast<double>(sorted.size());
  // Guard against 3 * 60 / 100 landing a hair above an integer.
  auto take = static_cast<std::size_t>(std::ceil(n * percent / 100.0 - 1e-9));
  take = std::clamp<std::size_t>(take, 1, sorted.size());
  double sum = 0.0;
  for (std::size_t i = sorted.size() - take; i < sorted.size(); ++i) sum += sorted[i];
  return sum / static_cast<double>(take);
}

double acc_at_k(std::span<const double> errors, std::size_t abstentions, double k_km) {
  const std::size_t total = errors.size() + abstentions;
  if (total == 0) return 0.0;
  const auto hits = std::count_if(errors.begin(), errors.end(),
                                  [&](double e) { return e < k_km; });
  return static_cast<double>(hits) / static_cast<double>(total);
}

const std::vector<double>& default_k_grid() {
  static const std::vector<double> grid = {1, 5, 10, 20, 40, 60, 80, 100, 200, 500, 1000};
  return grid;
}

const std::vector<std::string>& benchmark_approaches() {
  static const std::vector<std::string> names = {
      "PFLI_prob", "PFLI_cent", "PFLI_dist", "PFLI_noclst", "PFLI_cmb",
      "Base_freq", "Base_freq+", "Base_knn"};
  return names;
}

const ApproachResult& UserSetReport::approach(std::string_view n) const {
  for (const auto& a : approaches) {
    if (a.name == n) return a;
  }
  throw std::out_of_range("no approach " + std::string(n));
}

const UserSetReport& BenchmarkReport::user_set(std::string_view n) const {
  for (const auto& s : user_sets) {
    if (s.name == n) return s;
  }
  throw std::out_of_range("no user set " + std::string(n));
}

BenchmarkReport run_benchmark(const SocialDataset& ds, const BenchmarkConfig& config) {
  const EvalSplit split =
      split_la_users(ds, config.eval_fraction, derive_seed(config.pipeline.seed, 7));
  const SocialDataset masked = ds.with_hidden_cities(split.eval);
  const TrainedModel model = train_model(masked, config.pipeline);
  const Predictor predictor = model.predictor();

  // Approach -> outcomes, for each user set.
  std::map<std::string, Outcomes> with_la, overall;
  std::size_t with_la_users = 0;
  const Selector cmb_selector = combined_selector(config.pipeline.error_distance_km);

  for (UserIndex u : split.eval) {
    const UserView view = make_user_view(masked, u);
    const std::string& id = ds.user(u).id;
    const LocationScores scores = predictor.scores(view);

    std::map<std::string, Prediction> preds;
    preds["PFLI_prob"] = predictor.from_scores(scores, Selector::kProb, id);
    preds["PFLI_cent"] = predictor.from_scores(scores, Selector::kCentroid, id);
    preds["PFLI_dist"] = predictor.from_scores(scores, Selector::kMinDist, id);
    preds["PFLI_noclst"] = predictor.unclustered(scores, id);
    preds["PFLI_cmb"] =
        cmb_selector == Selector::kProb ? preds["PFLI_prob"] : preds["PFLI_cent"];
    preds["Base_freq"] = baseline_freq(masked, u);
    preds["Base_freq+"] = baseline_freq_plus(masked, u);
    preds["Base_knn"] = baseline_knn(masked, u, config.knn_k);

    // Ground truth is read only after every prediction for u exists.
    const Location& truth = ds.location(*ds.user(u).current_city);
    const bool has_la_friend = !view.la_friends.empty();
    if (has_la_friend) ++with_la_users;
    for (const auto& [name, p] : preds) {
      overall[name].add(p, truth);
      if (has_la_friend) with_la[name].add(p, truth);
    }
  }

  BenchmarkReport report;
  report.seed = config.pipeline.seed;
  report.eval_fraction = config.eval_fraction;
  report.train_users = split.train.size();
  report.eval_users = split.eval.size();
  report.k_grid = config.k_grid;

  auto build_set = [&](std::string name, std::map<std::string, Outcomes>& outcomes,
                       std::size_t users) {
    UserSetReport set;
    set.name = std::move(name);
    set.users = users;
    for (const auto& approach : benchmark_approaches()) {
      set.approaches.push_back(summarize(approach, outcomes[approach], config.k_grid));
    }
    // The combined strategy switches selector with K.
    ApproachResult& cmb = set.approaches[4];
    const ApproachResult& prob = set.approaches[0];
    const ApproachResult& cent = set.approaches[1];
    for (std::size_t i = 0; i < config.k_grid.size(); ++i) {
      cmb.acc[i] = config.k_grid[i] < kCombinedSwitchKm ? prob.acc[i] : cent.acc[i];
    }
    return set;
  };
  report.user_sets.push_back(build_set("users_with_la_friends", with_la, with_la_users));
  report.user_sets.push_back(build_set("overall_users", overall, split.eval.size()));
  return report;
}

nlohmann::ordered_json to_json(const BenchmarkReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["eval_fraction"] = report.eval_fraction;
  j["train_users"] = report.train_users;
  j["eval_users"] = report.eval_users;
  j["k_grid"] = report.k_grid;
  nlohmann::ordered_json sets = nlohmann::ordered_json::array();
  for (const auto& s : report.user_sets) {
    nlohmann::ordered_json js;
    js["name"] = s.name;
    js["users"] = s.users;
    nlohmann::ordered_json approaches = nlohmann::ordered_json::array();
    for (const auto& a : s.approaches) {
      nlohmann::ordered_json ja;
      ja["name"] = a.name;
      ja["users"] = a.users;
      ja["abstained"] = a.abstained;
      ja["coverage"] = a.coverage();
      nlohmann::ordered_json aed;
      for (std::size_t i = 0; i < a.aed.size(); ++i) {
        const std::string key = "AED@" + std::to_string(static_cast<int>(kAedPercents[i])) + "%";
        aed[key] = a.aed[i] ? nlohmann::ordered_json(*a.aed[i]) : nlohmann::ordered_json(nullptr);
      }
      ja["aed_km"] = std::move(aed);
      ja["acc"] = a.acc;
      approaches.push_back(std::move(ja));
    }
    js["approaches"] = std::move(approaches);
    sets.push_back(std::move(js));
  }
  j["user_sets"] = std::move(sets);
  return j;
}

std::string to_text(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "seed " << report.seed << ", train LA-users " << report.train_users
      << ", eval users " << report.eval_users << "\n";
  for (const auto& s : report.user_sets) {
    out << "\n[" << s.name << "] " << s.users << " users\n";
    out << std::left << std::setw(13) << "approach" << std::right << std::setw(9) << "cover"
        << std::setw(10) << "AED@60" << std::setw(10) << "AED@80" << std::setw(10)
        << "AED@100";
    for (double k : report.k_grid) {
      out << std::setw(8) << ("@" + std::to_string(static_cast<int>(k)));
    }
    out << "\n";
    out << std::fixed;
    for (const auto& a : s.approaches) {
      out << std::left << std::setw(13) << a.name << std::right << std::setprecision(3)
          << std::setw(9) << a.coverage();
      out << std::setprecision(1);
      for (const auto& v : a.aed) {
        if (v) {
          out << std::setw(10) << *v;
        } else {
          out << std::setw(10) << "-";
        }
      }
      out << std::setprecision(3);
      for (double acc : a.acc) out << std::setw(8) << acc;
      out << "\n";
    }
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

std::string acc_curves_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "user_set,approach,K,acc\n";
  for (const auto& s : report.user_sets) {
    for (const auto& a : s.approaches) {
      for (std::size_t i = 0; i < report.k_grid.size(); ++i) {
        out << s.name << ',' << a.name << ',' << report.k_grid[i] << ',' << a.acc[i] << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace cityexpo
