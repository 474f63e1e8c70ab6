#include "cityexpo/pfli.h"

#include <algorithm>
#include <limits>
#include <numeric>

#include "cityexpo/errors.h"
#include "cityexpo/geo.h"
#include "cityexpo/rng.h"

namespace cityexpo {
namespace {

// Dense accumulator that remembers which slots were touched.
class ScoreAccumulator {
 public:
  explicit ScoreAccumulator(std::size_t n) : values_(n, 0.0), seen_(n, 0) {}

  void add(LocationIndex l, double v) {
    if (!seen_[l]) {
      seen_[l] = 1;
      touched_.push_back(l);
    }
    values_[l] += v;
  }

  void add(const SparseVector& vec, double scale) {
    if (scale == 0.0) return;
    for (const auto& [l, p] : vec) add(l, scale * p);
  }

  SparseVector take() {
    std::sort(touched_.begin(), touched_.end());
    SparseVector out;
    out.reserve(touched_.size());
    for (LocationIndex l : touched_) {
      if (values_[l] > 0.0) out.emplace_back(l, values_[l]);
    }
    return out;
  }

 private:
  std::vector<double> values_;
  std::vector<char> seen_;
  std::vector<LocationIndex> touched_;
};

std::size_t accumulator_size(const IndicationModel& model, const UserView& user) {
  std::size_t n = model.num_locations;
  for (const auto& f : user.la_friends) n = std::max<std::size_t>(n, f.city + 1);
  return n;
}

double friend_weight(std::span<const Token> u_attrs, std::span<const Token> v_attrs,
                     const IndicationModel& model, std::span<const double> beta) {
  double w = 0.0;
  for (std::size_t k = 0; k < model.num_kinds(); ++k) {
    if (beta[k] == 0.0) continue;
    w += beta[k] * lookup_similarity(model.similarity[k], u_attrs[k], v_attrs[k]);
  }
  return w;
}

}  // namespace

UserView make_user_view(const SocialDataset& ds, UserIndex u) {
  const User& user = ds.user(u);
  UserView view;
  view.attrs = user.attrs;
  for (UserIndex f : user.friends) {
    const User& fr = ds.user(f);
    if (fr.current_city) {
      view.la_friends.push_back({*fr.current_city, fr.attrs});
    } else {
      view.ln_friends.push_back(fr.attrs);
    }
  }
  return view;
}

double LocationScores::total() const {
  double s = 0.0;
  for (const auto& [l, p] : scores) s += p;
  return s;
}

double LocationScores::at(LocationIndex l) const {
  auto it = std::lower_bound(scores.begin(), scores.end(), l,
                             [](const auto& e, LocationIndex x) { return e.first < x; });
  return it != scores.end() && it->first == l ? it->second : 0.0;
}

void LocationScores::normalize() {
  const double t = total();
  if (!(t > 0.0)) {
    scores.clear();
  } else {
    for (auto& [l, p] : scores) p /= t;
  }
  normalized = true;
}

LocationScores pli_scores(std::span<const Token> attrs, const IndicationModel& model,
                          std::span<const double> alpha) {
  ScoreAccumulator acc(model.num_locations);
  for (std::size_t k = 0; k < model.num_kinds(); ++k) {
    acc.add(lookup_indication(model.indication[k], attrs[k]), alpha[k]);
  }
  return {acc.take(), false};
}

LocationScores la_fli_scores(const UserView& user, const IndicationModel& model,
                             std::span<const double> beta) {
  ScoreAccumulator acc(accumulator_size(model, user));
  for (const auto& f : user.la_friends) {
    acc.add(f.city, friend_weight(user.attrs, f.attrs, model, beta));
  }
  return {acc.take(), false};
}

LocationScores ln_fli_scores(const UserView& user, const IndicationModel& model,
                             std::span<const double> alpha) {
  ScoreAccumulator acc(model.num_locations);
  for (const auto& attrs : user.ln_friends) {
    for (std::size_t k = 0; k < model.num_kinds(); ++k) {
      acc.add(lookup_indication(model.indication[k], attrs[k]), alpha[k]);
    }
  }
  return {acc.take(), false};
}

LocationScores pfli_scores(const UserView& user, const IndicationModel& model,
                           const PfliWeights& weights, bool normalize) {
  ScoreAccumulator acc(accumulator_size(model, user));
  // Profile and LN-friend indications: sum_k mu_k R_k[a_k(u)] +
  // lambda_alpha sum_{v in LN} alpha_k R_k[a_k(v)].
  for (std::size_t k = 0; k < model.num_kinds(); ++k) {
    acc.add(lookup_indication(model.indication[k], user.attrs[k]), weights.mu[k]);
    const double ln_scale = weights.lambda_alpha * weights.alpha[k];
    if (ln_scale == 0.0) continue;
    for (const auto& attrs : user.ln_friends) {
      acc.add(lookup_indication(model.indication[k], attrs[k]), ln_scale);
    }
  }
  // LA-friend mass lands only on LA-friend cities.
  for (const auto& f : user.la_friends) {
    const double w = friend_weight(user.attrs, f.attrs, model, weights.nu);
    if (w != 0.0) acc.add(f.city, w);
  }
  LocationScores out{acc.take(), false};
  if (normalize) out.normalize();
  return out;
}

KindSignals kind_signals(const UserView& user, const IndicationModel& model) {
  KindSignals s;
  const std::size_t n = accumulator_size(model, user);
  for (std::size_t k = 0; k < model.num_kinds(); ++k) {
    s.sigma.push_back(lookup_indication(model.indication[k], user.attrs[k]));
    ScoreAccumulator acc(n);
    for (const auto& f : user.la_friends) {
      acc.add(f.city, lookup_similarity(model.similarity[k], user.attrs[k], f.attrs[k]));
    }
    s.delta.push_back(acc.take());
  }
  return s;
}

std::vector<TrainingExample> make_training_examples(const SocialDataset& ds,
                                                    const IndicationModel& model,
                                                    double close_threshold_km,
                                                    FeatureSet features) {
  const std::size_t m = model.num_kinds();
  const bool with_friends = features == FeatureSet::kProfileAndFriends;
  std::vector<TrainingExample> out;
  for (UserIndex u = 0; u < ds.num_users(); ++u) {
    const User& user = ds.user(u);
    if (!user.current_city) continue;
    const LatLon home = coord(ds.location(*user.current_city));
    const KindSignals sig = kind_signals(make_user_view(ds, u), model);

    std::vector<LocationIndex> candidates;
    for (std::size_t k = 0; k < m; ++k) {
      for (const auto& [l, p] : sig.sigma[k]) candidates.push_back(l);
      if (with_friends) {
        for (const auto& [l, p] : sig.delta[k]) candidates.push_back(l);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    auto value_at = [](const SparseVector& v, LocationIndex l) {
      auto it = std::lower_bound(
          v.begin(), v.end(), l, [](const auto& e, LocationIndex x) { return e.first < x; });
      return it != v.end() && it->first == l ? it->second : 0.0;
    };
    for (LocationIndex l : candidates) {
      TrainingExample ex;
      ex.features.resize(with_friends ? 2 * m : m);
      double total = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        ex.features[k] = value_at(sig.sigma[k], l);
        total += ex.features[k];
        if (with_friends) {
          ex.features[m + k] = value_at(sig.delta[k], l);
          total += ex.features[m + k];
        }
      }
      if (!(total > 0.0)) continue;
      ex.label = haversine_km(coord(ds.location(l)), home) <= close_threshold_km ? 1 : 0;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<TrainingExample> subsample_negatives(std::vector<TrainingExample> examples,
                                                 double ratio, std::uint64_t seed) {
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].label) {
      ++positives;
    } else {
      negatives.push_back(i);
    }
  }
  const double cap = ratio * static_cast<double>(positives);
  if (static_cast<double>(negatives.size()) <= cap) return examples;

  Rng rng(seed);
  rng.shuffle(negatives);
  negatives.resize(static_cast<std::size_t>(cap));
  std::vector<char> keep(examples.size(), 0);
  for (std::size_t i : negatives) keep[i] = 1;
  std::vector<TrainingExample> out;
  out.reserve(positives + negatives.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].label || keep[i]) out.push_back(std::move(examples[i]));
  }
  return out;
}

PfliWeights fit_pfli(const SocialDataset& ds, const IndicationModel& model,
                     const PfliTrainingConfig& config, std::vector<std::string>* warnings) {
  const std::size_t m = model.num_kinds();
  auto clamp = [&](std::vector<double>& w, const char* name) {
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] < 0.0) {
        if (warnings) {
          warnings->push_back(std::string("clamped negative ") + name + "[" +
                              ds.kinds()[k] + "] = " + std::to_string(w[k]) + " to 0");
        }
        w[k] = 0.0;
      }
    }
  };

  PfliWeights weights;

  auto profile = subsample_negatives(
      make_training_examples(ds, model, config.close_threshold_km, FeatureSet::kProfileOnly),
      config.max_negative_ratio, derive_seed(config.seed, 1));
  LogisticFit alpha_fit = train_logistic(profile, config.logistic);
  weights.alpha = alpha_fit.weights;
  weights.alpha_bias = alpha_fit.bias;
  clamp(weights.alpha, "alpha");

  auto joint = subsample_negatives(
      make_training_examples(ds, model, config.close_threshold_km,
                             FeatureSet::kProfileAndFriends),
      config.max_negative_ratio, derive_seed(config.seed, 2));
  LogisticFit joint_fit = train_logistic(joint, config.logistic);
  weights.mu.assign(joint_fit.weights.begin(), joint_fit.weights.begin() + m);
  weights.nu.assign(joint_fit.weights.begin() + m, joint_fit.weights.end());
  weights.bias = joint_fit.bias;
  clamp(weights.mu, "mu");
  clamp(weights.nu, "nu");

  const double min_nu =
      weights.nu.empty() ? 0.0 : *std::min_element(weights.nu.begin(), weights.nu.end());
  weights.lambda_alpha = config.regulator_scale * min_nu;
  return weights;
}

}  // namespace cityexpo
