#ifndef CITYEXPO_PFLI_H_
#define CITYEXPO_PFLI_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cityexpo/indication.h"
#include "cityexpo/logistic.h"
#include "cityexpo/social_graph.h"

namespace cityexpo {

struct LaFriendView {
  LocationIndex city = 0;
  std::span<const Token> attrs;
};

// Everything the scoring models may read about one user: their own
// attributes plus their friends split by current-city visibility. Views
// borrow storage from a SocialDataset or a Profile.
struct UserView {
  std::span<const Token> attrs;
  std::vector<LaFriendView> la_friends;
  std::vector<std::span<const Token>> ln_friends;
};

UserView make_user_view(const SocialDataset& ds, UserIndex u);

struct LocationScores {
  SparseVector scores;  // sorted by location, strictly positive entries
  bool normalized = false;

  bool empty() const { return scores.empty(); }
  double total() const;
  double at(LocationIndex l) const;
  // Scales to sum 1. All-zero input becomes empty.
  void normalize();
};

// Integrated-model parameters. Only the products mu = theta_P alpha, nu = theta_F beta
// and lambda_alpha = lambda theta_F are identifiable; alpha itself is the
// separately trained profile-only weight used for LN-friends.
struct PfliWeights {
  std::vector<double> mu;
  std::vector<double> nu;
  std::vector<double> alpha;
  double lambda_alpha = 0.0;
  double bias = 0.0;        // intercept of the [sigma, delta] fit
  double alpha_bias = 0.0;  // intercept of the profile-only fit
};

// p_Prof(u, l) = sum_k alpha_k sigma_k(u, l) over non-NULL attributes.
LocationScores pli_scores(std::span<const Token> attrs, const IndicationModel& model,
                          std::span<const double> alpha);

// p_LA-F(u, l) = sum over LA-friends v at l of sum_k beta_k w_k(u, v).
LocationScores la_fli_scores(const UserView& user, const IndicationModel& model,
                             std::span<const double> beta);

// p_LN-F(u, l) = sum over LN-friends v of p_Prof(v, l).
LocationScores ln_fli_scores(const UserView& user, const IndicationModel& model,
                             std::span<const double> alpha);

// The integrated model, evaluated on the sparse schedule: profile and
// LN-friend mass first, then LA-friend mass at LA-friend cities only.
LocationScores pfli_scores(const UserView& user, const IndicationModel& model,
                           const PfliWeights& weights, bool normalize = true);

// Per-kind sigma_k(u, .) and delta_k(u, .) as sparse vectors.
struct KindSignals {
  std::vector<SparseVector> sigma;
  std::vector<SparseVector> delta;
};

KindSignals kind_signals(const UserView& user, const IndicationModel& model);

enum class FeatureSet {
  kProfileOnly,         // [sigma_1..sigma_m]
  kProfileAndFriends,   // [sigma_1..sigma_m, delta_1..delta_m]
};

// One example per (LA-user, location) with positive signal. Label 1 iff the
// location is within close_threshold_km of the user's city.
std::vector<TrainingExample> make_training_examples(
    const SocialDataset& ds, const IndicationModel& model, double close_threshold_km,
    FeatureSet features = FeatureSet::kProfileAndFriends);

struct PfliTrainingConfig {
  double close_threshold_km = 20.0;
  double regulator_scale = 0.1;
  // Far examples are downsampled when they outnumber close ones by more.
  double max_negative_ratio = 10.0;
  std::uint64_t seed = 0;
  LogisticOptions logistic;
};

// Keeps every positive and at most ratio * positives negatives.
std::vector<TrainingExample> subsample_negatives(std::vector<TrainingExample> examples,
                                                 double ratio, std::uint64_t seed);

// Trains alpha on profile-only features and (mu, nu) jointly on
// [sigma, delta]; lambda_alpha = regulator_scale * min_k nu_k. Negative
// weights are clamped to zero and reported through `warnings`.
PfliWeights fit_pfli(const SocialDataset& ds, const IndicationModel& model,
                     const PfliTrainingConfig& config = {},
                     std::vector<std::string>* warnings = nullptr);

}  // namespace cityexpo

#endif  // CITYEXPO_PFLI_H_
