#include "cityexpo/logistic.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "cityexpo/errors.h"

namespace cityexpo {
namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LogisticObjective::LogisticObjective(std::span<const TrainingExample> examples, double l2)
    : examples_(examples),
      l2_(l2),
      dim_(examples.empty() ? 0 : examples.front().features.size()) {
  for (const auto& ex : examples_) {
    if (ex.features.size() != dim_) {
      throw ValidationError("training examples have inconsistent feature counts");
    }
  }
}

double LogisticObjective::margin(std::size_t i, std::span<const double> params) const {
  const auto& x = examples_[i].features;
  double z = params[dim_];
  for (std::size_t j = 0; j < dim_; ++j) z += params[j] * x[j];
  return z;
}

double LogisticObjective::value(std::span<const double> params) const {
  double f = 0.0;
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const double z = margin(i, params);
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    f += softplus(z) - (examples_[i].label ? z : 0.0);
  }
  double w2 = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) w2 += params[j] * params[j];
  return f + 0.5 * l2_ * w2;
}

std::vector<double> LogisticObjective::gradient(std::span<const double> params) const {
  std::vector<double> g(dim_ + 1, 0.0);
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const double r = sigmoid(margin(i, params)) - examples_[i].label;
    const auto& x = examples_[i].features;
    for (std::size_t j = 0; j < dim_; ++j) g[j] += r * x[j];
    g[dim_] += r;
  }
  for (std::size_t j = 0; j < dim_; ++j) g[j] += l2_ * params[j];
  return g;
}

std::vector<double> LogisticObjective::hessian(std::span<const double> params) const {
  const std::size_t d = dim_ + 1;
  std::vector<double> h(d * d, 0.0);
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const double s = sigmoid(margin(i, params));
    const double w = s * (1.0 - s);
    const auto& x = examples_[i].features;
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = a < dim_ ? x[a] : 1.0;
      for (std::size_t b = a; b < d; ++b) {
        const double xb = b < dim_ ? x[b] : 1.0;
        h[a * d + b] += w * xa * xb;
      }
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    if (a < dim_) h[a * d + a] += l2_;
    for (std::size_t b = 0; b < a; ++b) h[a * d + b] = h[b * d + a];
  }
  return h;
}

LogisticFit train_logistic(std::span<const TrainingExample> examples,
                           const LogisticOptions& options) {
  const bool has_pos = std::any_of(examples.begin(), examples.end(),
                                   [](const TrainingExample& e) { return e.label == 1; });
  const bool has_neg = std::any_of(examples.begin(), examples.end(),
                                   [](const TrainingExample& e) { return e.label == 0; });
  if (!has_pos || !has_neg) {
    throw DegenerateTrainingSet("training examples need both close and far labels");
  }

  LogisticObjective objective(examples, options.l2);
  const std::size_t d = objective.dimension();
  std::vector<double> params(d, 0.0);
  double f = objective.value(params);
  std::vector<double> grad = objective.gradient(params);

  LogisticFit fit;
  int epoch = 0;
  for (; epoch < options.max_epochs && inf_norm(grad) >= options.tolerance; ++epoch) {
    const auto h = objective.hessian(params);
    Eigen::Map<const Eigen::MatrixXd> hm(h.data(), static_cast<Eigen::Index>(d),
                                         static_cast<Eigen::Index>(d));
    Eigen::Map<const Eigen::VectorXd> gv(grad.data(), static_cast<Eigen::Index>(d));
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hm);
    Eigen::VectorXd dir = -gv;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Eigen::VectorXd newton = -ldlt.solve(gv);
      if (newton.allFinite() && newton.dot(gv) < 0) dir = newton;
    }
    const double slope = dir.dot(gv);

    // Armijo on f while f changes measurably. Once the change is within
    // rounding of f, a step is accepted only if it shrinks the gradient.
    const double noise = 1e-12 * std::max(1.0, std::abs(f));
    const double g_norm = inf_norm(grad);
    double step = 1.0;
    std::vector<double> trial(d);
    std::vector<double> trial_grad;
    double f_trial = f;
    bool accepted = false;
    for (int k = 0; k < 60 && !accepted; ++k, step *= 0.5) {
      for (std::size_t j = 0; j < d; ++j) {
        trial[j] = params[j] + step * dir[static_cast<Eigen::Index>(j)];
      }
      if (trial == params) break;
      f_trial = objective.value(trial);
      if (f_trial < f && f_trial <= f + 1e-4 * step * slope) {
        accepted = true;
        trial_grad = objective.gradient(trial);
      } else if (std::abs(f_trial - f) <= noise) {
        trial_grad = objective.gradient(trial);
        accepted = inf_norm(trial_grad) < g_norm;
      }
    }
    if (!accepted) break;
    params = trial;
    f = f_trial;
    grad = std::move(trial_grad);
    if (!std::isfinite(f)) throw NonConvergence(inf_norm(grad));
  }

  fit.gradient_norm = inf_norm(grad);
  fit.epochs = epoch;
  if (!(fit.gradient_norm < options.tolerance)) throw NonConvergence(fit.gradient_norm);
  fit.weights.assign(params.begin(), params.end() - 1);
  fit.bias = params.back();
  return fit;
}

}  // namespace cityexpo
