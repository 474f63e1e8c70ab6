#ifndef CITYEXPO_LOGISTIC_H_
#define CITYEXPO_LOGISTIC_H_

#include <cstddef>
#include <span>
#include <vector>

namespace cityexpo {

struct TrainingExample {
  int label = 0;                // 1 = close location, 0 = far
  std::vector<double> features;

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

// Negative Bernoulli log-likelihood of a sigmoid-linear model plus an L2
// penalty on the weights (not the intercept), in sum form:
//   f(w, b) = -sum_i [y_i log h_i + (1 - y_i) log(1 - h_i)] + (l2 / 2) |w|^2
// with h_i = sigmoid(w . x_i + b). Parameters are packed as [w..., b].
class LogisticObjective {
 public:
  LogisticObjective(std::span<const TrainingExample> examples, double l2);

  std::size_t dimension() const { return dim_ + 1; }
  double value(std::span<const double> params) const;
  std::vector<double> gradient(std::span<const double> params) const;
  // Row-major (dim+1)^2 Hessian.
  std::vector<double> hessian(std::span<const double> params) const;

 private:
  double margin(std::size_t i, std::span<const double> params) const;

  std::span<const TrainingExample> examples_;
  double l2_;
  std::size_t dim_;
};

struct LogisticOptions {
  double l2 = 1e-4;
  double tolerance = 1e-6;  // on the gradient inf-norm
  int max_epochs = 10000;
};

struct LogisticFit {
  std::vector<double> weights;
  double bias = 0.0;
  int epochs = 0;
  double gradient_norm = 0.0;
};

// Minimizes LogisticObjective from the zero vector using Newton-direction
// descent steps with Armijo backtracking (plain gradient steps when the
// Hessian solve fails). Deterministic. Throws DegenerateTrainingSet when a
// class is missing and NonConvergence when the tolerance is not reached.
LogisticFit train_logistic(std::span<const TrainingExample> examples,
                           const LogisticOptions& options = {});

double sigmoid(double z);

}  // namespace cityexpo

#endif  // CITYEXPO_LOGISTIC_H_
