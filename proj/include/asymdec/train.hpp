#pragma once

#include "asymdec/convexify.hpp"
#include "asymdec/loss.hpp"
#include "asymdec/models.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace asymdec {

enum class Optimizer { Adam, Sgd };
enum class StepSchedule { Constant, InverseSqrt };

struct TrainConfig {
  ConvexifierKind convexifier = ConvexifierKind::Logistic;
  std::size_t max_iterations = 10000;
  double tolerance = 1e-8;  // relative objective change
  std::uint64_t seed = 0;

  // Linear families.
  int degree = 1;

  // LASSO. A non-negative lambda skips cross-validation.
  double lambda = -1.0;
  std::vector<double> lambda_grid;  // empty: geometric grid below lambda_max
  std::size_t lambda_count = 20;
  double lambda_min_ratio = 1e-3;
  std::size_t folds = 10;

  // Boosting.
  std::size_t rounds = 100;
  double shrinkage = 0.5;
  double l1_budget = 0.0;  // 0 disables the budget

  // Networks. Empty hidden_widths picks the family default.
  std::vector<std::size_t> hidden_widths;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  StepSchedule schedule = StepSchedule::Constant;
  double init_scale = 1.0;  // multiplies the fan-based uniform bound

  // Throws ConfigError on out-of-range values.
  void check() const;
  Json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const Json& doc);
};

struct CvTable {
  std::vector<double> candidates;  // lambda values or round counts
  std::vector<double> mean_risk;
  std::vector<std::vector<double>> fold_risk;  // [candidate][fold]
  std::size_t best = 0;

  Json to_json() const;
};

struct FitResult {
  SoftDecisionModel model;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;
  std::optional<CvTable> cv;
};

// (1/n) sum omega_i phi(-y_i f(x_i)). Throws EmptyData.
double empirical_risk(const SoftDecisionModel& model, const WeightedData& data,
                      ConvexifierKind convexifier);
double empirical_risk(const Eigen::VectorXd& scores, const WeightedData& data,
                      ConvexifierKind convexifier);

// Weighted surrogate risk of a linear score D * theta and its gradient.
// Kept public so solvers and gradient checks share one definition.
class LinearObjective {
 public:
  LinearObjective(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& omega, ConvexifierKind kind);

  double value(const Eigen::VectorXd& theta) const;
  // Returns the value and writes the (sub)gradient.
  double value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& gradient) const;
  Eigen::Index size() const noexcept { return design_.cols(); }

 private:
  const Eigen::MatrixXd& design_;
  const Eigen::VectorXd& y_;
  const Eigen::VectorXd& omega_;
  ConvexifierKind kind_;
};

FitResult fit_linear(const WeightedData& data, const TrainConfig& config);
FitResult fit_lasso(const WeightedData& data, const TrainConfig& config);
FitResult fit_boosting(const WeightedData& data, const TrainConfig& config);
FitResult fit_network(const WeightedData& data, const TrainConfig& config, ModelFamily family);
FitResult fit(const WeightedData& data, ModelFamily family, const TrainConfig& config);

// Fold id of each row: a seeded permutation dealt round-robin into K folds.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

struct CvSelection {
  std::size_t best = 0;
  CvTable table;
};

// Fits every candidate on each training fold and scores held-out weighted
// surrogate risk. Ties prefer larger lambda, then fewer rounds, then the
// earlier candidate.
CvSelection cross_validate(const WeightedData& data, const std::vector<TrainConfig>& candidates,
                           ModelFamily family, std::size_t folds, std::uint64_t seed);

// Penalty floor 8 k L F sqrt(2 log(2p) / n) + 4 k L M F sqrt(2 log(1/delta) / n)
// for slack k > 1, surrogate Lipschitz constant L, loss bound M and
// dictionary bound F. Reported as a diagnostic; selection uses
// cross-validation.
double theoretical_lambda(std::size_t n, std::size_t p, double slack, double lipschitz,
                          double loss_bound, double feature_bound, double delta);

}  // namespace asymdec
