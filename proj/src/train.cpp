#include "asymdec/train.hpp"

#include "asymdec/errors.hpp"
#include "asymdec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace asymdec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <typename T>
void read_key(const Json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("train config key '") + key + "' has the wrong type");
  }
}

}  // namespace

void TrainConfig::check() const {
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (degree < 1 || degree > 3) throw ConfigError("degree must be 1, 2 or 3");
  for (double l : lambda_grid) {
    if (!(l > 0.0)) throw ConfigError("lambda grid values must be positive");
  }
  if (lambda_count < 1) throw ConfigError("lambda_count must be >= 1");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio <= 1.0)) {
    throw ConfigError("lambda_min_ratio must lie in (0, 1]");
  }
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ConfigError("shrinkage must lie in (0, 1]");
  if (!(l1_budget >= 0.0)) throw ConfigError("l1_budget must be non-negative");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(init_scale > 0.0)) throw ConfigError("init_scale must be positive");
  for (auto w : hidden_widths) {
    if (w < 1) throw ConfigError("hidden widths must be >= 1");
  }
}

Json TrainConfig::to_json() const {
  return Json{{"convexifier", std::string(asymdec::to_string(convexifier))},
              {"max_iterations", max_iterations},
              {"tolerance", tolerance},
              {"seed", seed},
              {"degree", degree},
              {"lambda", lambda},
              {"lambda_grid", lambda_grid},
              {"lambda_count", lambda_count},
              {"lambda_min_ratio", lambda_min_ratio},
              {"folds", folds},
              {"rounds", rounds},
              {"shrinkage", shrinkage},
              {"l1_budget", l1_budget},
              {"hidden_widths", hidden_widths},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"optimizer", optimizer == Optimizer::Adam ? "adam" : "sgd"},
              {"schedule", schedule == StepSchedule::Constant ? "constant" : "inv_sqrt"},
              {"init_scale", init_scale}};
}

TrainConfig TrainConfig::from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig config;
  const Json known = config.to_json();
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError("unknown train config key '" + key + "'");
  }
  if (doc.contains("convexifier")) {
    if (!doc.at("convexifier").is_string()) throw ConfigError("convexifier must be a string");
    config.convexifier = parse_convexifier(doc.at("convexifier").get<std::string>());
  }
  read_key(doc, "max_iterations", config.max_iterations);
  read_key(doc, "tolerance", config.tolerance);
  read_key(doc, "seed", config.seed);
  read_key(doc, "degree", config.degree);
  read_key(doc, "lambda", config.lambda);
  read_key(doc, "lambda_grid", config.lambda_grid);
  read_key(doc, "lambda_count", config.lambda_count);
  read_key(doc, "lambda_min_ratio", config.lambda_min_ratio);
  read_key(doc, "folds", config.folds);
  read_key(doc, "rounds", config.rounds);
  read_key(doc, "shrinkage", config.shrinkage);
  read_key(doc, "l1_budget", config.l1_budget);
  read_key(doc, "hidden_widths", config.hidden_widths);
  read_key(doc, "epochs", config.epochs);
  read_key(doc, "batch_size", config.batch_size);
  read_key(doc, "learning_rate", config.learning_rate);
  read_key(doc, "init_scale", config.init_scale);
  if (doc.contains("optimizer")) {
    const auto name = doc.at("optimizer").get<std::string>();
    if (name == "adam") {
      config.optimizer = Optimizer::Adam;
    } else if (name == "sgd") {
      config.optimizer = Optimizer::Sgd;
    } else {
      throw ConfigError("optimizer must be adam or sgd");
    }
  }
  if (doc.contains("schedule")) {
    const auto name = doc.at("schedule").get<std::string>();
    if (name == "constant") {
      config.schedule = StepSchedule::Constant;
    } else if (name == "inv_sqrt") {
      config.schedule = StepSchedule::InverseSqrt;
    } else {
      throw ConfigError("schedule must be constant or inv_sqrt");
    }
  }
  config.check();
  return config;
}

Json CvTable::to_json() const {
  return Json{{"candidates", candidates},
              {"mean_risk", mean_risk},
              {"fold_risk", fold_risk},
              {"best", best}};
}

double empirical_risk(const Eigen::VectorXd& scores, const WeightedData& data,
                      ConvexifierKind convexifier) {
  if (data.empty()) throw EmptyData("empirical risk of an empty sample");
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    total += data.omega[i] * phi(convexifier, -data.y[i] * scores[i]);
  }
  return total / static_cast<double>(data.size());
}

double empirical_risk(const SoftDecisionModel& model, const WeightedData& data,
                      ConvexifierKind convexifier) {
  if (data.empty()) throw EmptyData("empirical risk of an empty sample");
  return empirical_risk(model.predict_soft(data.X, data.c), data, convexifier);
}

LinearObjective::LinearObjective(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& omega, ConvexifierKind kind)
    : design_(design), y_(y), omega_(omega), kind_(kind) {}

double LinearObjective::value(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd scores = design_ * theta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    total += omega_[i] * phi(kind_, -y_[i] * scores[i]);
  }
  return total / static_cast<double>(scores.size());
}

double LinearObjective::value_and_gradient(const Eigen::VectorXd& theta,
                                           Eigen::VectorXd& gradient) const {
  const Eigen::VectorXd scores = design_ * theta;
  const auto n = scores.size();
  Eigen::VectorXd slope(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = -y_[i] * scores[i];
    total += omega_[i] * phi(kind_, z);
    slope[i] = -y_[i] * omega_[i] * phi_derivative(kind_, z);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  gradient = design_.transpose() * slope * inv_n;
  return total * inv_n;
}

namespace {

// Standardized features expanded into the monomial dictionary.
struct LinearProblem {
  Standardization standardization;
  int degree = 1;
  Eigen::MatrixXd design;
};

LinearProblem prepare(const WeightedData& data, int degree) {
  LinearProblem p;
  p.standardization = Standardization::fit(data.X);
  p.degree = degree;
  p.design = Dictionary(data.dim(), degree).design(p.standardization.apply(data.X));
  return p;
}

Eigen::MatrixXd design_for(const LinearProblem& p, const RowMatrix& X) {
  return Dictionary(p.standardization.dim(), p.degree).design(p.standardization.apply(X));
}

double mean_weight(const WeightedData& data) {
  const double m = data.omega.mean();
  return m > 0.0 ? m : 1.0;
}

double penalty(const Eigen::VectorXd& theta, double lambda) {
  if (lambda == 0.0) return 0.0;
  return lambda * theta.tail(theta.size() - 1).cwiseAbs().sum();
}

// Soft-thresholds every coefficient except the intercept.
void shrink(Eigen::VectorXd& theta, double amount) {
  if (amount == 0.0) return;
  for (Eigen::Index j = 1; j < theta.size(); ++j) {
    const double v = theta[j];
    theta[j] = v > amount ? v - amount : (v < -amount ? v + amount : 0.0);
  }
}

struct Descent {
  Eigen::VectorXd theta;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

// Proximal gradient on mean(omega phi(-y D theta)) + lambda |theta_{1:}|_1.
// Smooth surrogates accept a step when the quadratic majorizer bounds the
// objective; the hinge accepts any strict decrease. Both keep the trace
// monotone.
Descent descend(const LinearObjective& objective, Eigen::VectorXd theta, double lambda,
                const TrainConfig& config, double weight_scale) {
  const bool smooth = config.convexifier != ConvexifierKind::Hinge;
  Descent out;
  Eigen::VectorXd gradient;
  double f = objective.value_and_gradient(theta, gradient);
  double total = f + penalty(theta, lambda);
  if (!std::isfinite(total)) {
    throw NonFiniteObjective("objective is not finite at the starting point");
  }
  out.trace.push_back(total);

  const double step_floor = 1e-30 / weight_scale;
  const double step_cap = 1e8 / weight_scale;
  double step = 1.0 / weight_scale;
  const double gradient_tol = std::sqrt(config.tolerance) * weight_scale;

  Eigen::VectorXd candidate;
  Eigen::VectorXd candidate_gradient;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    double candidate_f = kInf;
    double candidate_total = kInf;
    bool accepted = false;
    while (step >= step_floor) {
      candidate = theta - step * gradient;
      shrink(candidate, step * lambda);
      candidate_f = objective.value(candidate);
      candidate_total = candidate_f + penalty(candidate, lambda);
      if (std::isfinite(candidate_total)) {
        if (smooth) {
          const Eigen::VectorXd delta = candidate - theta;
          const double bound = f + gradient.dot(delta) + delta.squaredNorm() / (2.0 * step);
          accepted = candidate_f <= bound;
        } else {
          accepted = candidate_total < total;
        }
      }
      if (accepted) break;
      step *= 0.5;
    }
    out.iterations = it + 1;
    if (!accepted) {
      // No admissible step: at a (sub)stationary point up to rounding.
      out.converged = true;
      break;
    }

    const Eigen::VectorXd delta = candidate - theta;
    const double mapped_gradient = delta.cwiseAbs().maxCoeff() / step;
    candidate_f = objective.value_and_gradient(candidate, candidate_gradient);
    candidate_total = candidate_f + penalty(candidate, lambda);

    double next_step = 2.0 * step;
    if (smooth) {
      const double curvature = delta.dot(candidate_gradient - gradient);
      if (curvature > 0.0) next_step = delta.squaredNorm() / curvature;
    }
    step = std::clamp(next_step, step_floor, step_cap);

    const double decrease = total - candidate_total;
    const double relative = decrease / std::max(std::abs(total), 1e-300);
    theta = candidate;
    gradient = candidate_gradient;
    f = candidate_f;
    total = candidate_total;
    out.trace.push_back(total);

    if (relative < config.tolerance && (!smooth || mapped_gradient <= gradient_tol)) {
      out.converged = true;
      break;
    }
  }
  out.theta = std::move(theta);
  out.objective = total;
  return out;
}

SoftDecisionModel linear_model(const WeightedData& data, const LinearProblem& problem,
                               Eigen::VectorXd theta, ModelFamily family,
                               const TrainConfig& config) {
  SoftDecisionModel model;
  model.family = family;
  model.convexifier = config.convexifier;
  model.feature_names = data.feature_names;
  model.seed = config.seed;
  model.hyperparameters = config.to_json();
  LinearModel body;
  body.standardization = problem.standardization;
  body.degree = problem.degree;
  body.theta = std::move(theta);
  model.body = std::move(body);
  return model;
}

void require_data(const WeightedData& data) {
  if (data.empty()) throw EmptyData("cannot fit a model to an empty sample");
}

}  // namespace

FitResult fit_linear(const WeightedData& data, const TrainConfig& config) {
  require_data(data);
  config.check();
  const LinearProblem problem = prepare(data, config.degree);
  const LinearObjective objective(problem.design, data.y, data.omega, config.convexifier);
  Descent d = descend(objective, Eigen::VectorXd::Zero(problem.design.cols()), 0.0, config,
                      mean_weight(data));
  FitResult result;
  result.objective = d.objective;
  result.iterations = d.iterations;
  result.converged = d.converged;
  result.trace = std::move(d.trace);
  result.model = linear_model(data, problem, std::move(d.theta), ModelFamily::Linear, config);
  return result;
}

namespace {

// Largest penalty that still moves a coefficient off zero, evaluated at the
// intercept-only optimum.
double lambda_max(const LinearProblem& problem, const WeightedData& data, const TrainConfig& config) {
  const Eigen::MatrixXd intercept = problem.design.leftCols(1);
  const LinearObjective only(intercept, data.y, data.omega, config.convexifier);
  const Descent d = descend(only, Eigen::VectorXd::Zero(1), 0.0, config, mean_weight(data));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(problem.design.cols());
  theta[0] = d.theta[0];
  const LinearObjective full(problem.design, data.y, data.omega, config.convexifier);
  Eigen::VectorXd gradient;
  full.value_and_gradient(theta, gradient);
  if (gradient.size() <= 1) return 1.0;
  const double top = gradient.tail(gradient.size() - 1).cwiseAbs().maxCoeff();
  return top > 0.0 ? top : 1.0;
}

std::vector<double> lambda_path(const LinearProblem& problem, const WeightedData& data,
                                const TrainConfig& config) {
  std::vector<double> grid = config.lambda_grid;
  if (grid.empty()) {
    const double top = lambda_max(problem, data, config);
    const std::size_t k = config.lambda_count;
    for (std::size_t i = 0; i < k; ++i) {
      const double frac = k == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
      grid.push_back(top * std::pow(config.lambda_min_ratio, frac));
    }
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

FitResult fit_lasso(const WeightedData& data, const TrainConfig& config) {
  require_data(data);
  config.check();
  const LinearProblem problem = prepare(data, config.degree);
  const LinearObjective objective(problem.design, data.y, data.omega, config.convexifier);
  const double scale = mean_weight(data);

  FitResult result;
  double chosen = config.lambda;
  if (chosen < 0.0) {
    const auto grid = lambda_path(problem, data, config);
    if (data.size() < config.folds) {
      throw EmptyData("need at least as many rows as folds for cross-validation");
    }
    CvTable table;
    table.candidates = grid;
    table.fold_risk.assign(grid.size(), std::vector<double>(config.folds, 0.0));
    const auto fold = fold_assignment(data.size(), config.folds, config.seed);
    for (std::size_t k = 0; k < config.folds; ++k) {
      std::vector<std::size_t> train_rows;
      std::vector<std::size_t> held_rows;
      for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == k ? held_rows : train_rows).push_back(i);
      const WeightedData train = data.subset(train_rows);
      const WeightedData held = data.subset(held_rows);
      const LinearProblem fold_problem = prepare(train, config.degree);
      const Eigen::MatrixXd held_design = design_for(fold_problem, held.X);
      const LinearObjective fold_objective(fold_problem.design, train.y, train.omega,
                                           config.convexifier);
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(fold_problem.design.cols());
      for (std::size_t g = 0; g < grid.size(); ++g) {
        theta = descend(fold_objective, theta, grid[g], config, mean_weight(train)).theta;
        table.fold_risk[g][k] = empirical_risk(held_design * theta, held, config.convexifier);
      }
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double sum = 0.0;
      for (double r : table.fold_risk[g]) sum += r;
      table.mean_risk.push_back(sum / static_cast<double>(config.folds));
      // Strict comparison keeps the earlier, larger penalty on ties.
      if (table.mean_risk[g] < table.mean_risk[table.best]) table.best = g;
    }
    chosen = grid[table.best];

    // Warm-started path down to the chosen penalty.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(problem.design.cols());
    Descent d;
    for (std::size_t g = 0; g <= table.best; ++g) {
      d = descend(objective, theta, grid[g], config, scale);
      theta = d.theta;
    }
    result.objective = d.objective;
    result.iterations = d.iterations;
    result.converged = d.converged;
    result.trace = std::move(d.trace);
    result.cv = std::move(table);
    result.model = linear_model(data, problem, std::move(d.theta), ModelFamily::Lasso, config);
  } else {
    Descent d = descend(objective, Eigen::VectorXd::Zero(problem.design.cols()), chosen, config,
                        scale);
    result.objective = d.objective;
    result.iterations = d.iterations;
    result.converged = d.converged;
    result.trace = std::move(d.trace);
    result.model = linear_model(data, problem, std::move(d.theta), ModelFamily::Lasso, config);
  }
  result.model.hyperparameters["lambda"] = chosen;
  return result;
}

namespace {

// Candidate splits for one feature: rows sorted by value and the positions
// where the value strictly increases.
struct SortedFeature {
  std::vector<std::size_t> order;
  std::vector<double> values;  // sorted
};

std::vector<SortedFeature> sort_features(const RowMatrix& X) {
  std::vector<SortedFeature> out(static_cast<std::size_t>(X.cols()));
  const auto n = static_cast<std::size_t>(X.rows());
  for (std::size_t j = 0; j < out.size(); ++j) {
    auto& f = out[j];
    f.order.resize(n);
    std::iota(f.order.begin(), f.order.end(), std::size_t{0});
    const auto col = static_cast<Eigen::Index>(j);
    std::stable_sort(f.order.begin(), f.order.end(), [&](std::size_t a, std::size_t b) {
      return X(static_cast<Eigen::Index>(a), col) < X(static_cast<Eigen::Index>(b), col);
    });
    f.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) f.values[k] = X(static_cast<Eigen::Index>(f.order[k]), col);
  }
  return out;
}

// Stump maximizing sum_i r_i h(x_i), with the matching polarity.
Stump best_stump(const std::vector<SortedFeature>& features, const Eigen::VectorXd& residual,
                 double& correlation) {
  const double total = residual.sum();
  Stump best;
  best.feature = -1;
  best.polarity = total >= 0.0 ? 1 : -1;
  double best_abs = std::abs(total);
  for (std::size_t j = 0; j < features.size(); ++j) {
    const auto& f = features[j];
    double left = 0.0;
    for (std::size_t k = 0; k + 1 < f.order.size(); ++k) {
      left += residual[static_cast<Eigen::Index>(f.order[k])];
      if (!(f.values[k] < f.values[k + 1])) continue;
      // h = +1 to the right of the split.
      const double corr = total - 2.0 * left;
      if (std::abs(corr) > best_abs) {
        best_abs = std::abs(corr);
        best.feature = static_cast<int>(j);
        best.split = 0.5 * (f.values[k] + f.values[k + 1]);
        best.polarity = corr >= 0.0 ? 1 : -1;
      }
    }
  }
  correlation = best_abs;
  return best;
}

double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

FitResult fit_boosting(const WeightedData& data, const TrainConfig& config) {
  require_data(data);
  config.check();
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto kind = config.convexifier;
  const auto features = sort_features(data.X);

  StumpEnsemble ensemble;
  ensemble.l1_budget = config.l1_budget;
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd votes(n);
  Eigen::VectorXd residual(n);

  FitResult result;
  double objective = empirical_risk(scores, data, kind);
  result.trace.push_back(objective);
  result.converged = false;

  for (std::size_t round = 0; round < config.rounds; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) {
      residual[i] = data.y[i] * data.omega[i] * phi_derivative(kind, -data.y[i] * scores[i]);
    }
    double correlation = 0.0;
    Stump stump = best_stump(features, residual, correlation);
    if (!(correlation > 1e-14 * residual.cwiseAbs().sum())) break;  // no stump improves
    for (Eigen::Index i = 0; i < n; ++i) {
      votes[i] = stump.vote(std::span<const double>(data.X.row(i).data(), data.dim()));
    }

    double step = 0.0;
    if (kind == ConvexifierKind::Exponential) {
      double agree = 0.0;
      double disagree = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double w = data.omega[i] * std::exp(-data.y[i] * scores[i]);
        (data.y[i] * votes[i] > 0.0 ? agree : disagree) += w;
      }
      disagree = std::max(disagree, 1e-12 * (agree + disagree));
      step = 0.5 * std::log(agree / disagree);
    } else {
      auto along = [&](double alpha) {
        return empirical_risk(scores + alpha * votes, data, kind);
      };
      double hi = 1.0;
      while (hi < 1e6 && along(hi) < along(0.5 * hi)) hi *= 2.0;
      step = golden_section(along, 0.0, hi, 1e-10);
    }
    step *= config.shrinkage;
    if (config.l1_budget > 0.0) step = std::min(step, config.l1_budget - ensemble.l1_norm());
    if (!(step > 0.0)) {
      result.converged = config.l1_budget > 0.0;
      break;
    }

    stump.weight = step;
    ensemble.stumps.push_back(stump);
    scores += step * votes;
    const double updated = empirical_risk(scores, data, kind);
    if (!std::isfinite(updated)) throw NonFiniteObjective("boosting objective overflowed");
    result.trace.push_back(updated);
    const double relative = (objective - updated) / std::max(std::abs(objective), 1e-300);
    objective = updated;
    if (relative < config.tolerance) {
      result.converged = true;
      break;
    }
    if (config.l1_budget > 0.0 && ensemble.l1_norm() >= config.l1_budget) {
      result.converged = true;
      break;
    }
  }
  if (ensemble.stumps.size() == config.rounds) result.converged = true;

  result.objective = objective;
  result.iterations = ensemble.stumps.size();
  result.model.family = ModelFamily::Boosting;
  result.model.convexifier = kind;
  result.model.feature_names = data.feature_names;
  result.model.seed = config.seed;
  result.model.hyperparameters = config.to_json();
  result.model.body = std::move(ensemble);
  return result;
}

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation kind) {
  if (kind == Activation::Relu) return z.cwiseMax(0.0);
  return z.unaryExpr([](double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  });
}

// Derivative of the activation expressed through its output.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& a, Activation kind) {
  if (kind == Activation::Relu) return (a.array() > 0.0).cast<double>().matrix();
  return (a.array() * (1.0 - a.array())).matrix();
}

struct Moments {
  std::vector<Eigen::MatrixXd> weight_m, weight_v;
  std::vector<Eigen::VectorXd> bias_m, bias_v;
  double scale_m = 0.0, scale_v = 0.0;
};

// Gradients with the same layout as the network parameters.
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
  double scale = 0.0;
};

// Layer stack: hidden layers followed by the output layer.
std::vector<DenseLayer*> layers_of(NeuralNet& net) {
  std::vector<DenseLayer*> out;
  for (auto& layer : net.hidden) out.push_back(&layer);
  out.push_back(&net.output);
  return out;
}

// Mean weighted surrogate loss over the given columns of Z (features as
// rows) and, when requested, its gradient.
double batch_loss(const NeuralNet& net, const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& omega, const Eigen::VectorXd& c, ConvexifierKind kind,
                  Gradients* grad) {
  const auto m = Z.cols();
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(net.hidden.size() + 1);
  acts.push_back(Z);
  for (const auto& layer : net.hidden) {
    Eigen::MatrixXd pre = layer.weight * acts.back();
    pre.colwise() += layer.bias;
    acts.push_back(activate(pre, net.activation));
  }
  Eigen::RowVectorXd score = net.output.weight * acts.back();
  score.array() += net.output.bias[0];

  double total = 0.0;
  Eigen::RowVectorXd upstream(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double u = score[i] + c[i] * net.threshold_scale;
    const double out = output_stage(u);
    const double z = -y[i] * out;
    total += omega[i] * phi(kind, z);
    // relu(u + 1) - relu(u - 1) has slope 1 strictly inside (-1, 1).
    const double stage_slope = (u + 1.0 > 0.0 ? 1.0 : 0.0) - (u - 1.0 > 0.0 ? 1.0 : 0.0);
    upstream[i] = -y[i] * omega[i] * phi_derivative(kind, z) * stage_slope;
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  if (!grad) return total * inv_m;

  upstream *= inv_m;
  const std::size_t depth = net.hidden.size();
  grad->weight.resize(depth + 1);
  grad->bias.resize(depth + 1);
  grad->scale = upstream.dot(c.transpose());

  grad->weight[depth] = upstream * acts.back().transpose();
  grad->bias[depth] = Eigen::VectorXd::Constant(1, upstream.sum());
  Eigen::MatrixXd delta = net.output.weight.transpose() * upstream;
  for (std::size_t l = depth; l-- > 0;) {
    delta = delta.cwiseProduct(activation_slope(acts[l + 1], net.activation));
    grad->weight[l] = delta * acts[l].transpose();
    grad->bias[l] = delta.rowwise().sum();
    if (l > 0) delta = net.hidden[l].weight.transpose() * delta;
  }
  return total * inv_m;
}

}  // namespace

FitResult fit_network(const WeightedData& data, const TrainConfig& config, ModelFamily family) {
  require_data(data);
  config.check();
  if (!is_network(family)) throw ConfigError("fit_network needs the shallow or deep family");
  const auto kind = config.convexifier;
  const std::size_t n = data.size();
  const std::size_t dim = data.dim();

  NeuralNet net;
  net.standardization = Standardization::fit(data.X);
  net.activation = family == ModelFamily::Deep ? Activation::Relu : Activation::Sigmoid;
  std::vector<std::size_t> widths = config.hidden_widths;
  if (widths.empty()) {
    widths = family == ModelFamily::Deep ? std::vector<std::size_t>{15, 15}
                                         : std::vector<std::size_t>{15};
  }
  net.threshold_scale = 1.0;
  net.threshold_scale_bound = static_cast<double>(n);

  Rng rng(config.seed);
  auto glorot = [&](std::size_t out, std::size_t in) {
    DenseLayer layer;
    const double bound =
        config.init_scale * std::sqrt(6.0 / static_cast<double>(in + out));
    layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index col = 0; col < layer.weight.cols(); ++col) {
        layer.weight(r, col) = bound * (2.0 * rng.uniform() - 1.0);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    return layer;
  };
  std::size_t fan_in = dim;
  for (auto w : widths) {
    net.hidden.push_back(glorot(w, fan_in));
    fan_in = w;
  }
  net.output = glorot(1, fan_in);

  // Features as columns for batched products.
  const Eigen::MatrixXd Z = net.standardization.apply(data.X).transpose();

  Moments moments;
  for (auto* layer : layers_of(net)) {
    moments.weight_m.push_back(Eigen::MatrixXd::Zero(layer->weight.rows(), layer->weight.cols()));
    moments.weight_v.push_back(Eigen::MatrixXd::Zero(layer->weight.rows(), layer->weight.cols()));
    moments.bias_m.push_back(Eigen::VectorXd::Zero(layer->bias.size()));
    moments.bias_v.push_back(Eigen::VectorXd::Zero(layer->bias.size()));
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double epsilon = 1e-7;

  FitResult result;
  auto full_objective = [&] {
    return batch_loss(net, Z, data.y, data.omega, data.c, kind, nullptr);
  };
  result.trace.push_back(full_objective());
  if (!std::isfinite(result.trace.back())) {
    throw NonFiniteObjective("network objective is not finite at initialization");
  }

  const std::size_t batch = std::min(config.batch_size, n);
  std::size_t step_count = 0;
  Gradients grad;
  Eigen::MatrixXd Zb;
  Eigen::VectorXd yb, wb, cb;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      const auto m = static_cast<Eigen::Index>(stop - start);
      Zb.resize(Z.rows(), m);
      yb.resize(m);
      wb.resize(m);
      cb.resize(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const auto r = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(k)]);
        Zb.col(k) = Z.col(r);
        yb[k] = data.y[r];
        wb[k] = data.omega[r];
        cb[k] = data.c[r];
      }
      batch_loss(net, Zb, yb, wb, cb, kind, &grad);
      ++step_count;

      double rate = config.learning_rate;
      if (config.schedule == StepSchedule::InverseSqrt) {
        rate /= std::sqrt(static_cast<double>(step_count));
      }
      auto layers = layers_of(net);
      if (config.optimizer == Optimizer::Adam) {
        const double t = static_cast<double>(step_count);
        const double correct1 = 1.0 - std::pow(beta1, t);
        const double correct2 = 1.0 - std::pow(beta2, t);
        auto adam = [&](auto& param, const auto& g, auto& m1, auto& m2) {
          m1 = beta1 * m1 + (1.0 - beta1) * g;
          m2 = beta2 * m2 + (1.0 - beta2) * g.cwiseProduct(g);
          param.array() -= rate * (m1.array() / correct1) /
                           ((m2.array() / correct2).sqrt() + epsilon);
        };
        for (std::size_t l = 0; l < layers.size(); ++l) {
          adam(layers[l]->weight, grad.weight[l], moments.weight_m[l], moments.weight_v[l]);
          adam(layers[l]->bias, grad.bias[l], moments.bias_m[l], moments.bias_v[l]);
        }
        moments.scale_m = beta1 * moments.scale_m + (1.0 - beta1) * grad.scale;
        moments.scale_v = beta2 * moments.scale_v + (1.0 - beta2) * grad.scale * grad.scale;
        net.threshold_scale -=
            rate * (moments.scale_m / correct1) / (std::sqrt(moments.scale_v / correct2) + epsilon);
      } else {
        for (std::size_t l = 0; l < layers.size(); ++l) {
          layers[l]->weight -= rate * grad.weight[l];
          layers[l]->bias -= rate * grad.bias[l];
        }
        net.threshold_scale -= rate * grad.scale;
      }
      net.threshold_scale = std::clamp(net.threshold_scale, -net.threshold_scale_bound,
                                       net.threshold_scale_bound);
    }
    const double value = full_objective();
    if (!std::isfinite(value)) throw NonFiniteObjective("network objective diverged");
    result.trace.push_back(value);
  }

  result.objective = result.trace.back();
  result.iterations = config.epochs;
  result.converged = true;
  result.model.family = family;
  result.model.convexifier = kind;
  result.model.feature_names = data.feature_names;
  result.model.seed = config.seed;
  result.model.hyperparameters = config.to_json();
  result.model.body = std::move(net);
  return result;
}

FitResult fit(const WeightedData& data, ModelFamily family, const TrainConfig& config) {
  switch (family) {
    case ModelFamily::Linear:
      return fit_linear(data, config);
    case ModelFamily::Lasso:
      return fit_lasso(data, config);
    case ModelFamily::Boosting:
      return fit_boosting(data, config);
    case ModelFamily::Shallow:
    case ModelFamily::Deep:
      return fit_network(data, config, family);
  }
  throw ConfigError("unknown model family");
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("need at least two folds");
  Rng rng(seed);
  const auto order = rng.permutation(n);
  std::vector<std::size_t> fold(n);
  for (std::size_t k = 0; k < n; ++k) fold[order[k]] = k % folds;
  return fold;
}

CvSelection cross_validate(const WeightedData& data, const std::vector<TrainConfig>& candidates,
                           ModelFamily family, std::size_t folds, std::uint64_t seed) {
  if (data.empty()) throw EmptyData("cross-validation on an empty sample");
  if (candidates.empty()) throw ConfigError("cross-validation needs at least one candidate");
  CvSelection out;
  auto& table = out.table;
  for (const auto& cand : candidates) {
    table.candidates.push_back(family == ModelFamily::Boosting ? static_cast<double>(cand.rounds)
                                                               : cand.lambda);
  }
  if (candidates.size() == 1) {
    table.mean_risk.push_back(0.0);
    table.fold_risk.push_back({});
    return out;
  }
  if (data.size() < folds) throw EmptyData("need at least as many rows as folds");

  const auto fold = fold_assignment(data.size(), folds, seed);
  table.fold_risk.assign(candidates.size(), std::vector<double>(folds, 0.0));
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> held_rows;
    for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == k ? held_rows : train_rows).push_back(i);
    const WeightedData train = data.subset(train_rows);
    const WeightedData held = data.subset(held_rows);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const FitResult r = fit(train, family, candidates[c]);
      table.fold_risk[c][k] = empirical_risk(r.model, held, candidates[c].convexifier);
    }
  }
  auto preferred = [&](std::size_t a, std::size_t b) {
    // True when candidate a should replace the current best b.
    if (table.mean_risk[a] != table.mean_risk[b]) return table.mean_risk[a] < table.mean_risk[b];
    if (candidates[a].lambda != candidates[b].lambda) return candidates[a].lambda > candidates[b].lambda;
    if (candidates[a].rounds != candidates[b].rounds) return candidates[a].rounds < candidates[b].rounds;
    return false;
  };
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double sum = 0.0;
    for (double r : table.fold_risk[c]) sum += r;
    table.mean_risk.push_back(sum / static_cast<double>(folds));
    if (c > 0 && preferred(c, table.best)) table.best = c;
  }
  out.best = table.best;
  return out;
}

double theoretical_lambda(std::size_t n, std::size_t p, double slack, double lipschitz,
                          double loss_bound, double feature_bound, double delta) {
  if (n == 0 || p == 0) throw ConfigError("n and p must be positive");
  if (!(slack > 1.0)) throw ConfigError("slack must exceed 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  const double nn = static_cast<double>(n);
  return 8.0 * slack * lipschitz * feature_bound *
             std::sqrt(2.0 * std::log(2.0 * static_cast<double>(p)) / nn) +
         4.0 * slack * lipschitz * loss_bound * feature_bound *
             std::sqrt(2.0 * std::log(1.0 / delta) / nn);
}

}  // namespace asymdec
