#pragma once

#include "asymdec/convexify.hpp"
#include "asymdec/dataset.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace asymdec {

using Json = nlohmann::json;

enum class ModelFamily { Linear, Lasso, Boosting, Shallow, Deep };

std::string_view to_string(ModelFamily family) noexcept;
// Accepts "linear" (alias "logit"), "lasso", "boosting", "shallow", "deep".
ModelFamily parse_family(std::string_view name);
bool is_network(ModelFamily family) noexcept;

// Per-feature affine map z = (x - mean) / scale; scale is never zero.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardization fit(const RowMatrix& X);
  static Standardization identity(std::size_t dim);
  std::size_t dim() const noexcept { return mean.size(); }
  void apply(std::span<const double> x, std::span<double> out) const;
  RowMatrix apply(const RowMatrix& X) const;
};

// Intercept followed by every monomial of the standardized features up to
// the given total degree (1 to 3), in lexicographic index order.
class Dictionary {
 public:
  Dictionary(std::size_t dim, int degree);

  std::size_t dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }
  std::size_t size() const noexcept { return terms_.size(); }
  std::vector<std::string> names(std::span<const std::string> features) const;

  void expand(std::span<const double> z, std::span<double> out) const;
  Eigen::MatrixXd design(const RowMatrix& Z) const;

 private:
  struct Term {
    int a = -1, b = -1, c = -1;
  };
  std::size_t dim_;
  int degree_;
  std::vector<Term> terms_;
};

struct LinearModel {
  Standardization standardization;
  int degree = 1;
  Eigen::VectorXd theta;  // one coefficient per dictionary term

  double score(std::span<const double> x) const;
};

// h(x) = polarity * (x[feature] > split ? +1 : -1); feature < 0 is the
// constant stump h(x) = polarity.
struct Stump {
  int feature = -1;
  double split = 0.0;
  int polarity = 1;
  double weight = 0.0;  // >= 0

  double vote(std::span<const double> x) const noexcept {
    if (feature < 0) return polarity;
    return x[static_cast<std::size_t>(feature)] > split ? polarity : -polarity;
  }
};

struct StumpEnsemble {
  std::vector<Stump> stumps;
  double l1_budget = 0.0;  // 0 means unconstrained

  double score(std::span<const double> x) const noexcept;
  double l1_norm() const noexcept;
};

enum class Activation { Sigmoid, Relu };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Hidden layers feed a scalar score s(x); the output stage adds c * scale
// and passes the sum through relu(u + 1) - relu(u - 1) - 1, which is the
// clamp of u to [-1, 1].
struct NeuralNet {
  Standardization standardization;
  Activation activation = Activation::Relu;
  std::vector<DenseLayer> hidden;
  DenseLayer output;  // 1 x width
  double threshold_scale = 1.0;
  double threshold_scale_bound = 1.0;  // |threshold_scale| <= bound

  double inner_score(std::span<const double> x) const;
  double predict(std::span<const double> x, double c) const;
  // Throws SchemaError when layer shapes do not chain.
  void check_shapes() const;
};

double output_stage(double u) noexcept;

class SoftDecisionModel {
 public:
  static constexpr int kSchemaVersion = 1;

  ModelFamily family = ModelFamily::Linear;
  ConvexifierKind convexifier = ConvexifierKind::Logistic;
  std::vector<std::string> feature_names;
  std::variant<LinearModel, StumpEnsemble, NeuralNet> body;
  // Threshold fed to network families. Empty means the caller supplies the
  // per-row threshold of the evaluation loss.
  std::optional<double> fixed_threshold;
  std::uint64_t seed = 0;
  Json hyperparameters = Json::object();

  std::size_t dim() const noexcept { return feature_names.size(); }
  bool uses_threshold() const noexcept { return is_network(family); }

  // Linear and ensemble families return the raw score; networks lie in
  // [-1, 1]. Throws DimensionMismatch on a wrong-length input.
  double predict_soft(std::span<const double> x, double c = 0.5) const;
  int decide(std::span<const double> x, double c = 0.5) const;

  Eigen::VectorXd predict_soft(const RowMatrix& X, const Eigen::VectorXd& c) const;

  Json to_json() const;
  // Throws SchemaError on malformed documents.
  static SoftDecisionModel from_json(const Json& doc);
};

// sign with sign(0) = +1.
constexpr int sign_of(double z) noexcept { return z >= 0.0 ? 1 : -1; }

}  // namespace asymdec
