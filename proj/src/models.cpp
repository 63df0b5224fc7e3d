#include "asymdec/models.hpp"

#include "asymdec/errors.hpp"

#include <algorithm>
#include <cmath>

namespace asymdec {

std::string_view to_string(ModelFamily family) noexcept {
  switch (family) {
    case ModelFamily::Linear:
      return "linear";
    case ModelFamily::Lasso:
      return "lasso";
    case ModelFamily::Boosting:
      return "boosting";
    case ModelFamily::Shallow:
      return "shallow";
    case ModelFamily::Deep:
      return "deep";
  }
  return "linear";
}

ModelFamily parse_family(std::string_view name) {
  if (name == "linear" || name == "logit") return ModelFamily::Linear;
  if (name == "lasso") return ModelFamily::Lasso;
  if (name == "boosting") return ModelFamily::Boosting;
  if (name == "shallow") return ModelFamily::Shallow;
  if (name == "deep") return ModelFamily::Deep;
  throw ConfigError("unknown model family '" + std::string(name) +
                    "' (expected logit, lasso, boosting, shallow or deep)");
}

bool is_network(ModelFamily family) noexcept {
  return family == ModelFamily::Shallow || family == ModelFamily::Deep;
}

Standardization Standardization::fit(const RowMatrix& X) {
  Standardization s;
  const auto n = X.rows();
  const auto d = static_cast<std::size_t>(X.cols());
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (n == 0) return s;
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = X.col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    s.mean[j] = mean;
    const double sd = std::sqrt(var);
    s.scale[j] = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
  }
  return s;
}

Standardization Standardization::identity(std::size_t dim) {
  Standardization s;
  s.mean.assign(dim, 0.0);
  s.scale.assign(dim, 1.0);
  return s;
}

void Standardization::apply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t j = 0; j < mean.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
}

RowMatrix Standardization::apply(const RowMatrix& X) const {
  RowMatrix Z(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const auto k = static_cast<std::size_t>(j);
      Z(i, j) = (X(i, j) - mean[k]) / scale[k];
    }
  }
  return Z;
}

Dictionary::Dictionary(std::size_t dim, int degree) : dim_(dim), degree_(degree) {
  if (degree < 1 || degree > 3) throw ConfigError("polynomial degree must be 1, 2 or 3");
  const int d = static_cast<int>(dim);
  terms_.push_back({});
  for (int a = 0; a < d; ++a) terms_.push_back({a, -1, -1});
  if (degree >= 2) {
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) terms_.push_back({a, b, -1});
    }
  }
  if (degree >= 3) {
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) {
        for (int c = b; c < d; ++c) terms_.push_back({a, b, c});
      }
    }
  }
}

std::vector<std::string> Dictionary::names(std::span<const std::string> features) const {
  std::vector<std::string> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (t.a < 0) {
      out.emplace_back("(intercept)");
      continue;
    }
    std::string name = features[static_cast<std::size_t>(t.a)];
    if (t.b >= 0) name += "*" + features[static_cast<std::size_t>(t.b)];
    if (t.c >= 0) name += "*" + features[static_cast<std::size_t>(t.c)];
    out.push_back(std::move(name));
  }
  return out;
}

void Dictionary::expand(std::span<const double> z, std::span<double> out) const {
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const auto& t = terms_[k];
    double v = 1.0;
    if (t.a >= 0) v *= z[static_cast<std::size_t>(t.a)];
    if (t.b >= 0) v *= z[static_cast<std::size_t>(t.b)];
    if (t.c >= 0) v *= z[static_cast<std::size_t>(t.c)];
    out[k] = v;
  }
}

Eigen::MatrixXd Dictionary::design(const RowMatrix& Z) const {
  Eigen::MatrixXd D(Z.rows(), static_cast<Eigen::Index>(terms_.size()));
  std::vector<double> row(terms_.size());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    expand(std::span<const double>(Z.row(i).data(), dim_), row);
    for (std::size_t k = 0; k < row.size(); ++k) D(i, static_cast<Eigen::Index>(k)) = row[k];
  }
  return D;
}

double LinearModel::score(std::span<const double> x) const {
  const Dictionary dict(standardization.dim(), degree);
  std::vector<double> z(standardization.dim());
  standardization.apply(x, z);
  std::vector<double> terms(dict.size());
  dict.expand(z, terms);
  double s = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) s += theta[static_cast<Eigen::Index>(k)] * terms[k];
  return s;
}

double StumpEnsemble::score(std::span<const double> x) const noexcept {
  double s = 0.0;
  for (const auto& stump : stumps) s += stump.weight * stump.vote(x);
  return s;
}

double StumpEnsemble::l1_norm() const noexcept {
  double s = 0.0;
  for (const auto& stump : stumps) s += std::abs(stump.weight);
  return s;
}

// Evaluated as the clamp it equals: the two-ReLU difference loses the
// bound to rounding once |u| is large.
double output_stage(double u) noexcept { return std::clamp(u, -1.0, 1.0); }

namespace {

Eigen::VectorXd activate(const Eigen::VectorXd& v, Activation kind) {
  if (kind == Activation::Relu) return v.cwiseMax(0.0);
  return v.unaryExpr([](double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  });
}

}  // namespace

double NeuralNet::inner_score(std::span<const double> x) const {
  Eigen::VectorXd h(static_cast<Eigen::Index>(standardization.dim()));
  standardization.apply(x, std::span<double>(h.data(), static_cast<std::size_t>(h.size())));
  for (const auto& layer : hidden) h = activate(layer.weight * h + layer.bias, activation);
  return (output.weight * h + output.bias)(0);
}

double NeuralNet::predict(std::span<const double> x, double c) const {
  return output_stage(inner_score(x) + c * threshold_scale);
}

void NeuralNet::check_shapes() const {
  Eigen::Index width = static_cast<Eigen::Index>(standardization.dim());
  if (standardization.scale.size() != standardization.mean.size()) {
    throw SchemaError("standardization mean and scale differ in length");
  }
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    const auto& layer = hidden[l];
    if (layer.weight.cols() != width || layer.bias.size() != layer.weight.rows() ||
        layer.weight.rows() == 0) {
      throw SchemaError("hidden layer " + std::to_string(l) + " does not chain with its input");
    }
    width = layer.weight.rows();
  }
  if (output.weight.rows() != 1 || output.weight.cols() != width || output.bias.size() != 1) {
    throw SchemaError("output layer does not chain with the last hidden layer");
  }
  if (!(threshold_scale_bound >= 0.0) || std::abs(threshold_scale) > threshold_scale_bound) {
    throw SchemaError("threshold scale exceeds its bound");
  }
}

double SoftDecisionModel::predict_soft(std::span<const double> x, double c) const {
  if (x.size() != dim()) {
    throw DimensionMismatch("model expects " + std::to_string(dim()) + " features, got " +
                            std::to_string(x.size()));
  }
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NeuralNet>) {
          return m.predict(x, fixed_threshold.value_or(c));
        } else {
          return m.score(x);
        }
      },
      body);
}

int SoftDecisionModel::decide(std::span<const double> x, double c) const {
  return sign_of(predict_soft(x, c));
}

Eigen::VectorXd SoftDecisionModel::predict_soft(const RowMatrix& X, const Eigen::VectorXd& c) const {
  if (static_cast<std::size_t>(X.cols()) != dim()) {
    throw DimensionMismatch("model expects " + std::to_string(dim()) + " features, data has " +
                            std::to_string(X.cols()));
  }
  if (const auto* linear = std::get_if<LinearModel>(&body)) {
    const Dictionary dict(dim(), linear->degree);
    return dict.design(linear->standardization.apply(X)) * linear->theta;
  }
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[i] = predict_soft(std::span<const double>(X.row(i).data(), dim()), c.size() ? c[i] : 0.5);
  }
  return out;
}

namespace {

Json vector_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json layer_json(const DenseLayer& layer) {
  return Json{{"weight", matrix_json(layer.weight)}, {"bias", vector_json(layer.bias)}};
}

const Json& field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw SchemaError(std::string("model document is missing '") + key + "'");
  }
  return doc.at(key);
}

double number(const Json& doc, const char* key) {
  const auto& v = field(doc, key);
  if (!v.is_number()) throw SchemaError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> numbers(const Json& v, const char* what) {
  if (!v.is_array()) throw SchemaError(std::string("'") + what + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(std::string("'") + what + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Eigen::VectorXd vector_from(const Json& v, const char* what) {
  const auto values = numbers(v, what);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Eigen::MatrixXd matrix_from(const Json& v, const char* what) {
  if (!v.is_array() || v.empty()) throw SchemaError(std::string("'") + what + "' must be a matrix");
  const auto cols = numbers(v.front(), what).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto row = numbers(v[i], what);
    if (row.size() != cols) throw SchemaError(std::string("'") + what + "' has ragged rows");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return m;
}

DenseLayer layer_from(const Json& v) {
  DenseLayer layer;
  layer.weight = matrix_from(field(v, "weight"), "weight");
  layer.bias = vector_from(field(v, "bias"), "bias");
  return layer;
}

Standardization standardization_from(const Json& v, std::size_t dim) {
  Standardization s;
  s.mean = numbers(field(v, "mean"), "mean");
  s.scale = numbers(field(v, "scale"), "scale");
  if (s.mean.size() != dim || s.scale.size() != dim) {
    throw SchemaError("standardization length does not match feature_names");
  }
  for (double sc : s.scale) {
    if (!(sc > 0.0)) throw SchemaError("standardization scales must be positive");
  }
  return s;
}

}  // namespace

Json SoftDecisionModel::to_json() const {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["family"] = std::string(to_string(family));
  doc["convexifier"] = std::string(to_string(convexifier));
  doc["feature_names"] = feature_names;
  doc["seed"] = seed;
  doc["hyperparameters"] = hyperparameters;
  doc["threshold"] = fixed_threshold ? Json(*fixed_threshold) : Json(nullptr);

  Json params;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          doc["standardization"] = {{"mean", m.standardization.mean},
                                    {"scale", m.standardization.scale}};
          params["degree"] = m.degree;
          params["theta"] = vector_json(m.theta);
        } else if constexpr (std::is_same_v<T, StumpEnsemble>) {
          const auto id = Standardization::identity(dim());
          doc["standardization"] = {{"mean", id.mean}, {"scale", id.scale}};
          params["l1_budget"] = m.l1_budget;
          Json stumps = Json::array();
          for (const auto& s : m.stumps) {
            stumps.push_back({{"feature", s.feature},
                              {"split", s.split},
                              {"polarity", s.polarity},
                              {"weight", s.weight}});
          }
          params["stumps"] = std::move(stumps);
        } else {
          doc["standardization"] = {{"mean", m.standardization.mean},
                                    {"scale", m.standardization.scale}};
          params["activation"] = m.activation == Activation::Relu ? "relu" : "sigmoid";
          Json layers = Json::array();
          for (const auto& layer : m.hidden) layers.push_back(layer_json(layer));
          params["hidden"] = std::move(layers);
          params["output"] = layer_json(m.output);
          params["threshold_scale"] = m.threshold_scale;
          params["threshold_scale_bound"] = m.threshold_scale_bound;
        }
      },
      body);
  doc["parameters"] = std::move(params);
  return doc;
}

SoftDecisionModel SoftDecisionModel::from_json(const Json& doc) {
  try {
    SoftDecisionModel model;
    const auto version = number(doc, "schema_version");
    if (version != kSchemaVersion) {
      throw SchemaError("unsupported schema_version " + std::to_string(version));
    }
    const auto& family = field(doc, "family");
    const auto& conv = field(doc, "convexifier");
    if (!family.is_string() || !conv.is_string()) {
      throw SchemaError("family and convexifier must be strings");
    }
    try {
      model.family = parse_family(family.get<std::string>());
      model.convexifier = parse_convexifier(conv.get<std::string>());
    } catch (const ConfigError& e) {
      throw SchemaError(e.what());
    }
    const auto& names = field(doc, "feature_names");
    if (!names.is_array()) throw SchemaError("'feature_names' must be an array");
    for (const auto& n : names) {
      if (!n.is_string()) throw SchemaError("'feature_names' must hold strings");
      model.feature_names.push_back(n.get<std::string>());
    }
    const auto& seed = field(doc, "seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
      throw SchemaError("'seed' must be an integer");
    }
    model.seed = seed.get<std::uint64_t>();
    model.hyperparameters = field(doc, "hyperparameters");
    const auto& threshold = doc.contains("threshold") ? doc.at("threshold") : Json(nullptr);
    if (threshold.is_number()) {
      model.fixed_threshold = threshold.get<double>();
    } else if (!threshold.is_null()) {
      throw SchemaError("'threshold' must be a number or null");
    }

    const std::size_t dim = model.feature_names.size();
    const auto standardization = standardization_from(field(doc, "standardization"), dim);
    const auto& params = field(doc, "parameters");

    switch (model.family) {
      case ModelFamily::Linear:
      case ModelFamily::Lasso: {
        LinearModel m;
        m.standardization = standardization;
        const double degree = number(params, "degree");
        if (degree != 1 && degree != 2 && degree != 3) throw SchemaError("degree must be 1, 2 or 3");
        m.degree = static_cast<int>(degree);
        m.theta = vector_from(field(params, "theta"), "theta");
        if (static_cast<std::size_t>(m.theta.size()) != Dictionary(dim, m.degree).size()) {
          throw SchemaError("theta length does not match the dictionary size");
        }
        model.body = std::move(m);
        break;
      }
      case ModelFamily::Boosting: {
        StumpEnsemble m;
        m.l1_budget = number(params, "l1_budget");
        const auto& stumps = field(params, "stumps");
        if (!stumps.is_array()) throw SchemaError("'stumps' must be an array");
        for (const auto& s : stumps) {
          Stump stump;
          stump.feature = static_cast<int>(number(s, "feature"));
          stump.split = number(s, "split");
          stump.polarity = static_cast<int>(number(s, "polarity"));
          stump.weight = number(s, "weight");
          if (stump.feature >= static_cast<int>(dim)) throw SchemaError("stump feature out of range");
          if (stump.polarity != 1 && stump.polarity != -1) throw SchemaError("stump polarity must be +-1");
          m.stumps.push_back(stump);
        }
        model.body = std::move(m);
        break;
      }
      case ModelFamily::Shallow:
      case ModelFamily::Deep: {
        NeuralNet m;
        m.standardization = standardization;
        const auto& act = field(params, "activation");
        if (act == "relu") {
          m.activation = Activation::Relu;
        } else if (act == "sigmoid") {
          m.activation = Activation::Sigmoid;
        } else {
          throw SchemaError("activation must be relu or sigmoid");
        }
        const auto& hidden = field(params, "hidden");
        if (!hidden.is_array()) throw SchemaError("'hidden' must be an array");
        for (const auto& layer : hidden) m.hidden.push_back(layer_from(layer));
        m.output = layer_from(field(params, "output"));
        m.threshold_scale = number(params, "threshold_scale");
        m.threshold_scale_bound = number(params, "threshold_scale_bound");
        m.check_shapes();
        model.body = std::move(m);
        break;
      }
    }
    return model;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace asymdec
