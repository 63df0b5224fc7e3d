#include "asymdec/loss.hpp"

#include "asymdec/errors.hpp"
#include "asymdec/pretrial.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace asymdec {

Json LossQuartet::common_json() const {
  return Json{{"min_net_loss", min_net_loss}, {"bound", bound}};
}

Json ConstantQuartet::to_json() const {
  Json doc = common_json();
  doc["type"] = "constant";
  doc["l_pp"] = cells_.pp;
  doc["l_np"] = cells_.np;
  doc["l_pn"] = cells_.pn;
  doc["l_nn"] = cells_.nn;
  return doc;
}

GroupQuartet::GroupQuartet(std::vector<double> fn_cost, std::vector<double> fp_cost)
    : fn_cost_(std::move(fn_cost)), fp_cost_(std::move(fp_cost)) {
  if (fn_cost_.empty() || fn_cost_.size() != fp_cost_.size()) {
    throw ConfigError("group quartet needs equally many false-negative and false-positive costs");
  }
}

Cells GroupQuartet::cells_for_group(int g) const {
  if (g < 0 || static_cast<std::size_t>(g) >= fn_cost_.size()) {
    throw SchemaError("group id " + std::to_string(g) + " has no configured costs");
  }
  const auto k = static_cast<std::size_t>(g);
  return Cells{0.0, fn_cost_[k], fp_cost_[k], 0.0};
}

Cells GroupQuartet::cells(const RowView& row) const {
  const auto g = row.group();
  if (!g) throw SchemaError("group quartet needs a group column");
  return cells_for_group(*g);
}

Json GroupQuartet::to_json() const {
  Json doc = common_json();
  doc["type"] = "group";
  doc["fn_cost"] = fn_cost_;
  doc["fp_cost"] = fp_cost_;
  return doc;
}

TabularQuartet::TabularQuartet(std::string pp, std::string np, std::string pn, std::string nn)
    : pp_(std::move(pp)), np_(std::move(np)), pn_(std::move(pn)), nn_(std::move(nn)) {}

Cells TabularQuartet::cells(const RowView& row) const {
  return Cells{row.numeric(pp_), row.numeric(np_), row.numeric(pn_), row.numeric(nn_)};
}

Json TabularQuartet::to_json() const {
  Json doc = common_json();
  doc["type"] = "tabular";
  doc["columns"] = {{"l_pp", pp_}, {"l_np", np_}, {"l_pn", pn_}, {"l_nn", nn_}};
  return doc;
}

QuartetPtr symmetric_quartet() {
  return std::make_shared<ConstantQuartet>(Cells{0.0, 1.0, 1.0, 0.0});
}

namespace {

double require_number(const Json& spec, const char* key) {
  if (!spec.contains(key) || !spec.at(key).is_number()) {
    throw ConfigError(std::string("loss spec needs numeric '") + key + "'");
  }
  return spec.at(key).get<double>();
}

std::vector<double> require_vector(const Json& spec, const char* key) {
  if (!spec.contains(key) || !spec.at(key).is_array()) {
    throw ConfigError(std::string("loss spec needs array '") + key + "'");
  }
  std::vector<double> out;
  for (const auto& v : spec.at(key)) {
    if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

QuartetPtr quartet_from_json(const Json& spec) {
  if (!spec.is_object() || !spec.contains("type") || !spec.at("type").is_string()) {
    throw ConfigError("loss spec must be an object with a string 'type'");
  }
  const auto type = spec.at("type").get<std::string>();
  std::shared_ptr<LossQuartet> quartet;
  if (type == "symmetric") {
    quartet = std::make_shared<ConstantQuartet>(Cells{0.0, 1.0, 1.0, 0.0});
  } else if (type == "constant") {
    quartet = std::make_shared<ConstantQuartet>(
        Cells{require_number(spec, "l_pp"), require_number(spec, "l_np"),
              require_number(spec, "l_pn"), require_number(spec, "l_nn")});
  } else if (type == "group") {
    quartet = std::make_shared<GroupQuartet>(require_vector(spec, "fn_cost"),
                                             require_vector(spec, "fp_cost"));
  } else if (type == "tabular") {
    const Json columns = spec.value("columns", Json::object());
    quartet = std::make_shared<TabularQuartet>(
        columns.value("l_pp", "l_pp"), columns.value("l_np", "l_np"),
        columns.value("l_pn", "l_pn"), columns.value("l_nn", "l_nn"));
  } else if (type == "pretrial") {
    quartet = pretrial::quartet_from_json(spec);
  } else {
    throw ConfigError("unknown loss type '" + type + "'");
  }
  if (spec.contains("min_net_loss")) quartet->min_net_loss = require_number(spec, "min_net_loss");
  if (spec.contains("bound")) quartet->bound = require_number(spec, "bound");
  if (!(quartet->min_net_loss > 0.0)) throw ConfigError("min_net_loss must be positive");
  if (!(quartet->bound > 0.0)) throw ConfigError("bound must be positive");
  return quartet;
}

QuartetPtr load_quartet(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open loss spec '" + path + "'");
  Json spec;
  try {
    in >> spec;
  } catch (const Json::parse_error& e) {
    throw ConfigError("loss spec '" + path + "' is not valid JSON: " + e.what());
  }
  return quartet_from_json(spec);
}

NetLossPair compute_net_losses(const Cells& cells) noexcept {
  const double positive = cells.np - cells.pp;
  const double negative = cells.pn - cells.nn;
  return NetLossPair{positive - negative, positive + negative};
}

NetLossPair compute_net_losses(const LossQuartet& quartet, const RowView& row) {
  return compute_net_losses(quartet.cells(row));
}

double threshold(const Cells& cells) {
  const double negative = cells.pn - cells.nn;
  const double total = (cells.np - cells.pp) + negative;
  if (!(total > 0.0)) {
    throw DegenerateLoss("total net loss " + std::to_string(total) + " is not positive");
  }
  return negative / total;
}

double threshold(const LossQuartet& quartet, const RowView& row) {
  return threshold(quartet.cells(row));
}

double residual_term(const Cells& cells, int y) noexcept {
  const double yy = y >= 0 ? 1.0 : -1.0;
  const double omega = weight(compute_net_losses(cells), y);
  return 0.25 * (cells.pp + cells.np) * (1.0 + yy) + 0.25 * (cells.pn + cells.nn) * (1.0 - yy) -
         0.25 * omega;
}

double residual_term(const LossQuartet& quartet, int y, const RowView& row) {
  return residual_term(quartet.cells(row), y);
}

ValidationReport validate(const LossQuartet& quartet, const Dataset& data) {
  ValidationReport report;
  report.rows = data.size();
  report.min_positive_net_loss = std::numeric_limits<double>::infinity();
  report.min_negative_net_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> offending;
  std::string first_reason;
  double worst_margin = std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < data.size(); ++i) {
    const Cells cells = quartet.cells(data.row(i));
    const double positive = cells.np - cells.pp;
    const double negative = cells.pn - cells.nn;
    const double largest = std::max({std::abs(cells.pp), std::abs(cells.np), std::abs(cells.pn),
                                     std::abs(cells.nn)});
    report.min_positive_net_loss = std::min(report.min_positive_net_loss, positive);
    report.min_negative_net_loss = std::min(report.min_negative_net_loss, negative);
    report.max_abs_loss = std::max(report.max_abs_loss, largest);
    if (std::min(positive, negative) < worst_margin) {
      worst_margin = std::min(positive, negative);
      report.worst_row = i;
    }

    const bool finite = std::isfinite(positive) && std::isfinite(negative) && std::isfinite(largest);
    const bool bad = !finite || !(positive >= quartet.min_net_loss) ||
                     !(negative >= quartet.min_net_loss) || largest > quartet.bound;
    if (bad) {
      if (offending.empty()) {
        std::ostringstream why;
        why << "row " << i << ": l_np - l_pp = " << positive << ", l_pn - l_nn = " << negative
            << ", max |l| = " << largest;
        first_reason = why.str();
      }
      offending.push_back(i);
    }
  }
  if (!offending.empty()) {
    std::ostringstream msg;
    msg << offending.size() << " row(s) violate net-loss positivity or the loss bound; rows [";
    const std::size_t shown = std::min<std::size_t>(offending.size(), 20);
    for (std::size_t k = 0; k < shown; ++k) msg << (k ? ", " : "") << offending[k];
    if (shown < offending.size()) msg << ", ...";
    msg << "]; first: " << first_reason;
    throw AssumptionViolation(msg.str(), std::move(offending));
  }
  if (data.empty()) {
    report.min_positive_net_loss = 0.0;
    report.min_negative_net_loss = 0.0;
  }
  return report;
}

WeightedSample WeightedData::sample(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  WeightedSample s;
  s.y = y[r] > 0 ? 1 : -1;
  s.x = std::span<const double>(X.row(r).data(), dim());
  if (!group.empty()) s.group = group[i];
  s.omega = omega[r];
  s.c = c[r];
  return s;
}

WeightedData WeightedData::subset(std::span<const std::size_t> rows) const {
  WeightedData out;
  out.feature_names = feature_names;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.X.resize(m, X.cols());
  out.y.resize(m);
  out.omega.resize(m);
  out.c.resize(m);
  if (!group.empty()) out.group.reserve(rows.size());
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(k)]);
    out.X.row(k) = X.row(r);
    out.y[k] = y[r];
    out.omega[k] = omega[r];
    out.c[k] = c[r];
    if (!group.empty()) out.group.push_back(group[static_cast<std::size_t>(r)]);
  }
  return out;
}

WeightedData weigh_dataset(const LossQuartet& quartet, const Dataset& data) {
  validate(quartet, data);
  WeightedData out;
  const auto n = static_cast<Eigen::Index>(data.size());
  out.feature_names = data.feature_names;
  out.X = data.X;
  out.y.resize(n);
  out.omega.resize(n);
  out.c.resize(n);
  out.group = data.group;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = data.row(static_cast<std::size_t>(i));
    const Cells cells = quartet.cells(row);
    const int label = data.y[static_cast<std::size_t>(i)];
    out.y[i] = label;
    out.omega[i] = weight(compute_net_losses(cells), label);
    out.c[i] = threshold(cells);
  }
  return out;
}

}  // namespace asymdec
