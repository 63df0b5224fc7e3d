#include "asymdec/metrics.hpp"

#include "asymdec/errors.hpp"
#include "asymdec/format.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace asymdec {

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Json MetricsReport::to_json() const {
  Json g = Json::array();
  for (const auto& r : groups) {
    g.push_back({{"group", r.group},
                 {"size", r.size},
                 {"false_positive_rate", optional_json(r.false_positive)},
                 {"false_negative_rate", optional_json(r.false_negative)}});
  }
  return Json{{"tp", tp},
              {"fn", fn},
              {"tn", tn},
              {"fp", fp},
              {"tp_cost", tp_cost},
              {"fn_cost", fn_cost},
              {"tn_cost", tn_cost},
              {"fp_cost", fp_cost},
              {"overall_cost", overall_cost},
              {"tp_rate", tp_rate},
              {"fp_rate", fp_rate},
              {"error_rate", error_rate},
              {"auc", optional_json(auc)},
              {"groups", std::move(g)},
              {"excess_risk", optional_json(excess_risk)}};
}

const std::vector<std::string>& MetricsReport::table_labels() {
  static const std::vector<std::string> labels = {
      "True Positive Cost", "False Negative Cost", "True Negative Cost", "False Positive Cost",
      "Overall cost",       "TP",                  "FN",                 "TN",
      "FP",                 "TP Rate",             "FP Rate",            "AUC_train",
      "AUC_test"};
  return labels;
}

std::vector<double> MetricsReport::table_values(std::optional<double> auc_train) const {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {tp_cost,
          fn_cost,
          tn_cost,
          fp_cost,
          overall_cost,
          static_cast<double>(tp),
          static_cast<double>(fn),
          static_cast<double>(tn),
          static_cast<double>(fp),
          tp_rate,
          fp_rate,
          auc_train.value_or(nan),
          auc.value_or(nan)};
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "metric,value\n";
  const auto values = table_values();
  const auto& labels = table_labels();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    out << labels[k] << ',' << format_double(values[k]) << '\n';
  }
  return out.str();
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionMismatch("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over tied blocks, then the rank-sum form of the statistic.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start + 1;
    while (stop < n && scores[order[stop]] == scores[order[start]]) ++stop;
    const double rank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k) {
      if (labels[order[k]] > 0) {
        positive_rank_sum += rank;
        ++positives;
      }
    }
    start = stop;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw SingleClass("AUC needs at least one example of each label");
  }
  const double p = static_cast<double>(positives);
  const double q = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

std::vector<GroupRates> group_rates(std::span<const int> decisions, std::span<const int> labels,
                                    std::span<const int> groups, std::span<const int> expected) {
  if (decisions.size() != labels.size() || groups.size() != labels.size()) {
    throw DimensionMismatch("decisions, labels and groups differ in length");
  }
  struct Tally {
    std::size_t size = 0, fp = 0, fn = 0;
  };
  std::map<int, Tally> tally;
  for (int g : expected) tally[g];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& t = tally[groups[i]];
    ++t.size;
    if (decisions[i] > 0 && labels[i] < 0) ++t.fp;
    if (decisions[i] < 0 && labels[i] > 0) ++t.fn;
  }
  std::vector<GroupRates> out;
  for (const auto& [g, t] : tally) {
    GroupRates r;
    r.group = g;
    r.size = t.size;
    if (t.size > 0) {
      r.false_positive = ratio(t.fp, t.size);
      r.false_negative = ratio(t.fn, t.size);
    }
    out.push_back(r);
  }
  return out;
}

MetricsReport evaluate_scores(std::span<const double> scores, const Dataset& data,
                              const LossQuartet& quartet) {
  if (scores.size() != data.size()) throw DimensionMismatch("one score per row is required");
  MetricsReport report;
  std::vector<int> decisions(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int f = sign_of(scores[i]);
    const int y = data.y[i];
    decisions[i] = f;
    const double loss = quartet.loss(f, y, data.row(i));
    if (f > 0 && y > 0) {
      ++report.tp;
      report.tp_cost += loss;
    } else if (f < 0 && y > 0) {
      ++report.fn;
      report.fn_cost += loss;
    } else if (f < 0) {
      ++report.tn;
      report.tn_cost += loss;
    } else {
      ++report.fp;
      report.fp_cost += loss;
    }
  }
  report.overall_cost = report.tp_cost + report.fn_cost + report.tn_cost + report.fp_cost;
  report.tp_rate = ratio(report.tp, report.tp + report.fn);
  report.fp_rate = ratio(report.fp, report.fp + report.tn);
  report.error_rate = ratio(report.fp + report.fn, data.size());
  if (report.tp + report.fn > 0 && report.tn + report.fp > 0) report.auc = auc(scores, data.y);
  if (data.has_groups()) report.groups = group_rates(decisions, data.y, data.group);
  return report;
}

MetricsReport evaluate(const SoftDecisionModel& model, const Dataset& data,
                       const LossQuartet& quartet) {
  if (data.dim() != model.dim()) {
    throw DimensionMismatch("model expects " + std::to_string(model.dim()) +
                            " features, data has " + std::to_string(data.dim()));
  }
  for (std::size_t j = 0; j < data.dim(); ++j) {
    if (data.feature_names[j] != model.feature_names[j]) {
      throw DimensionMismatch("feature " + std::to_string(j) + " is '" + data.feature_names[j] +
                              "' but the model expects '" + model.feature_names[j] + "'");
    }
  }
  Eigen::VectorXd c = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(data.size()), 0.5);
  if (model.uses_threshold() && !model.fixed_threshold) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      c[static_cast<Eigen::Index>(i)] = threshold(quartet, data.row(i));
    }
  }
  const Eigen::VectorXd scores = model.predict_soft(data.X, c);
  return evaluate_scores(std::span<const double>(scores.data(), data.size()), data, quartet);
}

double support_risk(std::span<const SupportPoint> support, std::span<const int> decisions) {
  if (support.size() != decisions.size()) {
    throw OracleMismatch("support has " + std::to_string(support.size()) + " points, rule has " +
                         std::to_string(decisions.size()));
  }
  double risk = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto& p = support[k];
    const int f = decisions[k];
    risk += p.mass * (p.eta * p.cells.at(f, 1) + (1.0 - p.eta) * p.cells.at(f, -1));
  }
  return risk;
}

double excess_risk(std::span<const SupportPoint> support, std::span<const int> decisions) {
  if (support.size() != decisions.size()) {
    throw OracleMismatch("support has " + std::to_string(support.size()) + " points, rule has " +
                         std::to_string(decisions.size()));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto& p = support[k];
    const double c = threshold(p.cells);
    const int bayes = sign_of(p.eta - c);
    if (decisions[k] * bayes < 0) {
      total += p.mass * compute_net_losses(p.cells).b * std::abs(p.eta - c);
    }
  }
  return total;
}

}  // namespace asymdec
