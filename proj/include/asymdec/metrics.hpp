#pragma once

#include "asymdec/dataset.hpp"
#include "asymdec/loss.hpp"
#include "asymdec/models.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace asymdec {

struct GroupRates {
  int group = 0;
  std::size_t size = 0;
  std::optional<double> false_positive;  // share of the group, empty if size == 0
  std::optional<double> false_negative;
};

struct MetricsReport {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  // Realized loss summed over the rows of each confusion cell.
  double tp_cost = 0.0, fn_cost = 0.0, tn_cost = 0.0, fp_cost = 0.0;
  double overall_cost = 0.0;
  double tp_rate = 0.0;  // tp / (tp + fn)
  double fp_rate = 0.0;  // fp / (fp + tn)
  double error_rate = 0.0;
  std::optional<double> auc;  // empty when only one class is present
  std::vector<GroupRates> groups;
  std::optional<double> excess_risk;

  std::size_t count() const noexcept { return tp + fn + tn + fp; }
  Json to_json() const;
  // Row labels of to_csv, which writes one value per line.
  static const std::vector<std::string>& table_labels();
  std::vector<double> table_values(std::optional<double> auc_train = std::nullopt) const;
  std::string to_csv() const;
};

// Decisions by sign (ties to +1), losses accumulated per confusion cell,
// AUC from the soft scores. Network models read each row's threshold from
// the quartet unless they carry a fixed one.
MetricsReport evaluate(const SoftDecisionModel& model, const Dataset& data,
                       const LossQuartet& quartet);
// Same accounting from precomputed scores.
MetricsReport evaluate_scores(std::span<const double> scores, const Dataset& data,
                              const LossQuartet& quartet);

// Mann-Whitney statistic with half credit for ties. Throws SingleClass.
double auc(std::span<const double> scores, std::span<const int> labels);

// FP_g = #{f = +1, y = -1, G = g} / #{G = g}; FN_g analogous. Groups listed
// in `expected` but absent from the data get empty rates.
std::vector<GroupRates> group_rates(std::span<const int> decisions, std::span<const int> labels,
                                    std::span<const int> groups, std::span<const int> expected = {});

// Point of a finite support: probability mass, P(Y = 1 | x), loss cells and
// optionally a stated threshold that must agree with the cells.
struct SupportPoint {
  double mass = 0.0;
  double eta = 0.5;
  Cells cells;
  std::optional<double> stated_threshold;
};

// Expected loss of the decisions over the support.
double support_risk(std::span<const SupportPoint> support, std::span<const int> decisions);

// sum over disagreement points of mass * b * |eta - c|, measured against
// the pointwise rule sign(eta - c). Throws OracleMismatch on size mismatch.
double excess_risk(std::span<const SupportPoint> support, std::span<const int> decisions);

}  // namespace asymdec
