#pragma once

#include "asymdec/dataset.hpp"

#include <json.hpp>

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace asymdec {

using Json = nlohmann::json;

// The four losses at one covariate value. Member names put the decision
// sign first and the outcome sign second: np = loss of deciding -1 when the
// outcome is +1 (a false negative).
struct Cells {
  double pp = 0.0;
  double np = 0.0;
  double pn = 0.0;
  double nn = 0.0;

  double at(int decision, int outcome) const noexcept {
    if (decision >= 0) return outcome >= 0 ? pp : pn;
    return outcome >= 0 ? np : nn;
  }
};

// Covariate-driven loss l(decision, outcome, x).
class LossQuartet {
 public:
  static constexpr double kDefaultMinNetLoss = 1e-9;
  static constexpr double kDefaultBound = 1e12;

  virtual ~LossQuartet() = default;

  virtual Cells cells(const RowView& row) const = 0;
  virtual Json to_json() const = 0;

  double loss(int decision, int outcome, const RowView& row) const {
    return cells(row).at(decision, outcome);
  }

  // Validation thresholds: each one-sided net loss must be >= min_net_loss
  // and every cell bounded by bound in absolute value.
  double min_net_loss = kDefaultMinNetLoss;
  double bound = kDefaultBound;

 protected:
  Json common_json() const;
};

using QuartetPtr = std::shared_ptr<const LossQuartet>;

class ConstantQuartet final : public LossQuartet {
 public:
  explicit ConstantQuartet(Cells cells) : cells_(cells) {}
  Cells cells(const RowView&) const override { return cells_; }
  const Cells& values() const noexcept { return cells_; }
  Json to_json() const override;

 private:
  Cells cells_;
};

// Zero loss on correct decisions, fn_cost[g] on false negatives and
// fp_cost[g] on false positives for group g.
class GroupQuartet final : public LossQuartet {
 public:
  GroupQuartet(std::vector<double> fn_cost, std::vector<double> fp_cost);
  Cells cells(const RowView& row) const override;
  Cells cells_for_group(int g) const;
  std::size_t groups() const noexcept { return fn_cost_.size(); }
  Json to_json() const override;

 private:
  std::vector<double> fn_cost_;
  std::vector<double> fp_cost_;
};

// Reads the four cells from per-row numeric columns.
class TabularQuartet final : public LossQuartet {
 public:
  TabularQuartet(std::string pp = "l_pp", std::string np = "l_np", std::string pn = "l_pn",
                 std::string nn = "l_nn");
  Cells cells(const RowView& row) const override;
  Json to_json() const override;

 private:
  std::string pp_, np_, pn_, nn_;
};

// Symmetric 0/1 loss: one unit for either kind of mistake.
QuartetPtr symmetric_quartet();

// Builds a quartet from {"type": "constant"|"group"|"tabular"|"pretrial", ...}.
// Optional keys "min_net_loss" and "bound" override the validation thresholds.
QuartetPtr quartet_from_json(const Json& spec);
QuartetPtr load_quartet(const std::string& path);

// a = (l_np - l_pp) + (l_nn - l_pn); b = (l_np - l_pp) + (l_pn - l_nn).
struct NetLossPair {
  double a = 0.0;
  double b = 0.0;
};

NetLossPair compute_net_losses(const Cells& cells) noexcept;
NetLossPair compute_net_losses(const LossQuartet& quartet, const RowView& row);

// y*a + b; equals twice the one-sided net loss of the outcome y.
constexpr double weight(const NetLossPair& pair, int y) noexcept {
  return (y >= 0 ? pair.a : -pair.a) + pair.b;
}

// Fraction of the false-positive net loss in the total net loss. Throws
// DegenerateLoss when the total is not positive.
double threshold(const Cells& cells);
double threshold(const LossQuartet& quartet, const RowView& row);

// d(y, x) in  mean l = 0.5 mean[w 1{-y f >= 0}] + mean d.
double residual_term(const Cells& cells, int y) noexcept;
double residual_term(const LossQuartet& quartet, int y, const RowView& row);

struct ValidationReport {
  std::size_t rows = 0;
  double min_positive_net_loss = 0.0;  // min over rows of l_np - l_pp
  double min_negative_net_loss = 0.0;  // min over rows of l_pn - l_nn
  double max_abs_loss = 0.0;
  std::size_t worst_row = 0;
};

// Throws AssumptionViolation listing every offending row.
ValidationReport validate(const LossQuartet& quartet, const Dataset& data);

struct WeightedSample {
  int y = 1;
  std::span<const double> x;
  std::optional<int> group;
  double omega = 0.0;
  double c = 0.5;
};

// Columnar view of a dataset with per-row weight and threshold attached.
struct WeightedData {
  std::vector<std::string> feature_names;
  RowMatrix X;
  Eigen::VectorXd y;  // +-1 stored as doubles
  Eigen::VectorXd omega;
  Eigen::VectorXd c;
  std::vector<int> group;  // empty when ungrouped

  std::size_t size() const noexcept { return static_cast<std::size_t>(y.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(X.cols()); }
  bool empty() const noexcept { return y.size() == 0; }

  WeightedSample sample(std::size_t i) const;
  WeightedData subset(std::span<const std::size_t> rows) const;
};

// Validates, then attaches (omega_i, c_i) row by row in order.
WeightedData weigh_dataset(const LossQuartet& quartet, const Dataset& data);

}  // namespace asymdec
