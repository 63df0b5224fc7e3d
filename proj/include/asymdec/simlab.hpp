#pragma once

#include "asymdec/dataset.hpp"
#include "asymdec/loss.hpp"
#include "asymdec/metrics.hpp"
#include "asymdec/models.hpp"
#include "asymdec/train.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace asymdec::sim {

// Two-group design: Y = +1 iff 2G + Z'gamma + tau * nonlinear(Z) >= sigma * e
// with e ~ N(0, 1), G ~ Bernoulli(rho), Z ~ N(0, I_d). Group g pays
// fn_cost[g] for a false negative and fp_cost[g] for a false positive.
struct SimConfig {
  std::size_t n = 1000;
  double test_fraction = 0.3;
  std::size_t dim = 15;
  double rho = 0.2;
  double sigma = 0.3;
  double tau = 0.0;
  std::vector<double> gamma;  // empty: (1, 0.9, 0.8, 0, ..., 0)
  double fn_cost0 = 3.0;
  double fn_cost1 = 1.0;
  double fp_cost0 = 1.7;
  double fp_cost1 = 1.0;
  std::size_t replications = 500;
  std::uint64_t seed = 0;
  std::vector<std::string> families = {"deep"};  // compared against logit in run_mistakes
  TrainConfig train;  // linear fits use its convexifier
  ConvexifierKind network_convexifier = ConvexifierKind::Hinge;

  std::vector<double> coefficients() const;
  std::size_t test_size() const;
  GroupQuartet quartet() const;
  double threshold(int group) const;
  void check() const;
  Json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static SimConfig from_json(const Json& doc);
};

struct SimDraw {
  Dataset data;  // features g, z1..zd; group column = g
  std::vector<double> eta;
  std::vector<double> threshold;
};

double latent_index(const SimConfig& config, int group, std::span<const double> z);
double eta_oracle(const SimConfig& config, int group, std::span<const double> z);
int bayes_rule(const SimConfig& config, int group, std::span<const double> z);

// Per row: G, then Z_1..Z_d, then e, all from one stream seeded by `seed`.
SimDraw draw(const SimConfig& config, std::uint64_t seed);

struct BayesOracle {
  std::vector<int> rule;
  double risk = 0.0;
};

// Exhaustive search over all 2^k rules (k <= 20). Near-ties (within 1e-12
// relative) go to the rule with more +1 decisions. Throws SupportTooLarge,
// and OracleMismatch when a stated threshold disagrees with the cells.
BayesOracle brute_force_bayes(std::span<const SupportPoint> support);

// Distribution summary of a cost ratio across replications.
struct Summary {
  std::size_t replications = 0;
  std::size_t failed = 0;
  double p_ratio_gt_1 = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;

  Json to_json() const;
};

// Linear-interpolation quantile of sorted data (the common "type 7" rule).
double quantile(std::span<const double> sorted, double p);
Summary summarize(std::span<const double> ratios, std::size_t failed);

struct Replication {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double baseline_cost = 0.0;  // symmetric logit or plug-in rule
  double weighted_cost = 0.0;
  double ratio = 0.0;
  std::string error;  // non-empty when the replication failed
};

struct ComparisonResult {
  std::string baseline;  // "logit" or "plugin"
  std::vector<Replication> rows;
  Summary summary;

  std::string to_csv() const;
  Json summary_json() const;
};

// Test-set planner cost of the symmetric logit over that of the weighted
// logit, per replication.
ComparisonResult run_comparison(const SimConfig& config, std::size_t jobs = 1);
// Same with the plug-in rule sign(eta_hat - c) built from the symmetric
// logit's probability estimate.
ComparisonResult run_plugin_comparison(const SimConfig& config, std::size_t jobs = 1);

enum class SweepParameter { FpCost0, FnCost0 };
SweepParameter parse_sweep_parameter(std::string_view name);
std::string_view to_string(SweepParameter p) noexcept;

struct SweepPoint {
  double value = 0.0;
  double fp0 = 0.0, fp1 = 0.0, fn0 = 0.0, fn1 = 0.0;
  std::size_t replications = 0;
};

struct SweepResult {
  SweepParameter parameter = SweepParameter::FpCost0;
  std::vector<SweepPoint> points;
  std::optional<double> fp_crossing;
  std::optional<double> fn_crossing;

  std::string to_csv() const;
  Json to_json() const;
};

// First grid interval where a - b changes sign (or touches zero), located
// by linear interpolation.
std::optional<double> find_crossing(std::span<const double> grid, std::span<const double> a,
                                    std::span<const double> b);

// Group FP/FN shares of the weighted logit averaged over replications at each
// grid value. Replication r uses the same draw at every grid value.
SweepResult run_equalization_sweep(const SimConfig& config, SweepParameter parameter,
                                   std::span<const double> grid, std::size_t jobs = 1);

struct MistakeRow {
  std::string family;
  double fp0 = 0.0, fn0 = 0.0, fp1 = 0.0, fn1 = 0.0, error = 0.0;
  std::size_t replications = 0;
};

struct MistakesResult {
  std::vector<MistakeRow> rows;
  std::string to_csv() const;
  Json to_json() const;
};

// Symmetric-loss fits of logit and each configured family; test-set group
// FP/FN shares and total misclassification averaged over replications.
MistakesResult run_mistakes(const SimConfig& config, std::size_t jobs = 1);

}  // namespace asymdec::sim
