#pragma once

#include "asymdec/dataset.hpp"
#include "asymdec/loss.hpp"
#include "asymdec/metrics.hpp"
#include "asymdec/train.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace asymdec::pretrial {

// Thousands of dollars per case.
struct CrimeCosts {
  std::string_view crime;
  double recidivism;  // expected cost of a new offence of this type
  double detention_benefit;
};

inline constexpr std::array<CrimeCosts, 10> kCrimeTable = {{
    {"Murder", 10754, 11732},
    {"Rape/Sexual Assault", 266, 353},
    {"Aggravated Assault", 126, 127},
    {"Robbery", 48, 230},
    {"Arson/Other", 23, 292},
    {"Motor Vehicle Theft", 11, 53},
    {"Household Burglary", 7, 64},
    {"Forgery/Counterfeiting", 5, 46},
    {"Fraud", 5, 49},
    {"Larceny/Theft", 3, 43},
}};

inline constexpr double kBenefitScale = 0.05;
inline constexpr double kDetentionCostPerDay = 0.347;
inline constexpr double kRecidivismConstant = 23.0;
inline constexpr std::string_view kFallbackCrime = "Arson/Other";

enum class RecidivismMode { Constant, PerCrime };

struct CostBenefitTables {
  double benefit_scale = kBenefitScale;
  double detention_cost_per_day = kDetentionCostPerDay;
  double recidivism_constant = kRecidivismConstant;
  RecidivismMode recidivism_mode = RecidivismMode::Constant;
  // Indexed by group id. benefit_scaling multiplies the detention benefit
  // and the recidivism cost; cost_scaling multiplies the detention cost of
  // a released reoffender.
  std::vector<double> benefit_scaling = {1.0, 2.0};
  std::vector<double> cost_scaling = {1.0, 2.0};
  std::vector<double> correct_release_loss = {0.0, 0.0};
  // When true the detention benefit lowers the loss of a correct detention.
  bool benefit_reduces_loss = true;

  Json to_json() const;
  static CostBenefitTables from_json(const Json& doc);
};

// Throws UnknownCrimeType.
const CrimeCosts& crime_entry(std::string_view crime);

double ebd(const CostBenefitTables& tables, std::string_view crime);
// Throws NegativeDuration.
double ecd(const CostBenefitTables& tables, double detention_days);
double recidivism_cost(const CostBenefitTables& tables, std::string_view crime);

// Reads the group id, "crime" text column and "detention_days" column.
class PretrialQuartet final : public LossQuartet {
 public:
  explicit PretrialQuartet(CostBenefitTables tables);
  Cells cells(const RowView& row) const override;
  Cells cells_for(int group, std::string_view crime, double detention_days) const;
  const CostBenefitTables& tables() const noexcept { return tables_; }
  Json to_json() const override;

 private:
  CostBenefitTables tables_;
};

std::shared_ptr<PretrialQuartet> quartet_from_json(const Json& spec);

// Column map for roster CSVs. Indicator columns accept 0/1 numbers or the
// configured string value.
struct RosterSchema {
  std::string label = "is_recid";
  std::string race = "race";
  std::string protected_race = "African-American";
  std::string female = "sex";
  std::string female_value = "Female";
  std::string priors = "priors_count";
  std::string score = "decile_score";
  std::string felony = "c_charge_degree";
  std::string felony_value = "F";
  std::string crime = "crime";
  std::string detention_days = "detention_days";
  // Optional raw columns used for sample restrictions when present.
  std::string screening_gap = "days_b_screening_arrest";
  std::string charge_degree = "c_charge_degree";
  std::string traffic_value = "O";
  double max_screening_gap = 30.0;
  // Maps raw crime labels to table categories before lookup.
  std::vector<std::pair<std::string, std::string>> crime_aliases;
  bool unknown_crime_to_fallback = false;

  Json to_json() const;
  static RosterSchema from_json(const Json& doc);
};

struct Roster {
  Dataset data;  // features, y, group, "crime", "detention_days"
  std::vector<std::string> race_levels;  // first level is the reference
  std::size_t rows_read = 0;
  std::size_t rows_filtered = 0;
};

Roster ingest_roster(const CsvTable& table, const RosterSchema& schema);
Roster ingest_roster(const std::string& path, const RosterSchema& schema);

struct EmpiricalConfig {
  std::vector<std::string> families = {"logit"};
  ConvexifierKind convexifier = ConvexifierKind::Logistic;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
  TrainConfig train;
};

struct EmpiricalColumn {
  std::string family;
  bool weighted = false;
  MetricsReport test;
  double auc_train = 0.0;
  double auc_test = 0.0;
};

struct EmpiricalTable {
  std::vector<EmpiricalColumn> columns;
  std::vector<std::string> row_labels() const;
  std::string to_csv() const;
};

// Splits with a seeded permutation, then fits each family unweighted
// (symmetric quartet) and weighted (`quartet`); every column is scored under
// `quartet` on the test rows. Both variants of a family share one seed.
EmpiricalTable run_empirical(const Dataset& roster, const LossQuartet& quartet,
                             const EmpiricalConfig& config);

}  // namespace asymdec::pretrial
