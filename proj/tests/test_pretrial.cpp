#include "asymdec/errors.hpp"
#include "asymdec/pretrial.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace asymdec;
using namespace asymdec::pretrial;

namespace {

struct TableRow {
  const char* crime;
  double recidivism;
  double benefit;
};

// Independent copy of the per-crime cost entries.
constexpr TableRow kExpectedRows[] = {
    {"Murder", 10754, 11732},          {"Rape/Sexual Assault", 266, 353},
    {"Aggravated Assault", 126, 127},  {"Robbery", 48, 230},
    {"Arson/Other", 23, 292},          {"Motor Vehicle Theft", 11, 53},
    {"Household Burglary", 7, 64},     {"Forgery/Counterfeiting", 5, 46},
    {"Fraud", 5, 49},                  {"Larceny/Theft", 3, 43},
};

const char* kHeader = "is_recid,race,sex,priors_count,decile_score,c_charge_degree,crime,detention_days\n";

// Synthetic roster whose recidivism depends on priors and score.
std::string synthetic_roster(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise;
  const char* races[] = {"African-American", "Caucasian", "Hispanic"};
  std::ostringstream csv;
  csv << kHeader;
  for (std::size_t i = 0; i < n; ++i) {
    const int priors = static_cast<int>(gen() % 10);
    const int score = 1 + static_cast<int>(gen() % 10);
    const double index = 0.3 * priors + 0.25 * score - 2.5 + noise(gen);
    csv << (index > 0 ? 1 : 0) << ',' << races[gen() % 3] << ',' << (gen() % 4 == 0 ? "Female" : "Male")
        << ',' << priors << ',' << score << ',' << (gen() % 2 ? "F" : "M") << ','
        << kExpectedRows[gen() % 10].crime << ',' << gen() % 120 << '\n';
  }
  return csv.str();
}

}  // namespace

TEST_CASE("embedded cost table matches an independent copy") {
  REQUIRE(kCrimeTable.size() == std::size(kExpectedRows));
  for (std::size_t k = 0; k < kCrimeTable.size(); ++k) {
    CHECK(kCrimeTable[k].crime == kExpectedRows[k].crime);
    CHECK(kCrimeTable[k].recidivism == kExpectedRows[k].recidivism);
    CHECK(kCrimeTable[k].detention_benefit == kExpectedRows[k].benefit);
  }
}

TEST_CASE("detention benefit, detention cost and recidivism cost") {
  const CostBenefitTables tables;
  CHECK(ecd(tables, 1.0) == 0.347);
  CHECK(ecd(tables, 0.0) == 0.0);
  CHECK(ecd(tables, 100.0) == doctest::Approx(34.7).epsilon(1e-15));
  CHECK_THROWS_AS(ecd(tables, -1.0), NegativeDuration);
  CHECK(ebd(tables, "Murder") == doctest::Approx(586.6).epsilon(1e-15));
  CHECK(ebd(tables, "Larceny/Theft") == doctest::Approx(2.15).epsilon(1e-15));
  CHECK_THROWS_AS(ebd(tables, "Jaywalking"), UnknownCrimeType);
  CHECK(recidivism_cost(tables, "Murder") == 23.0);
  CHECK(recidivism_cost(tables, "Jaywalking") == 23.0);

  CostBenefitTables per_crime;
  per_crime.recidivism_mode = RecidivismMode::PerCrime;
  CHECK(recidivism_cost(per_crime, "Murder") == 10754.0);
  CHECK(recidivism_cost(per_crime, "Fraud") == 5.0);
  CHECK_THROWS_AS(recidivism_cost(per_crime, "Jaywalking"), UnknownCrimeType);
}

TEST_CASE("pretrial quartet cells") {
  const PretrialQuartet q{CostBenefitTables{}};
  const Cells murder = q.cells_for(0, "Murder", 10.0);
  CHECK(murder.pp == doctest::Approx(-583.13).epsilon(1e-14));
  CHECK(murder.np == doctest::Approx(3.47).epsilon(1e-14));
  CHECK(murder.pn == 23.0);
  CHECK(murder.nn == 0.0);
  CHECK(q.cells_for(1, "Fraud", 3.0).pn == 46.0);

  CostBenefitTables literal;
  literal.benefit_reduces_loss = false;
  CHECK(PretrialQuartet(literal).cells_for(0, "Murder", 10.0).pp ==
        doctest::Approx(586.6 + 3.47).epsilon(1e-14));
}

TEST_CASE("moving a record to group 1 doubles the scaled terms") {
  const CostBenefitTables tables;
  const PretrialQuartet q{tables};
  for (const auto& entry : kCrimeTable) {
    for (double days : {0.0, 1.0, 37.0, 400.0}) {
      const Cells g0 = q.cells_for(0, entry.crime, days);
      const Cells g1 = q.cells_for(1, entry.crime, days);
      CHECK(g1.pn == 2 * g0.pn);
      CHECK(g1.np == 2 * g0.np);
      const double benefit0 = ecd(tables, days) - g0.pp;
      const double benefit1 = ecd(tables, days) - g1.pp;
      CHECK(benefit1 == doctest::Approx(2 * benefit0).epsilon(1e-14));
      CHECK(g1.nn == g0.nn);
    }
  }
}

TEST_CASE("weights are positive for every crime, group and duration") {
  const CostBenefitTables tables;
  const PretrialQuartet q{tables};
  for (int g : {0, 1}) {
    const double scale = g == 0 ? 1.0 : 2.0;
    for (const auto& entry : kExpectedRows) {
      for (double days : {0.0, 0.5, 10.0, 1000.0}) {
        const auto pair = compute_net_losses(q.cells_for(g, entry.crime, days));
        const double ecd_value = 0.347 * days;
        const double ebd_value = 0.05 * entry.benefit;
        // Symbolic weights: 2(lambda ECD + gamma EBD - ECD) and 2 gamma C.
        CHECK(weight(pair, 1) ==
              doctest::Approx(2 * (scale * ecd_value + scale * ebd_value - ecd_value)).epsilon(1e-13));
        CHECK(weight(pair, -1) == doctest::Approx(2 * scale * 23.0).epsilon(1e-15));
        CHECK(weight(pair, 1) > 0.0);
        CHECK(weight(pair, -1) > 0.0);
      }
    }
  }
}

TEST_CASE("cost tables serialize and reject edits to the crime table") {
  CostBenefitTables tables;
  tables.recidivism_mode = RecidivismMode::PerCrime;
  tables.benefit_reduces_loss = false;
  const Json doc = tables.to_json();
  CHECK(CostBenefitTables::from_json(doc).to_json() == doc);

  Json edited = doc;
  edited["crimes"][0]["recidivism"] = 1.0;
  CHECK_THROWS_AS(CostBenefitTables::from_json(edited), ConfigError);
  CHECK_THROWS_AS(CostBenefitTables::from_json(Json{{"benefit_scale", -1.0}}), ConfigError);
  CHECK_THROWS_AS(CostBenefitTables::from_json(Json{{"surcharge", 1.0}}), ConfigError);

  const auto parsed = pretrial::quartet_from_json(Json{{"type", "pretrial"}});
  CHECK(parsed->cells_for(1, "Fraud", 0.0).pn == 46.0);
}

TEST_CASE("roster ingestion builds the documented features") {
  const std::string csv = std::string(kHeader) +
                          "1,African-American,Female,3,7,F,Fraud,12\n"
                          "0,Caucasian,Male,0,2,M,Murder,0\n"
                          "1,Hispanic,1,5,9,1,Robbery,30\n";
  const Roster roster = ingest_roster(parse_csv(csv), RosterSchema{});
  const Dataset& d = roster.data;
  REQUIRE(d.size() == 3);
  CHECK(roster.race_levels == std::vector<std::string>{"African-American", "Caucasian", "Hispanic"});
  CHECK(d.feature_names == std::vector<std::string>{"race_Caucasian", "race_Hispanic", "female", "priors",
                                                    "score", "felony", "score_x_race_Caucasian",
                                                    "score_x_race_Hispanic"});
  CHECK(d.y == std::vector<int>{1, -1, 1});
  CHECK(d.group == std::vector<int>{1, 0, 0});
  Eigen::RowVectorXd first(8), second(8), third(8);
  first << 0, 0, 1, 3, 7, 1, 0, 0;
  second << 1, 0, 0, 0, 2, 0, 2, 0;
  third << 0, 1, 1, 5, 9, 1, 0, 9;
  CHECK(d.X.row(0) == first);
  CHECK(d.X.row(1) == second);
  CHECK(d.X.row(2) == third);
  CHECK(d.text_columns.at("crime")[1] == "Murder");
  CHECK(d.numeric_columns.at("detention_days")[2] == 30.0);
}

TEST_CASE("roster ingestion errors and filters") {
  const RosterSchema schema;
  const std::string missing_score =
      "is_recid,race,sex,priors_count,c_charge_degree,crime,detention_days\n1,A,Male,0,F,Fraud,1\n";
  CHECK_THROWS_AS(ingest_roster(parse_csv(missing_score), schema), SchemaError);
  CHECK_THROWS_AS(ingest_roster(parse_csv(std::string(kHeader) + "2,A,Male,0,3,F,Fraud,1\n"), schema),
                  ParseError);
  CHECK_THROWS_AS(ingest_roster(parse_csv(std::string(kHeader) + "1,A,Male,x,3,F,Fraud,1\n"), schema),
                  ParseError);
  CHECK_THROWS_AS(ingest_roster(parse_csv(std::string(kHeader) + "1,A,Male,0,3,F,Fraud,-2\n"), schema),
                  NegativeDuration);
  const std::string unknown = std::string(kHeader) + "1,A,Male,0,3,F,Jaywalking,1\n";
  CHECK_THROWS_AS(ingest_roster(parse_csv(unknown), schema), UnknownCrimeType);
  RosterSchema lenient;
  lenient.unknown_crime_to_fallback = true;
  CHECK(ingest_roster(parse_csv(unknown), lenient).data.text_columns.at("crime")[0] == "Arson/Other");
  RosterSchema aliased;
  aliased.crime_aliases = {{"Jaywalking", "Fraud"}};
  CHECK(ingest_roster(parse_csv(unknown), aliased).data.text_columns.at("crime")[0] == "Fraud");

  const std::string with_gap = std::string(kHeader).insert(std::string(kHeader).size() - 1,
                                                            ",days_b_screening_arrest") +
                               "1,A,Male,0,3,F,Fraud,1,-31\n"
                               "1,A,Male,0,3,O,Fraud,1,0\n"
                               "0,A,Male,0,3,F,Fraud,1,30\n";
  const Roster filtered = ingest_roster(parse_csv(with_gap), schema);
  CHECK(filtered.rows_read == 3);
  CHECK(filtered.rows_filtered == 2);
  CHECK(filtered.data.size() == 1);

  const Json doc = aliased.to_json();
  CHECK(RosterSchema::from_json(doc).to_json() == doc);
  CHECK_THROWS_AS(RosterSchema::from_json(Json{{"colour", "x"}}), ConfigError);
}

TEST_CASE("empirical comparison emits the table layout") {
  const Roster roster = ingest_roster(parse_csv(synthetic_roster(200, 1)), RosterSchema{});
  const PretrialQuartet quartet{CostBenefitTables{}};
  EmpiricalConfig config;
  const auto table = run_empirical(roster.data, quartet, config);
  REQUIRE(table.columns.size() == 2);
  CHECK_FALSE(table.columns[0].weighted);
  CHECK(table.columns[1].weighted);
  CHECK(table.row_labels().size() == 13);
  for (const auto& column : table.columns) {
    const auto& t = column.test;
    CHECK(t.count() == 60);
    CHECK(t.overall_cost == doctest::Approx(t.tp_cost + t.fn_cost + t.tn_cost + t.fp_cost).epsilon(1e-13));
  }
  const std::string csv = table.to_csv();
  CHECK(csv.rfind("metric,logit_unweighted,logit_weighted\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 14);
  CHECK(run_empirical(roster.data, quartet, config).to_csv() == csv);
}

TEST_CASE("a symmetric quartet makes weighted and unweighted columns identical") {
  const Roster roster = ingest_roster(parse_csv(synthetic_roster(200, 2)), RosterSchema{});
  EmpiricalConfig config;
  config.families = {"logit", "shallow"};
  config.train.epochs = 20;
  const auto table = run_empirical(roster.data, *symmetric_quartet(), config);
  REQUIRE(table.columns.size() == 4);
  for (std::size_t k = 0; k < 4; k += 2) {
    const auto plain = table.columns[k].test.table_values(table.columns[k].auc_train);
    const auto weighted = table.columns[k + 1].test.table_values(table.columns[k + 1].auc_train);
    for (std::size_t j = 0; j < plain.size(); ++j) {
      if (std::isnan(plain[j])) {
        CHECK(std::isnan(weighted[j]));
      } else {
        CHECK(plain[j] == weighted[j]);
      }
    }
  }
  EmpiricalConfig none;
  none.families = {};
  CHECK_THROWS_AS(run_empirical(roster.data, *symmetric_quartet(), none), ConfigError);
}
