#include "asymdec/pretrial.hpp"

#include "asymdec/errors.hpp"
#include "asymdec/format.hpp"
#include "asymdec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace asymdec::pretrial {

namespace {

double scaling_at(const std::vector<double>& scaling, int group, const char* what) {
  if (group < 0 || static_cast<std::size_t>(group) >= scaling.size()) {
    throw SchemaError("group id " + std::to_string(group) + " has no " + what + " scaling");
  }
  return scaling[static_cast<std::size_t>(group)];
}

std::string_view to_string(RecidivismMode mode) noexcept {
  return mode == RecidivismMode::Constant ? "constant" : "per_crime";
}

RecidivismMode parse_mode(const std::string& name) {
  if (name == "constant") return RecidivismMode::Constant;
  if (name == "per_crime") return RecidivismMode::PerCrime;
  throw ConfigError("unknown recidivism mode '" + name + "'");
}

template <typename T>
void read_key(const Json& doc, const char* key, T& out, const char* what) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(what) + " key '" + key + "' has the wrong type: " + e.what());
  }
}

void reject_unknown(const Json& doc, const Json& known, const char* what) {
  if (!doc.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError(std::string("unknown ") + what + " key '" + key + "'");
  }
}

}  // namespace

Json CostBenefitTables::to_json() const {
  Json crimes = Json::array();
  for (const auto& entry : kCrimeTable) {
    crimes.push_back({{"crime", std::string(entry.crime)},
                      {"recidivism", entry.recidivism},
                      {"detention_benefit", entry.detention_benefit}});
  }
  return Json{{"benefit_scale", benefit_scale},
              {"detention_cost_per_day", detention_cost_per_day},
              {"recidivism_constant", recidivism_constant},
              {"recidivism_mode", std::string(to_string(recidivism_mode))},
              {"benefit_scaling", benefit_scaling},
              {"cost_scaling", cost_scaling},
              {"correct_release_loss", correct_release_loss},
              {"benefit_reduces_loss", benefit_reduces_loss},
              {"crimes", crimes}};
}

CostBenefitTables CostBenefitTables::from_json(const Json& doc) {
  CostBenefitTables tables;
  Json known = tables.to_json();
  known["type"] = "pretrial";
  known["min_net_loss"] = 0.0;
  known["bound"] = 0.0;
  reject_unknown(doc, known, "cost table");
  read_key(doc, "benefit_scale", tables.benefit_scale, "cost table");
  read_key(doc, "detention_cost_per_day", tables.detention_cost_per_day, "cost table");
  read_key(doc, "recidivism_constant", tables.recidivism_constant, "cost table");
  read_key(doc, "benefit_scaling", tables.benefit_scaling, "cost table");
  read_key(doc, "cost_scaling", tables.cost_scaling, "cost table");
  read_key(doc, "correct_release_loss", tables.correct_release_loss, "cost table");
  read_key(doc, "benefit_reduces_loss", tables.benefit_reduces_loss, "cost table");
  std::string mode(to_string(tables.recidivism_mode));
  read_key(doc, "recidivism_mode", mode, "cost table");
  tables.recidivism_mode = parse_mode(mode);
  // The crime table is embedded; an exported copy is accepted only verbatim.
  if (doc.contains("crimes") && doc.at("crimes") != known.at("crimes")) {
    throw ConfigError("the crime table is fixed; remove 'crimes' or leave it unchanged");
  }

  const auto non_negative = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!non_negative(tables.benefit_scale) || !non_negative(tables.detention_cost_per_day) ||
      !non_negative(tables.recidivism_constant)) {
    throw ConfigError("cost table entries must be finite and non-negative");
  }
  const std::size_t groups = tables.benefit_scaling.size();
  if (groups == 0 || tables.cost_scaling.size() != groups ||
      tables.correct_release_loss.size() != groups) {
    throw ConfigError("group scalings must be non-empty and of equal length");
  }
  for (std::size_t g = 0; g < groups; ++g) {
    if (!non_negative(tables.benefit_scaling[g]) || !non_negative(tables.cost_scaling[g]) ||
        !std::isfinite(tables.correct_release_loss[g])) {
      throw ConfigError("group scalings must be finite and non-negative");
    }
  }
  return tables;
}

const CrimeCosts& crime_entry(std::string_view crime) {
  for (const auto& entry : kCrimeTable) {
    if (entry.crime == crime) return entry;
  }
  throw UnknownCrimeType("'" + std::string(crime) + "' is not in the cost table");
}

double ebd(const CostBenefitTables& tables, std::string_view crime) {
  return tables.benefit_scale * crime_entry(crime).detention_benefit;
}

double ecd(const CostBenefitTables& tables, double detention_days) {
  if (!(detention_days >= 0.0)) {
    throw NegativeDuration("detention days must be non-negative, got " +
                           format_double(detention_days));
  }
  return tables.detention_cost_per_day * detention_days;
}

double recidivism_cost(const CostBenefitTables& tables, std::string_view crime) {
  if (tables.recidivism_mode == RecidivismMode::Constant) return tables.recidivism_constant;
  return crime_entry(crime).recidivism;
}

PretrialQuartet::PretrialQuartet(CostBenefitTables tables) : tables_(std::move(tables)) {}

Cells PretrialQuartet::cells_for(int group, std::string_view crime, double detention_days) const {
  const double benefit_scaling = scaling_at(tables_.benefit_scaling, group, "benefit");
  const double cost_scaling = scaling_at(tables_.cost_scaling, group, "cost");
  const double benefit = benefit_scaling * ebd(tables_, crime);
  const double detention_cost = ecd(tables_, detention_days);
  Cells cells;
  cells.pp = (tables_.benefit_reduces_loss ? -benefit : benefit) + detention_cost;
  cells.pn = benefit_scaling * recidivism_cost(tables_, crime);
  cells.np = cost_scaling * detention_cost;
  cells.nn = tables_.correct_release_loss[static_cast<std::size_t>(group)];
  return cells;
}

Cells PretrialQuartet::cells(const RowView& row) const {
  const auto group = row.group();
  if (!group) throw SchemaError("pretrial quartet needs a group column");
  return cells_for(*group, row.text("crime"), row.numeric("detention_days"));
}

Json PretrialQuartet::to_json() const {
  Json doc = tables_.to_json();
  doc.erase("crimes");
  doc.update(common_json());
  doc["type"] = "pretrial";
  return doc;
}

std::shared_ptr<PretrialQuartet> quartet_from_json(const Json& spec) {
  return std::make_shared<PretrialQuartet>(CostBenefitTables::from_json(spec));
}

Json RosterSchema::to_json() const {
  Json aliases = Json::object();
  for (const auto& [from, to] : crime_aliases) aliases[from] = to;
  return Json{{"label", label},
              {"race", race},
              {"protected_race", protected_race},
              {"female", female},
              {"female_value", female_value},
              {"priors", priors},
              {"score", score},
              {"felony", felony},
              {"felony_value", felony_value},
              {"crime", crime},
              {"detention_days", detention_days},
              {"screening_gap", screening_gap},
              {"charge_degree", charge_degree},
              {"traffic_value", traffic_value},
              {"max_screening_gap", max_screening_gap},
              {"crime_aliases", aliases},
              {"unknown_crime_to_fallback", unknown_crime_to_fallback}};
}

RosterSchema RosterSchema::from_json(const Json& doc) {
  RosterSchema schema;
  reject_unknown(doc, schema.to_json(), "roster schema");
  read_key(doc, "label", schema.label, "roster schema");
  read_key(doc, "race", schema.race, "roster schema");
  read_key(doc, "protected_race", schema.protected_race, "roster schema");
  read_key(doc, "female", schema.female, "roster schema");
  read_key(doc, "female_value", schema.female_value, "roster schema");
  read_key(doc, "priors", schema.priors, "roster schema");
  read_key(doc, "score", schema.score, "roster schema");
  read_key(doc, "felony", schema.felony, "roster schema");
  read_key(doc, "felony_value", schema.felony_value, "roster schema");
  read_key(doc, "crime", schema.crime, "roster schema");
  read_key(doc, "detention_days", schema.detention_days, "roster schema");
  read_key(doc, "screening_gap", schema.screening_gap, "roster schema");
  read_key(doc, "charge_degree", schema.charge_degree, "roster schema");
  read_key(doc, "traffic_value", schema.traffic_value, "roster schema");
  read_key(doc, "max_screening_gap", schema.max_screening_gap, "roster schema");
  read_key(doc, "unknown_crime_to_fallback", schema.unknown_crime_to_fallback, "roster schema");
  if (doc.contains("crime_aliases")) {
    const Json& aliases = doc.at("crime_aliases");
    if (!aliases.is_object()) throw ConfigError("crime_aliases must map strings to strings");
    for (const auto& [from, to] : aliases.items()) {
      if (!to.is_string()) throw ConfigError("crime_aliases must map strings to strings");
      schema.crime_aliases.emplace_back(from, to.get<std::string>());
    }
  }
  return schema;
}

namespace {

std::size_t require_column(const CsvTable& table, const std::string& name) {
  const auto index = table.column(name);
  if (!index) throw SchemaError("roster has no column '" + name + "'");
  return *index;
}

// 0/1 numbers, or the configured string value for "true".
double indicator(const std::string& field, const std::string& true_value, std::size_t row,
                 const std::string& column) {
  if (field == true_value) return 1.0;
  const double v = [&] {
    try {
      return parse_number(field, row, column);
    } catch (const ParseError&) {
      return 0.0;  // any other label counts as "false"
    }
  }();
  if (v != 0.0 && v != 1.0) {
    throw ParseError("row " + std::to_string(row) + ", column '" + column +
                     "': indicator must be 0, 1 or '" + true_value + "'");
  }
  return v;
}

std::string resolve_crime(const RosterSchema& schema, const std::string& raw, std::size_t row) {
  std::string crime = raw;
  for (const auto& [from, to] : schema.crime_aliases) {
    if (from == raw) {
      crime = to;
      break;
    }
  }
  const bool known = std::any_of(kCrimeTable.begin(), kCrimeTable.end(),
                                 [&](const CrimeCosts& c) { return c.crime == crime; });
  if (known) return crime;
  if (schema.unknown_crime_to_fallback) return std::string(kFallbackCrime);
  throw UnknownCrimeType("row " + std::to_string(row) + ": crime '" + raw +
                         "' is not in the cost table");
}

}  // namespace

Roster ingest_roster(const CsvTable& table, const RosterSchema& schema) {
  const std::size_t label_col = require_column(table, schema.label);
  const std::size_t race_col = require_column(table, schema.race);
  const std::size_t female_col = require_column(table, schema.female);
  const std::size_t priors_col = require_column(table, schema.priors);
  const std::size_t score_col = require_column(table, schema.score);
  const std::size_t felony_col = require_column(table, schema.felony);
  const std::size_t crime_col = require_column(table, schema.crime);
  const std::size_t days_col = require_column(table, schema.detention_days);
  const auto gap_col = table.column(schema.screening_gap);
  const auto degree_col = table.column(schema.charge_degree);

  struct Record {
    int y;
    std::string race;
    double female, priors, score, felony, days;
    std::string crime;
  };
  std::vector<Record> records;
  Roster roster;
  roster.rows_read = table.rows.size();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& fields = table.rows[i];
    const std::size_t row = i + 1;
    if (fields.size() != table.header.size()) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                       " fields, header has " + std::to_string(table.header.size()));
    }
    // Sample restrictions, applied only when the raw columns are present.
    if (gap_col && !fields[*gap_col].empty()) {
      const double gap = parse_number(fields[*gap_col], row, schema.screening_gap);
      if (std::abs(gap) > schema.max_screening_gap) {
        ++roster.rows_filtered;
        continue;
      }
    }
    if (degree_col && fields[*degree_col] == schema.traffic_value) {
      ++roster.rows_filtered;
      continue;
    }
    Record r;
    const double label = parse_number(fields[label_col], row, schema.label);
    if (label == 1.0) {
      r.y = 1;
    } else if (label == 0.0 || label == -1.0) {
      r.y = -1;
    } else {
      throw ParseError("row " + std::to_string(row) + ", column '" + schema.label +
                       "': label must be 0/1 or -1/+1");
    }
    r.race = fields[race_col];
    r.female = indicator(fields[female_col], schema.female_value, row, schema.female);
    r.priors = parse_number(fields[priors_col], row, schema.priors);
    r.score = parse_number(fields[score_col], row, schema.score);
    r.felony = indicator(fields[felony_col], schema.felony_value, row, schema.felony);
    r.days = parse_number(fields[days_col], row, schema.detention_days);
    if (r.days < 0.0) {
      throw NegativeDuration("row " + std::to_string(row) + ": detention days " +
                             format_double(r.days) + " is negative");
    }
    r.crime = resolve_crime(schema, fields[crime_col], row);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw EmptyData("roster has no rows after filtering");

  // Sorted race levels; the first is the reference category.
  const std::set<std::string> levels_set = [&] {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.race);
    return s;
  }();
  roster.race_levels.assign(levels_set.begin(), levels_set.end());
  const std::size_t dummies = roster.race_levels.size() - 1;

  Dataset& data = roster.data;
  for (std::size_t k = 1; k < roster.race_levels.size(); ++k) {
    data.feature_names.push_back("race_" + roster.race_levels[k]);
  }
  data.feature_names.insert(data.feature_names.end(), {"female", "priors", "score", "felony"});
  for (std::size_t k = 1; k < roster.race_levels.size(); ++k) {
    data.feature_names.push_back("score_x_race_" + roster.race_levels[k]);
  }

  const std::size_t n = records.size();
  data.X = RowMatrix::Zero(static_cast<Eigen::Index>(n),
                           static_cast<Eigen::Index>(data.feature_names.size()));
  data.y.resize(n);
  data.group.resize(n);
  auto& crimes = data.text_columns["crime"];
  auto& days = data.numeric_columns["detention_days"];
  crimes.resize(n);
  days.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Record& r = records[i];
    const auto row = static_cast<Eigen::Index>(i);
    const auto level = static_cast<std::size_t>(
        std::lower_bound(roster.race_levels.begin(), roster.race_levels.end(), r.race) -
        roster.race_levels.begin());
    if (level > 0) {
      data.X(row, static_cast<Eigen::Index>(level - 1)) = 1.0;
      data.X(row, static_cast<Eigen::Index>(dummies + 4 + level - 1)) = r.score;
    }
    const auto base = static_cast<Eigen::Index>(dummies);
    data.X(row, base) = r.female;
    data.X(row, base + 1) = r.priors;
    data.X(row, base + 2) = r.score;
    data.X(row, base + 3) = r.felony;
    data.y[i] = r.y;
    data.group[i] = r.race == schema.protected_race ? 1 : 0;
    crimes[i] = r.crime;
    days[i] = r.days;
  }
  data.check();
  return roster;
}

Roster ingest_roster(const std::string& path, const RosterSchema& schema) {
  return ingest_roster(read_csv(path), schema);
}

std::vector<std::string> EmpiricalTable::row_labels() const { return MetricsReport::table_labels(); }

std::string EmpiricalTable::to_csv() const {
  std::ostringstream out;
  out << "metric";
  for (const auto& column : columns) {
    out << ',' << column.family << '_' << (column.weighted ? "weighted" : "unweighted");
  }
  out << '\n';
  std::vector<std::vector<double>> values;
  for (const auto& column : columns) values.push_back(column.test.table_values(column.auc_train));
  const auto labels = row_labels();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    out << labels[k];
    for (const auto& v : values) out << ',' << format_double(v[k]);
    out << '\n';
  }
  return out.str();
}

EmpiricalTable run_empirical(const Dataset& roster, const LossQuartet& quartet,
                             const EmpiricalConfig& config) {
  if (config.families.empty()) throw ConfigError("pretrial run needs at least one model family");
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = roster.size();
  const auto test_size =
      static_cast<std::size_t>(std::ceil(config.test_fraction * static_cast<double>(n)));
  if (test_size == 0 || test_size >= n) throw EmptyData("roster too small to split");

  Rng rng(derive_seed(config.seed, 0));
  std::vector<std::size_t> order = rng.permutation(n);
  std::vector<std::size_t> train_rows(order.begin(), order.end() - static_cast<long>(test_size));
  std::vector<std::size_t> test_rows(order.end() - static_cast<long>(test_size), order.end());
  const Dataset train = roster.subset(train_rows);
  const Dataset test = roster.subset(test_rows);

  const QuartetPtr symmetric = symmetric_quartet();
  const WeightedData plain = weigh_dataset(*symmetric, train);
  const WeightedData weighted = weigh_dataset(quartet, train);

  EmpiricalTable table;
  for (std::size_t f = 0; f < config.families.size(); ++f) {
    const ModelFamily family = parse_family(config.families[f]);
    TrainConfig tc = config.train;
    tc.convexifier = config.convexifier;
    tc.seed = derive_seed(config.seed, f + 1);
    for (const bool is_weighted : {false, true}) {
      FitResult fitted = fit(is_weighted ? weighted : plain, family, tc);
      if (!is_weighted) fitted.model.fixed_threshold = 0.5;
      EmpiricalColumn column;
      column.family = config.families[f];
      column.weighted = is_weighted;
      column.test = evaluate(fitted.model, test, quartet);
      const MetricsReport on_train = evaluate(fitted.model, train, quartet);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      column.auc_train = on_train.auc.value_or(nan);
      column.auc_test = column.test.auc.value_or(nan);
      table.columns.push_back(std::move(column));
    }
  }
  return table;
}

}  // namespace asymdec::pretrial
