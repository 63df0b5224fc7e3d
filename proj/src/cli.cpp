#include "asymdec/cli.hpp"

#include "asymdec/dataset.hpp"
#include "asymdec/format.hpp"
#include "asymdec/loss.hpp"
#include "asymdec/metrics.hpp"
#include "asymdec/models.hpp"
#include "asymdec/pretrial.hpp"
#include "asymdec/simlab.hpp"
#include "asymdec/train.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

namespace asymdec::cli {

int exit_code_for(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Config:
    case ErrorCategory::Domain:
      return kConfig;
    case ErrorCategory::Data:
      return kData;
    case ErrorCategory::Assumption:
      return kAssumption;
    case ErrorCategory::Numeric:
      return kFailure;
  }
  return kFailure;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw ConfigError("SHA-256 is unavailable");
  }
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    const auto got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(got));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

namespace {

namespace fs = std::filesystem;

// Flag defaults live here and in the library config structs only; selfcheck
// compares the two.
struct Defaults {
  std::string model = "logit";
  std::string convexifier = std::string(to_string(TrainConfig{}.convexifier));
  std::string label = CsvDatasetOptions{}.label_column;
  std::string group = CsvDatasetOptions{}.group_column;
  std::string out = ".";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string experiment = "baseline";
  std::string families = "logit";
  double test_fraction = pretrial::EmpiricalConfig{}.test_fraction;
};

Json load_json(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string(what) + " '" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Collects what a run read and wrote, then writes manifest.json.
class Manifest {
 public:
  Manifest(std::string subcommand, const std::vector<std::string>& args)
      : subcommand_(std::move(subcommand)), args_(args.begin() + 1, args.end()) {}

  void input(const std::string& role, const std::string& path) {
    inputs_.push_back({{"role", role}, {"path", path}, {"sha256", sha256_file(path)}});
  }
  void set(const std::string& key, Json value) { extra_[key] = std::move(value); }

  void write_output(const fs::path& dir, const std::string& name, const std::string& text) {
    write_text((dir / name).string(), text);
    outputs_.push_back(name);
  }

  void finish(const fs::path& dir, std::uint64_t seed, Json config) {
    Json doc{{"subcommand", subcommand_},
             {"arguments", args_},
             {"version", std::string(kVersion)},
             {"seed", seed},
             {"resolved_config", std::move(config)},
             {"inputs", inputs_},
             {"outputs", outputs_}};
    for (auto& [key, value] : extra_.items()) doc[key] = value;
    write_text((dir / "manifest.json").string(), doc.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  std::vector<std::string> args_;
  Json inputs_ = Json::array();
  Json outputs_ = Json::array();
  Json extra_ = Json::object();
};

fs::path prepare_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out + "': " + ec.message());
  return dir;
}

struct DataFlags {
  std::string path;
  std::string label;
  std::string group;
  std::string features;

  CsvDatasetOptions options() const {
    return CsvDatasetOptions{label, group, split_list(features)};
  }
  Json to_json() const {
    return Json{{"label", label}, {"group", group}, {"features", split_list(features)}};
  }
};

void add_data_flags(CLI::App& app, DataFlags& flags, const Defaults& d) {
  app.add_option("--data", flags.path, "Input CSV with a header row")->required();
  app.add_option("--label", flags.label, "Label column (0/1 or -1/+1)")->default_val(d.label);
  app.add_option("--group", flags.group, "Group id column, used when present")
      ->default_val(d.group);
  app.add_option("--features", flags.features, "Comma-separated feature columns");
}

Dataset load_data(const DataFlags& flags, Manifest& manifest) {
  manifest.input("data", flags.path);
  Dataset data = load_dataset_csv(flags.path, flags.options());
  if (data.empty()) throw EmptyData("'" + flags.path + "' has no rows");
  return data;
}

QuartetPtr load_loss(const std::string& path, Manifest& manifest) {
  manifest.input("loss", path);
  return load_quartet(path);
}

std::string row_id(const Dataset& data, std::size_t i) {
  const auto it = data.numeric_columns.find("row_id");
  if (it != data.numeric_columns.end()) return format_double(it->second[i]);
  return std::to_string(i);
}

// Per-row thresholds fed to a network's output stage.
Eigen::VectorXd thresholds_for(const SoftDecisionModel& model, const Dataset& data,
                               const LossQuartet* quartet) {
  Eigen::VectorXd c = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(data.size()), 0.5);
  if (!model.uses_threshold() || model.fixed_threshold) return c;
  if (!quartet) {
    throw ConfigError("this network model has no fixed threshold; pass --loss to supply one");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    c[static_cast<Eigen::Index>(i)] = threshold(*quartet, data.row(i));
  }
  return c;
}

void check_features(const SoftDecisionModel& model, const Dataset& data) {
  if (model.feature_names != data.feature_names) {
    throw DimensionMismatch("data features do not match the model's dictionary");
  }
}

SoftDecisionModel load_model(const std::string& path, Manifest& manifest) {
  manifest.input("model", path);
  return SoftDecisionModel::from_json(load_json(path, "model file"));
}

Json fit_summary(const FitResult& result) {
  Json doc{{"objective", result.objective},
           {"iterations", result.iterations},
           {"converged", result.converged},
           {"trace", result.trace}};
  if (result.cv) doc["cv"] = result.cv->to_json();
  return doc;
}

std::vector<double> parse_grid(const std::string& spec, sim::SweepParameter& parameter) {
  std::vector<std::string> parts;
  std::stringstream in(spec);
  for (std::string item; std::getline(in, item, ':');) parts.push_back(item);
  if (parts.size() != 4) throw ConfigError("--sweep expects name:start:stop:step");
  parameter = sim::parse_sweep_parameter(parts[0]);
  double start = 0, stop = 0, step = 0;
  try {
    start = std::stod(parts[1]);
    stop = std::stod(parts[2]);
    step = std::stod(parts[3]);
  } catch (const std::exception&) {
    throw ConfigError("--sweep bounds must be numbers");
  }
  if (!(step > 0.0) || !(stop >= start) || !std::isfinite(start) || !std::isfinite(stop)) {
    throw ConfigError("--sweep needs start <= stop and a positive step");
  }
  // Grid points are start + k * step so repeated runs agree bit for bit.
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = start + static_cast<double>(k) * step;
  return grid;
}

struct Check {
  std::string name;
  bool pass;
};

std::vector<Check> self_checks(const Defaults& d) {
  std::vector<Check> checks;
  const auto round_trips = [](const auto& config) {
    using T = std::decay_t<decltype(config)>;
    return T::from_json(config.to_json()).to_json() == config.to_json();
  };
  checks.push_back({"train config defaults round-trip", round_trips(TrainConfig{})});
  checks.push_back({"simulation config defaults round-trip", round_trips(sim::SimConfig{})});
  checks.push_back({"roster schema defaults round-trip", round_trips(pretrial::RosterSchema{})});
  checks.push_back(
      {"cost table defaults round-trip", round_trips(pretrial::CostBenefitTables{})});
  checks.push_back({"--convexifier default matches train config",
                    parse_convexifier(d.convexifier) == TrainConfig{}.convexifier});
  checks.push_back({"--model default is the linear family",
                    parse_family(d.model) == ModelFamily::Linear});
  checks.push_back({"--label/--group defaults match the CSV loader",
                    d.label == CsvDatasetOptions{}.label_column &&
                        d.group == CsvDatasetOptions{}.group_column});
  checks.push_back({"--test-fraction default matches the pretrial config",
                    d.test_fraction == pretrial::EmpiricalConfig{}.test_fraction});
  checks.push_back({"--seed default is 0", d.seed == 0 && TrainConfig{}.seed == 0 &&
                                                sim::SimConfig{}.seed == 0});
  checks.push_back({"--jobs default is 1", d.jobs == 1});

  const pretrial::CostBenefitTables tables;
  const pretrial::PretrialQuartet quartet(tables);
  checks.push_back({"detention cost of one day", pretrial::ecd(tables, 1.0) == 0.347});
  checks.push_back({"detention benefit of murder", pretrial::ebd(tables, "Murder") == 0.05 * 11732});
  checks.push_back({"recidivism constant", pretrial::recidivism_cost(tables, "Fraud") == 23.0});
  checks.push_back({"protected-group false-positive loss",
                    quartet.cells_for(1, "Fraud", 0.0).pn == 46.0});
  const Cells symmetric{0.0, 1.0, 1.0, 0.0};
  checks.push_back({"symmetric threshold is one half", threshold(symmetric) == 0.5});
  return checks;
}

int run_selfcheck(std::ostream& out, const Defaults& d) {
  const auto checks = self_checks(d);
  Json report{{"defaults",
               {{"cli",
                 {{"model", d.model},
                  {"convexifier", d.convexifier},
                  {"label", d.label},
                  {"group", d.group},
                  {"seed", d.seed},
                  {"jobs", d.jobs},
                  {"experiment", d.experiment},
                  {"families", d.families},
                  {"test_fraction", d.test_fraction}}},
                {"train", TrainConfig{}.to_json()},
                {"simulation", sim::SimConfig{}.to_json()},
                {"roster_schema", pretrial::RosterSchema{}.to_json()},
                {"cost_tables", pretrial::CostBenefitTables{}.to_json()}}},
              {"checks", Json::array()}};
  bool ok = true;
  for (const auto& c : checks) {
    report["checks"].push_back({{"name", c.name}, {"pass", c.pass}});
    ok = ok && c.pass;
  }
  out << report.dump(2) << '\n';
  return ok ? kOk : kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Defaults d;
  CLI::App app{"Binary decisions under covariate-driven asymmetric losses"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Train a weighted model and report training metrics");
  DataFlags fit_data;
  std::string fit_loss, fit_model, fit_convexifier, fit_config, fit_out;
  std::uint64_t fit_seed = 0;
  add_data_flags(*fit_cmd, fit_data, d);
  fit_cmd->add_option("--loss", fit_loss, "Loss specification JSON")->required();
  fit_cmd->add_option("--model", fit_model, "linear|logit|lasso|boosting|shallow|deep")
      ->default_val(d.model);
  fit_cmd->add_option("--convexifier", fit_convexifier, "logistic|exponential|hinge")
      ->default_val(d.convexifier);
  fit_cmd->add_option("--config", fit_config, "Training config JSON");
  fit_cmd->add_option("--seed", fit_seed, "Seed")->default_val(d.seed);
  fit_cmd->add_option("--out", fit_out, "Output directory")->default_val(d.out);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Score rows with a saved model");
  DataFlags predict_data;
  std::string predict_model, predict_loss, predict_out;
  add_data_flags(*predict_cmd, predict_data, d);
  predict_cmd->add_option("--model", predict_model, "Model JSON from fit")->required();
  predict_cmd->add_option("--loss", predict_loss, "Loss specification JSON (thresholds, weights)");
  predict_cmd->add_option("--out", predict_out, "Output directory")->default_val(d.out);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Cost and error metrics of a saved model");
  DataFlags eval_data;
  std::string eval_model, eval_loss, eval_out;
  add_data_flags(*eval_cmd, eval_data, d);
  eval_cmd->add_option("--model", eval_model, "Model JSON from fit")->required();
  eval_cmd->add_option("--loss", eval_loss, "Loss specification JSON")->required();
  eval_cmd->add_option("--out", eval_out, "Output directory")->default_val(d.out);

  // weights
  auto* weights_cmd = app.add_subcommand("weights", "Per-row weights and thresholds of a loss");
  DataFlags weights_data;
  std::string weights_loss, weights_out;
  add_data_flags(*weights_cmd, weights_data, d);
  weights_cmd->add_option("--loss", weights_loss, "Loss specification JSON")->required();
  weights_cmd->add_option("--out", weights_out, "Output directory")->default_val(d.out);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo experiments");
  std::string sim_config, sim_experiment, sim_sweep, sim_out;
  std::optional<std::size_t> sim_reps;
  std::optional<std::uint64_t> sim_seed;
  std::size_t sim_jobs = 1;
  sim_cmd->add_option("--config", sim_config, "Simulation config JSON");
  sim_cmd->add_option("--experiment", sim_experiment, "baseline|plugin|sweep|mistakes")
      ->default_val(d.experiment)
      ->check(CLI::IsMember({"baseline", "plugin", "sweep", "mistakes"}));
  sim_cmd->add_option("--reps", sim_reps, "Replications (overrides the config)");
  sim_cmd->add_option("--seed", sim_seed, "Master seed (overrides the config)");
  sim_cmd->add_option("--jobs", sim_jobs, "Worker threads")->default_val(d.jobs);
  sim_cmd->add_option("--sweep", sim_sweep, "phi0|psi0:start:stop:step; implies sweep");
  sim_cmd->add_option("--out", sim_out, "Output directory")->default_val(d.out);

  // pretrial
  auto* pre_cmd = app.add_subcommand("pretrial", "Weighted vs unweighted fits on a roster");
  std::string pre_data, pre_schema, pre_loss, pre_families, pre_convexifier, pre_config, pre_out;
  std::uint64_t pre_seed = 0;
  double pre_test_fraction = d.test_fraction;
  pre_cmd->add_option("--data", pre_data, "Roster CSV")->required();
  pre_cmd->add_option("--schema", pre_schema, "Roster column map JSON");
  pre_cmd->add_option("--loss", pre_loss, "Pretrial cost-table JSON");
  pre_cmd->add_option("--families", pre_families, "Comma-separated model families")
      ->default_val(d.families);
  pre_cmd->add_option("--convexifier", pre_convexifier, "logistic|exponential|hinge")
      ->default_val(d.convexifier);
  pre_cmd->add_option("--config", pre_config, "Training config JSON");
  pre_cmd->add_option("--seed", pre_seed, "Seed")->default_val(d.seed);
  pre_cmd->add_option("--test-fraction", pre_test_fraction, "Held-out share")
      ->default_val(d.test_fraction);
  pre_cmd->add_option("--out", pre_out, "Output directory")->default_val(d.out);

  auto* self_cmd = app.add_subcommand("selfcheck", "Check defaults and embedded constants");

  CLI::App* active = &app;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    if (!subs.empty()) active = subs.front();
    err << "ConfigError: " << e.what() << "\n\n" << active->help();
    return kConfig;
  }

  try {
    if (*fit_cmd) {
      Manifest manifest("fit", args);
      const Dataset data = load_data(fit_data, manifest);
      const QuartetPtr quartet = load_loss(fit_loss, manifest);
      TrainConfig config;
      if (!fit_config.empty()) {
        manifest.input("config", fit_config);
        config = TrainConfig::from_json(load_json(fit_config, "training config"));
      }
      config.seed = fit_seed;
      config.convexifier = parse_convexifier(fit_convexifier);
      config.check();
      const ModelFamily family = parse_family(fit_model);
      const WeightedData weighted = weigh_dataset(*quartet, data);
      const FitResult result = fit(weighted, family, config);
      const MetricsReport report = evaluate(result.model, data, *quartet);

      const fs::path dir = prepare_dir(fit_out);
      manifest.write_output(dir, "model.json", result.model.to_json().dump(2) + "\n");
      manifest.write_output(dir, "metrics.json", report.to_json().dump(2) + "\n");
      manifest.write_output(dir, "fit.json", fit_summary(result).dump(2) + "\n");
      manifest.finish(dir, fit_seed,
                      Json{{"model", std::string(to_string(family))},
                           {"data", fit_data.to_json()},
                           {"loss", quartet->to_json()},
                           {"train", config.to_json()}});
      return kOk;
    }
    if (*predict_cmd) {
      Manifest manifest("predict", args);
      const SoftDecisionModel model = load_model(predict_model, manifest);
      const Dataset data = load_data(predict_data, manifest);
      check_features(model, data);
      QuartetPtr quartet;
      if (!predict_loss.empty()) {
        quartet = load_loss(predict_loss, manifest);
        validate(*quartet, data);
      }
      const Eigen::VectorXd c = thresholds_for(model, data, quartet.get());
      const Eigen::VectorXd scores = model.predict_soft(data.X, c);
      std::ostringstream csv;
      csv << "row_id,soft_score,decision,threshold_c,weight_omega\n";
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        double c_i = model.fixed_threshold.value_or(0.5);
        double omega = std::numeric_limits<double>::quiet_NaN();
        if (quartet) {
          const Cells cells = quartet->cells(data.row(i));
          c_i = threshold(cells);
          omega = weight(compute_net_losses(cells), data.y[i]);
        }
        csv << row_id(data, i) << ',' << format_double(scores[k]) << ','
            << sign_of(scores[k]) << ',' << format_double(c_i) << ',' << format_double(omega)
            << '\n';
      }
      const fs::path dir = prepare_dir(predict_out);
      manifest.write_output(dir, "predictions.csv", csv.str());
      manifest.finish(dir, model.seed,
                      Json{{"data", predict_data.to_json()},
                           {"loss", quartet ? quartet->to_json() : Json(nullptr)}});
      return kOk;
    }
    if (*eval_cmd) {
      Manifest manifest("evaluate", args);
      const SoftDecisionModel model = load_model(eval_model, manifest);
      const Dataset data = load_data(eval_data, manifest);
      check_features(model, data);
      const QuartetPtr quartet = load_loss(eval_loss, manifest);
      validate(*quartet, data);
      const MetricsReport report = evaluate(model, data, *quartet);
      const fs::path dir = prepare_dir(eval_out);
      manifest.write_output(dir, "metrics.json", report.to_json().dump(2) + "\n");
      manifest.finish(dir, model.seed,
                      Json{{"data", eval_data.to_json()}, {"loss", quartet->to_json()}});
      return kOk;
    }
    if (*weights_cmd) {
      Manifest manifest("weights", args);
      const Dataset data = load_data(weights_data, manifest);
      const QuartetPtr quartet = load_loss(weights_loss, manifest);
      const ValidationReport validation = validate(*quartet, data);
      std::ostringstream csv;
      csv << "row_id,y,a,b,weight_omega,threshold_c\n";
      for (std::size_t i = 0; i < data.size(); ++i) {
        const Cells cells = quartet->cells(data.row(i));
        const NetLossPair net = compute_net_losses(cells);
        csv << row_id(data, i) << ',' << data.y[i] << ',' << format_double(net.a) << ','
            << format_double(net.b) << ',' << format_double(weight(net, data.y[i])) << ','
            << format_double(threshold(cells)) << '\n';
      }
      const fs::path dir = prepare_dir(weights_out);
      manifest.write_output(dir, "weights.csv", csv.str());
      manifest.set("validation", {{"rows", validation.rows},
                                  {"min_positive_net_loss", validation.min_positive_net_loss},
                                  {"min_negative_net_loss", validation.min_negative_net_loss},
                                  {"max_abs_loss", validation.max_abs_loss}});
      manifest.finish(dir, 0, Json{{"data", weights_data.to_json()}, {"loss", quartet->to_json()}});
      return kOk;
    }
    if (*sim_cmd) {
      Manifest manifest("simulate", args);
      sim::SimConfig config;
      if (!sim_config.empty()) {
        manifest.input("config", sim_config);
        config = sim::SimConfig::from_json(load_json(sim_config, "simulation config"));
      }
      if (sim_reps) config.replications = *sim_reps;
      if (sim_seed) config.seed = *sim_seed;
      config.check();
      if (sim_jobs == 0) throw ConfigError("--jobs must be at least 1");
      std::string experiment = sim_experiment;
      if (!sim_sweep.empty()) experiment = "sweep";
      if (experiment == "sweep" && sim_sweep.empty()) {
        throw ConfigError("the sweep experiment needs --sweep name:start:stop:step");
      }

      const fs::path dir = prepare_dir(sim_out);
      Json resolved{{"experiment", experiment}, {"simulation", config.to_json()}};
      if (experiment == "baseline" || experiment == "plugin") {
        const sim::ComparisonResult result = experiment == "baseline"
                                                 ? sim::run_comparison(config, sim_jobs)
                                                 : sim::run_plugin_comparison(config, sim_jobs);
        manifest.write_output(dir, "replications.csv", result.to_csv());
        manifest.write_output(dir, "summary.json", result.summary_json().dump(2) + "\n");
      } else if (experiment == "sweep") {
        sim::SweepParameter parameter{};
        const std::vector<double> grid = parse_grid(sim_sweep, parameter);
        resolved["sweep"] = {{"parameter", std::string(sim::to_string(parameter))},
                             {"grid", grid}};
        const sim::SweepResult result =
            sim::run_equalization_sweep(config, parameter, grid, sim_jobs);
        manifest.write_output(dir, "sweep.csv", result.to_csv());
        manifest.write_output(dir, "summary.json", result.to_json().dump(2) + "\n");
      } else {
        const sim::MistakesResult result = sim::run_mistakes(config, sim_jobs);
        manifest.write_output(dir, "mistakes.csv", result.to_csv());
        manifest.write_output(dir, "summary.json", result.to_json().dump(2) + "\n");
      }
      manifest.finish(dir, config.seed, resolved);
      return kOk;
    }
    if (*pre_cmd) {
      Manifest manifest("pretrial", args);
      pretrial::RosterSchema schema;
      if (!pre_schema.empty()) {
        manifest.input("schema", pre_schema);
        schema = pretrial::RosterSchema::from_json(load_json(pre_schema, "roster schema"));
      }
      pretrial::CostBenefitTables tables;
      if (!pre_loss.empty()) {
        manifest.input("loss", pre_loss);
        tables = pretrial::CostBenefitTables::from_json(load_json(pre_loss, "cost tables"));
      }
      pretrial::EmpiricalConfig config;
      if (!pre_config.empty()) {
        manifest.input("config", pre_config);
        config.train = TrainConfig::from_json(load_json(pre_config, "training config"));
      }
      config.families = split_list(pre_families);
      config.convexifier = parse_convexifier(pre_convexifier);
      config.seed = pre_seed;
      config.test_fraction = pre_test_fraction;
      config.train.check();

      manifest.input("data", pre_data);
      const pretrial::Roster roster = pretrial::ingest_roster(pre_data, schema);
      const pretrial::PretrialQuartet quartet(tables);
      validate(quartet, roster.data);
      const pretrial::EmpiricalTable table = pretrial::run_empirical(roster.data, quartet, config);

      const fs::path dir = prepare_dir(pre_out);
      manifest.write_output(dir, "comparison.csv", table.to_csv());
      manifest.write_output(dir, "cost_tables.json", tables.to_json().dump(2) + "\n");
      manifest.set("roster", {{"rows_read", roster.rows_read},
                              {"rows_filtered", roster.rows_filtered},
                              {"rows_used", roster.data.size()},
                              {"race_levels", roster.race_levels},
                              {"features", roster.data.feature_names}});
      manifest.finish(dir, pre_seed,
                      Json{{"schema", schema.to_json()},
                           {"loss", quartet.to_json()},
                           {"families", config.families},
                           {"convexifier", std::string(to_string(config.convexifier))},
                           {"test_fraction", config.test_fraction},
                           {"train", config.train.to_json()}});
      return kOk;
    }
    if (*self_cmd) return run_selfcheck(out, d);
  } catch (const AssumptionViolation& e) {
    err << e.what() << '\n';
    return kAssumption;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace asymdec::cli
