#include "asymdec/cli.hpp"
#include "asymdec/format.hpp"
#include "asymdec/rng.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

namespace fs = std::filesystem;
using asymdec::cli::run;
using Json = nlohmann::json;

namespace {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    const auto tag = asymdec::derive_seed(static_cast<std::uint64_t>(::getpid()), counter++);
    path_ = fs::temp_directory_path() / ("asymdec_cli_" + std::to_string(tag));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "asymdec");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string toy_csv(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::ostringstream csv;
  csv << "x1,x2,group,y\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double a = normal(gen), b = normal(gen);
    const int g = static_cast<int>(gen() % 2);
    csv << asymdec::format_double(a) << ',' << asymdec::format_double(b) << ',' << g << ','
        << (a - 0.5 * b + 0.5 * normal(gen) > 0 ? 1 : 0) << '\n';
  }
  return csv.str();
}

std::string roster_csv(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const char* races[] = {"African-American", "Caucasian"};
  const char* crimes[] = {"Fraud", "Robbery", "Larceny/Theft", "Murder"};
  std::ostringstream csv;
  csv << "is_recid,race,sex,priors_count,decile_score,c_charge_degree,crime,detention_days\n";
  for (std::size_t i = 0; i < n; ++i) {
    const int priors = static_cast<int>(gen() % 8), score = 1 + static_cast<int>(gen() % 10);
    csv << ((priors + score + static_cast<int>(gen() % 6)) > 9 ? 1 : 0) << ',' << races[gen() % 2]
        << ',' << (gen() % 3 ? "Male" : "Female") << ',' << priors << ',' << score << ','
        << (gen() % 2 ? "F" : "M") << ',' << crimes[gen() % 4] << ',' << gen() % 90 << '\n';
  }
  return csv.str();
}

std::size_t header_columns(const std::string& csv) {
  const std::string header = csv.substr(0, csv.find('\n'));
  return static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
}

}  // namespace

TEST_CASE("exit code mapping") {
  using asymdec::ErrorCategory;
  CHECK(asymdec::cli::exit_code_for(ErrorCategory::Config) == 2);
  CHECK(asymdec::cli::exit_code_for(ErrorCategory::Domain) == 2);
  CHECK(asymdec::cli::exit_code_for(ErrorCategory::Data) == 3);
  CHECK(asymdec::cli::exit_code_for(ErrorCategory::Assumption) == 4);
  CHECK(asymdec::cli::exit_code_for(ErrorCategory::Numeric) == 1);
}

TEST_CASE("argument errors exit 2 with usage text") {
  const auto none = invoke({});
  CHECK(none.code == 2);
  const auto missing = invoke({"fit", "--loss", "x.json"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("--data") != std::string::npos);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"simulate", "--experiment", "other"}).code == 2);
  const auto version = invoke({"--version"});
  CHECK(version.code == 0);
  CHECK(version.out == "1.0.0\n");
}

TEST_CASE("sha256 of a known file") {
  TempDir dir;
  CHECK(asymdec::cli::sha256_file(dir.file("abc.txt", "abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS(asymdec::cli::sha256_file(dir / "absent"), asymdec::ConfigError);
}

TEST_CASE("fit, predict and evaluate agree on the training data") {
  TempDir dir;
  const auto data = dir.file("toy.csv", toy_csv(120, 1));
  const auto loss = dir.file("group.json", R"({"type": "group", "fn_cost": [3, 1], "fp_cost": [1.7, 1]})");
  const auto fit = invoke({"fit", "--data", data, "--loss", loss, "--model", "logit", "--out", dir / "fit"});
  REQUIRE_MESSAGE(fit.code == 0, fit.err);
  for (const char* name : {"model.json", "metrics.json", "fit.json", "manifest.json"}) {
    CHECK(fs::exists(fs::path(dir / "fit") / name));
  }
  const Json manifest = Json::parse(slurp(dir / "fit/manifest.json"));
  CHECK(manifest.at("subcommand") == "fit");
  CHECK(manifest.at("inputs")[0].at("sha256") == asymdec::cli::sha256_file(data));
  CHECK(manifest.at("resolved_config").at("train").at("seed") == 0);

  const auto model = dir / "fit/model.json";
  const auto eval = invoke({"evaluate", "--data", data, "--loss", loss, "--model", model, "--out", dir / "eval"});
  REQUIRE_MESSAGE(eval.code == 0, eval.err);
  CHECK(slurp(dir / "eval/metrics.json") == slurp(dir / "fit/metrics.json"));

  const auto predict = invoke({"predict", "--data", data, "--loss", loss, "--model", model, "--out", dir / "pred"});
  REQUIRE_MESSAGE(predict.code == 0, predict.err);
  const std::string csv = slurp(dir / "pred/predictions.csv");
  CHECK(csv.rfind("row_id,soft_score,decision,threshold_c,weight_omega\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 121);

  const auto weights = invoke({"weights", "--data", data, "--loss", loss, "--out", dir / "w"});
  REQUIRE_MESSAGE(weights.code == 0, weights.err);
  CHECK(slurp(dir / "w/weights.csv").rfind("row_id,y,a,b,weight_omega,threshold_c\n", 0) == 0);

  // Refitting with the same flags reproduces the model file.
  REQUIRE(invoke({"fit", "--data", data, "--loss", loss, "--model", "logit", "--out", dir / "fit2"}).code == 0);
  CHECK(slurp(dir / "fit2/model.json") == slurp(dir / "fit/model.json"));
}

TEST_CASE("data and assumption failures map to their exit codes") {
  TempDir dir;
  const auto data = dir.file("toy.csv", toy_csv(40, 2));
  const auto symmetric = dir.file("sym.json", R"({"type": "symmetric"})");
  const auto inverted = dir.file("bad.json", R"({"type": "constant", "l_pp": 1, "l_np": 0, "l_pn": 1, "l_nn": 0})");
  const auto bad = invoke({"fit", "--data", data, "--loss", inverted, "--out", dir / "a"});
  CHECK(bad.code == 4);
  CHECK(bad.err.find("row") != std::string::npos);

  const auto empty = dir.file("empty.csv", "x1,x2,group,y\n");
  CHECK(invoke({"fit", "--data", empty, "--loss", symmetric, "--out", dir / "b"}).code == 3);

  REQUIRE(invoke({"fit", "--data", data, "--loss", symmetric, "--out", dir / "c"}).code == 0);
  const auto other = dir.file("other.csv", "z1,z2,y\n0.1,0.2,1\n0.3,0.1,0\n");
  CHECK(invoke({"evaluate", "--data", other, "--loss", symmetric, "--model", dir / "c/model.json", "--out",
                dir / "d"})
            .code == 3);

  const auto broken = dir.file("broken.json", "{not json");
  CHECK(invoke({"fit", "--data", data, "--loss", broken, "--out", dir / "e"}).code == 2);
  CHECK(invoke({"fit", "--data", data, "--loss", symmetric, "--model", "forest", "--out", dir / "f"}).code == 2);
  CHECK(invoke({"fit", "--data", dir / "absent.csv", "--loss", symmetric, "--out", dir / "g"}).code != 0);
}

TEST_CASE("simulate writes summaries and is reproducible across worker counts") {
  TempDir dir;
  const auto config = dir.file("sim.json", R"({"n": 150, "dim": 4})");
  const std::vector<std::string> base = {"simulate", "--config", config, "--reps", "5", "--seed", "3"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return invoke(args);
  };
  REQUIRE(with({"--jobs", "1", "--out", dir / "one"}).code == 0);
  REQUIRE(with({"--jobs", "3", "--out", dir / "three"}).code == 0);
  REQUIRE(with({"--jobs", "1", "--out", dir / "again"}).code == 0);
  for (const char* name : {"replications.csv", "summary.json"}) {
    const auto reference = slurp(dir / (std::string("one/") + name));
    CHECK(reference == slurp(dir / (std::string("three/") + name)));
    CHECK(reference == slurp(dir / (std::string("again/") + name)));
  }
  const Json summary = Json::parse(slurp(dir / "one/summary.json"));
  for (const char* key : {"p_ratio_gt_1", "mean", "min", "q1", "median", "q3", "max"}) {
    CHECK(summary.contains(key));
  }
  CHECK(summary.at("replications") == 5);

  REQUIRE(with({"--sweep", "phi0:1.0:1.2:0.1", "--out", dir / "sweep"}).code == 0);
  const auto sweep = slurp(dir / "sweep/sweep.csv");
  CHECK(sweep.rfind("fp_cost0,fp_rate_g0,fp_rate_g1,fn_rate_g0,fn_rate_g1,replications\n", 0) == 0);
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 4);

  CHECK(with({"--sweep", "rho:0:1:0.1", "--out", dir / "x"}).code == 2);
  CHECK(with({"--experiment", "sweep", "--out", dir / "y"}).code == 2);
  const auto bad = dir.file("bad.json", R"({"rho": 2})");
  CHECK(invoke({"simulate", "--config", bad, "--out", dir / "z"}).code == 2);
}

TEST_CASE("pretrial emits one column per family and weighting") {
  TempDir dir;
  const auto roster = dir.file("roster.csv", roster_csv(150, 4));
  const auto one = invoke({"pretrial", "--data", roster, "--families", "logit", "--out", dir / "a"});
  REQUIRE_MESSAGE(one.code == 0, one.err);
  const auto table = slurp(dir / "a/comparison.csv");
  CHECK(header_columns(table) == 3);
  CHECK(std::count(table.begin(), table.end(), '\n') == 14);
  CHECK(fs::exists(fs::path(dir / "a") / "cost_tables.json"));

  const auto config = dir.file("train.json", R"({"epochs": 10})");
  const auto two = invoke({"pretrial", "--data", roster, "--families", "logit,deep", "--config", config,
                           "--out", dir / "b"});
  REQUIRE_MESSAGE(two.code == 0, two.err);
  CHECK(header_columns(slurp(dir / "b/comparison.csv")) == 5);

  const auto schema = dir.file("schema.json", R"({"crime": "offence"})");
  CHECK(invoke({"pretrial", "--data", roster, "--schema", schema, "--out", dir / "c"}).code == 3);
}

TEST_CASE("selfcheck passes and reports defaults") {
  const auto result = invoke({"selfcheck"});
  CHECK(result.code == 0);
  const Json report = Json::parse(result.out);
  for (const auto& check : report.at("checks")) CHECK_MESSAGE(check.at("pass").get<bool>(), check.at("name"));
  CHECK(report.at("defaults").at("cli").at("seed") == 0);
}
