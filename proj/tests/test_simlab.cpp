#include "asymdec/errors.hpp"
#include "asymdec/rng.hpp"
#include "asymdec/simlab.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace asymdec;
using namespace asymdec::sim;

namespace {

SimConfig small_config() {
  SimConfig config;
  config.n = 200;
  config.dim = 5;
  config.replications = 6;
  config.seed = 11;
  return config;
}

}  // namespace

TEST_CASE("latent index and conditional probability examples") {
  SimConfig config;
  const std::vector<double> zero(config.dim, 0.0);
  CHECK(latent_index(config, 1, zero) == 2.0);
  CHECK(latent_index(config, 0, zero) == 0.0);
  CHECK(eta_oracle(config, 0, zero) == 0.5);

  const double eta = eta_oracle(config, 1, zero);
  CHECK(eta == doctest::Approx(static_cast<double>(oracle::normal_cdf(2.0L / 0.3L))).epsilon(1e-15));
  CHECK(1.0 - eta == doctest::Approx(1.3e-11).epsilon(0.05));

  config.sigma = 1.0;
  std::vector<double> z(config.dim, 0.0);
  z[0] = 1.0;
  CHECK(eta_oracle(config, 0, z) == doctest::Approx(0.841345).epsilon(1e-6));

  SimConfig curved;
  curved.dim = 3;
  curved.tau = 1.0;
  const double w[] = {1.0, 2.0, 3.0};
  // Linear part 1 + 1.8 + 2.4, squares 14 / 3, cross term 2 * 1 * (2 + 3).
  CHECK(latent_index(curved, 0, w) == doctest::Approx(5.2 + 14.0 / 3.0 + 10.0).epsilon(1e-15));
}

TEST_CASE("group thresholds and the Bayes rule") {
  SimConfig config;
  CHECK(config.threshold(0) == doctest::Approx(1.7 / 4.7).epsilon(1e-15));
  CHECK(config.threshold(0) == doctest::Approx(0.3617).epsilon(1e-4));
  CHECK(config.threshold(1) == 0.5);
  const std::vector<double> zero(config.dim, 0.0);
  // eta = 0.5 clears the group-0 threshold but ties the group-1 one.
  CHECK(bayes_rule(config, 0, zero) == 1);
  std::vector<double> z(config.dim, 0.0);
  z[0] = -0.05;
  CHECK(bayes_rule(config, 0, z) == 1);
  z[0] = -0.2;
  CHECK(bayes_rule(config, 0, z) == -1);
  CHECK(config.coefficients().size() == config.dim);
  CHECK(config.coefficients()[2] == 0.8);
  CHECK(config.coefficients()[3] == 0.0);
}

TEST_CASE("test split takes the ceiling of the fraction") {
  SimConfig config;
  CHECK(config.test_size() == 300);
  config.n = 1001;
  CHECK(config.test_size() == 301);
  config.n = 20;
  CHECK(config.test_size() == 6);
}

TEST_CASE("draws follow the documented stream order") {
  SimConfig config = small_config();
  const auto a = draw(config, 99);
  const auto b = draw(config, 99);
  CHECK(a.data.X == b.data.X);
  CHECK(a.data.y == b.data.y);
  CHECK(draw(config, 100).data.X != a.data.X);

  Rng rng(99);
  std::vector<double> z(config.dim);
  for (std::size_t i = 0; i < config.n; ++i) {
    const int g = rng.uniform() < config.rho ? 1 : 0;
    for (auto& v : z) v = rng.normal();
    const double e = rng.normal();
    const auto r = static_cast<Eigen::Index>(i);
    REQUIRE(a.data.group[i] == g);
    CHECK(a.data.X(r, 0) == g);
    for (std::size_t j = 0; j < config.dim; ++j) CHECK(a.data.X(r, static_cast<Eigen::Index>(j + 1)) == z[j]);
    CHECK(a.data.y[i] == (latent_index(config, g, z) >= config.sigma * e ? 1 : -1));
    const double expected = static_cast<double>(oracle::normal_cdf(latent_index(config, g, z) / config.sigma));
    CHECK(a.eta[i] == doctest::Approx(expected).epsilon(1e-14).scale(1.0));
    CHECK(a.threshold[i] == config.threshold(g));
  }
}

TEST_CASE("group share of a large draw matches rho") {
  SimConfig config;
  config.n = 100000;
  config.dim = 2;
  const auto d = draw(config, 3);
  double mean = 0.0;
  for (int g : d.data.group) mean += g;
  mean /= static_cast<double>(config.n);
  const double sd = std::sqrt(config.rho * (1 - config.rho) / static_cast<double>(config.n));
  CHECK(std::abs(mean - config.rho) <= 3 * sd);
}

TEST_CASE("normal sampler moments and inverse cdf accuracy") {
  Rng rng(8);
  const int n = 1000000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(sum_sq / n - mean * mean - 1.0) <= 0.01);

  for (double p = 1e-300; p < 0.5; p *= 3.7) {
    const double x = inverse_normal_cdf(p);
    const double back = static_cast<double>(oracle::normal_cdf(x));
    CHECK(std::abs(back - p) / p <= 1e-12);
  }
  for (double p = 1e-6; p < 0.5; p += 0.0137) {
    CHECK(inverse_normal_cdf(1.0 - p) == doctest::Approx(-inverse_normal_cdf(p)).epsilon(1e-9));
  }
  CHECK(inverse_normal_cdf(0.5) == 0.0);
  CHECK(std::isinf(inverse_normal_cdf(0.0)));
}

TEST_CASE("derived seeds are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(derive_seed(0, r));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(5, 7) == derive_seed(5, 7));
  CHECK(derive_seed(5, 7) != derive_seed(7, 5));
}

TEST_CASE("exhaustive Bayes search agrees with the threshold rule") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  for (int t = 0; t < 100; ++t) {
    std::vector<SupportPoint> support;
    std::vector<oracle::SupportPoint> mirror;
    for (int j = 0; j < 4; ++j) {
      const auto q = oracle::random_valid_quartet(gen);
      const double mass = 0.25, eta = unit(gen);
      support.push_back({mass, eta, Cells{q.pp, q.np, q.pn, q.nn},
                         static_cast<double>(oracle::threshold(q))});
      mirror.push_back({mass, eta, q});
    }
    const auto best = brute_force_bayes(support);
    for (std::size_t j = 0; j < 4; ++j) {
      const double c = static_cast<double>(oracle::threshold(mirror[j].cells));
      if (std::abs(mirror[j].eta - c) > 1e-9) CHECK(best.rule[j] == (mirror[j].eta >= c ? 1 : -1));
    }
    CHECK(best.risk == doctest::Approx(static_cast<double>(oracle::bayes_risk(mirror))).epsilon(1e-12).scale(1.0));
    CHECK(excess_risk(support, best.rule) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive Bayes search edge cases") {
  const std::vector<SupportPoint> single = {{1.0, 0.8, Cells{0, 1, 1, 0}, std::nullopt}};
  const auto one = brute_force_bayes(single);
  CHECK(one.rule == std::vector<int>{1});
  CHECK(one.risk == doctest::Approx(0.2));

  std::vector<SupportPoint> ties(3, {1.0 / 3, 0.5, Cells{0, 1, 1, 0}, 0.5});
  CHECK(brute_force_bayes(ties).rule == std::vector<int>{1, 1, 1});

  std::vector<SupportPoint> big(21, {1.0 / 21, 0.5, Cells{0, 1, 1, 0}, std::nullopt});
  CHECK_THROWS_AS(brute_force_bayes(big), SupportTooLarge);

  const std::vector<SupportPoint> wrong = {{1.0, 0.5, Cells{0, 1, 1, 0}, 0.4}};
  CHECK_THROWS_AS(brute_force_bayes(wrong), OracleMismatch);
}

TEST_CASE("type-7 quantiles and summaries") {
  const double sorted[] = {1, 2, 3, 4};
  CHECK(quantile(sorted, 0.0) == 1.0);
  CHECK(quantile(sorted, 0.25) == 1.75);
  CHECK(quantile(sorted, 0.5) == 2.5);
  CHECK(quantile(sorted, 1.0) == 4.0);
  const double ratios[] = {1.2, 0.8, 1.0, 1.5};
  const auto s = summarize(ratios, 2);
  CHECK(s.replications == 4);
  CHECK(s.failed == 2);
  CHECK(s.p_ratio_gt_1 == 0.5);
  CHECK(s.mean == doctest::Approx(1.125));
  CHECK(s.min == 0.8);
  CHECK(s.max == 1.5);
  CHECK(s.median == doctest::Approx(1.1));
  CHECK(std::isnan(summarize(std::span<const double>{}, 1).mean));
}

TEST_CASE("crossing search") {
  const double grid[] = {1, 2, 3};
  const double a[] = {0, 1, 2};
  const double b[] = {1, 1.5, 1};
  CHECK(*find_crossing(grid, a, b) == doctest::Approx(2.0 + 0.5 / 1.5));
  const double touch[] = {1, 1, 0};
  CHECK(*find_crossing(grid, a, touch) == 2.0);
  const double above[] = {3, 3, 3};
  CHECK_FALSE(find_crossing(grid, a, above).has_value());
  const double short_series[] = {1, 2};
  CHECK_THROWS_AS(find_crossing(grid, a, short_series), DimensionMismatch);
}

TEST_CASE("symmetric costs make the weighted and symmetric fits coincide") {
  SimConfig config = small_config();
  config.fn_cost0 = config.fp_cost0 = 1.0;
  const auto logit = run_comparison(config);
  const auto plugin = run_plugin_comparison(config);
  for (const auto* result : {&logit, &plugin}) {
    CHECK(result->summary.failed == 0);
    CHECK(std::abs(result->summary.mean - 1.0) <= 1e-10);
    CHECK(result->summary.p_ratio_gt_1 == 0.0);
  }
}

TEST_CASE("comparison results do not depend on the worker count") {
  SimConfig config = small_config();
  const auto serial = run_comparison(config, 1);
  const auto threaded = run_comparison(config, 3);
  CHECK(serial.to_csv() == threaded.to_csv());
  CHECK(serial.summary_json() == threaded.summary_json());
  REQUIRE(serial.rows.size() == config.replications);
  for (std::size_t r = 0; r < serial.rows.size(); ++r) {
    CHECK(serial.rows[r].seed == derive_seed(config.seed, r));
  }
  const auto csv = serial.to_csv();
  CHECK(csv.rfind("replication,seed,logit_cost,weighted_cost,ratio,status\n", 0) == 0);
}

TEST_CASE("sweep at unit costs matches the symmetric logit mistakes") {
  SimConfig config = small_config();
  config.fn_cost0 = config.fp_cost0 = 1.0;
  config.families = {};
  const double grid[] = {1.0};
  const auto sweep = run_equalization_sweep(config, SweepParameter::FpCost0, grid);
  const auto mistakes = run_mistakes(config);
  REQUIRE(mistakes.rows.size() == 1);
  const auto& row = mistakes.rows[0];
  const auto& p = sweep.points[0];
  CHECK(p.replications == row.replications);
  CHECK(p.fp0 == doctest::Approx(row.fp0).epsilon(1e-14));
  CHECK(p.fp1 == doctest::Approx(row.fp1).epsilon(1e-14));
  CHECK(p.fn0 == doctest::Approx(row.fn0).epsilon(1e-14));
  CHECK(p.fn1 == doctest::Approx(row.fn1).epsilon(1e-14));
  CHECK(parse_sweep_parameter("phi0") == SweepParameter::FpCost0);
  CHECK(parse_sweep_parameter("fn_cost0") == SweepParameter::FnCost0);
  CHECK_THROWS_AS(parse_sweep_parameter("rho"), ConfigError);
}

TEST_CASE("simulation config round-trips and rejects bad input") {
  SimConfig config = small_config();
  config.tau = 0.5;
  config.families = {"deep", "boosting"};
  const Json doc = config.to_json();
  const auto back = SimConfig::from_json(Json::parse(doc.dump()));
  CHECK(back.to_json() == doc);

  CHECK(SimConfig::from_json(Json::object()).to_json() == SimConfig().to_json());
  CHECK_THROWS_AS(SimConfig::from_json(Json{{"colour", 1}}), ConfigError);
  CHECK_THROWS_AS(SimConfig::from_json(Json{{"n", "many"}}), ConfigError);
  CHECK_THROWS_AS(SimConfig::from_json(Json{{"rho", 1.0}}), ConfigError);
  CHECK_THROWS_AS(SimConfig::from_json(Json{{"dim", 3}, {"gamma", {1.0, 2.0}}}), ConfigError);
  CHECK_THROWS_AS(SimConfig::from_json(Json{{"fp_cost1", 0.0}}), ConfigError);
  CHECK_THROWS_AS(SimConfig::from_json(Json{{"families", {"forest"}}}), ConfigError);
  CHECK_THROWS_AS(SimConfig::from_json(Json::array()), ConfigError);
}
