#include "asymdec/errors.hpp"
#include "asymdec/loss.hpp"
#include "asymdec/pretrial.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace asymdec;

namespace {

Cells to_cells(const oracle::Quartet& q) { return Cells{q.pp, q.np, q.pn, q.nn}; }

}  // namespace

TEST_CASE("net losses of the symmetric and group quartets") {
  const auto symmetric = compute_net_losses(Cells{0, 1, 1, 0});
  CHECK(symmetric.a == 0.0);
  CHECK(symmetric.b == 2.0);
  CHECK(weight(symmetric, 1) == 2.0);
  CHECK(weight(symmetric, -1) == 2.0);

  const GroupQuartet group({3.0, 1.0}, {1.7, 1.0});
  const auto g0 = compute_net_losses(group.cells_for_group(0));
  CHECK(g0.a == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(g0.b == doctest::Approx(4.7).epsilon(1e-15));
  CHECK(weight(g0, 1) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(weight(g0, -1) == doctest::Approx(3.4).epsilon(1e-15));
  CHECK(threshold(group.cells_for_group(0)) == doctest::Approx(1.7 / 4.7).epsilon(1e-15));
  CHECK(threshold(group.cells_for_group(1)) == 0.5);
  CHECK(threshold(Cells{0, 1, 1, 0}) == 0.5);
}

TEST_CASE("shift invariance and scale covariance of the derived quantities") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 200; ++t) {
    const auto q = oracle::random_valid_quartet(gen);
    const Cells base = to_cells(q);
    const double k = std::uniform_real_distribution<double>(-5, 5)(gen);
    const Cells shifted{base.pp + k, base.np + k, base.pn + k, base.nn + k};
    const auto a = compute_net_losses(base);
    const auto b = compute_net_losses(shifted);
    CHECK(b.a == doctest::Approx(a.a).epsilon(1e-12));
    CHECK(b.b == doctest::Approx(a.b).epsilon(1e-12));
    CHECK(threshold(shifted) == doctest::Approx(threshold(base)).epsilon(1e-12));

    const double s = std::uniform_real_distribution<double>(0.1, 10)(gen);
    const Cells scaled{s * base.pp, s * base.np, s * base.pn, s * base.nn};
    CHECK(weight(compute_net_losses(scaled), 1) ==
          doctest::Approx(s * weight(a, 1)).epsilon(1e-12));
    CHECK(threshold(scaled) == doctest::Approx(threshold(base)).epsilon(1e-12));

    // c is the share of the negative-outcome weight.
    const double w_pos = weight(a, 1), w_neg = weight(a, -1);
    CHECK(threshold(base) == doctest::Approx(w_neg / (w_pos + w_neg)).epsilon(1e-14));
    CHECK(static_cast<double>(oracle::threshold(q)) ==
          doctest::Approx(threshold(base)).epsilon(1e-14));
  }
}

TEST_CASE("residual term of the symmetric loss vanishes") {
  CHECK(residual_term(Cells{0, 1, 1, 0}, 1) == 0.0);
  CHECK(residual_term(Cells{0, 1, 1, 0}, -1) == 0.0);
}

TEST_CASE("risk decomposition holds row by row for random quartets") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 500; ++t) {
    const auto q = oracle::random_valid_quartet(gen);
    const Cells cells = to_cells(q);
    for (int y : {-1, 1}) {
      for (int f : {-1, 1}) {
        const double direct = cells.at(f, y);
        const double mistake = (-y * f >= 0) ? 1.0 : 0.0;
        const double rebuilt =
            0.5 * weight(compute_net_losses(cells), y) * mistake + residual_term(cells, y);
        CHECK(rebuilt == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
        CHECK(residual_term(cells, y) ==
              doctest::Approx(static_cast<double>(oracle::residual(q, y))).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("degenerate thresholds are rejected") {
  CHECK_THROWS_AS(threshold(Cells{1, 1, 1, 1}), DegenerateLoss);
  CHECK_THROWS_AS(threshold(Cells{2, 1, 0, 0}), DegenerateLoss);
}

TEST_CASE("validation reports margins and lists offending rows") {
  const Dataset data = testing::random_dataset(6, 2, 1);
  const auto report = validate(*symmetric_quartet(), data);
  CHECK(report.rows == 6);
  CHECK(report.min_positive_net_loss == 1.0);
  CHECK(report.min_negative_net_loss == 1.0);

  const ConstantQuartet bad(Cells{2, 1, 1, 0});
  try {
    validate(bad, data);
    FAIL("expected AssumptionViolation");
  } catch (const AssumptionViolation& e) {
    CHECK(e.rows().size() == 6);
    CHECK(e.category() == ErrorCategory::Assumption);
  }

  ConstantQuartet huge(Cells{0, 1e13, 1, 0});
  CHECK_THROWS_AS(validate(huge, data), AssumptionViolation);
  huge.bound = 1e14;
  CHECK_NOTHROW(validate(huge, data));
}

TEST_CASE("weighing a dataset attaches weight and threshold in row order") {
  Dataset data = testing::random_dataset(3, 1, 2);
  const WeightedData sym = weigh_dataset(*symmetric_quartet(), data);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(sym.omega[static_cast<Eigen::Index>(i)] == 2.0);
    CHECK(sym.c[static_cast<Eigen::Index>(i)] == 0.5);
  }

  data.group = {0, 1, 0};
  data.y = {1, -1, -1};
  const GroupQuartet group({3.0, 1.0}, {1.7, 1.0});
  const WeightedData w = weigh_dataset(group, data);
  CHECK(w.omega[0] == doctest::Approx(6.0));
  CHECK(w.omega[1] == doctest::Approx(2.0));
  CHECK(w.omega[2] == doctest::Approx(3.4));
  CHECK(w.c[0] == doctest::Approx(0.3617021276595745));
  CHECK(w.c[1] == 0.5);

  const Dataset empty = data.slice(0, 0);
  CHECK(weigh_dataset(group, empty).empty());
}

TEST_CASE("tabular quartets read per-row columns") {
  Dataset data = testing::random_dataset(2, 1, 3);
  data.numeric_columns["l_pp"] = {-5, 0};
  data.numeric_columns["l_np"] = {1, 2};
  data.numeric_columns["l_pn"] = {23, 1};
  data.numeric_columns["l_nn"] = {0, 0};
  const TabularQuartet q;
  CHECK(q.cells(data.row(0)).pp == -5);
  CHECK(q.cells(data.row(0)).pn == 23);
  CHECK(threshold(q, data.row(1)) == doctest::Approx(1.0 / 3.0));
  data.numeric_columns.erase("l_nn");
  CHECK_THROWS_AS(q.cells(data.row(0)), SchemaError);
}

TEST_CASE("loss specifications parse and round-trip") {
  const auto sym = quartet_from_json(Json{{"type", "symmetric"}});
  CHECK(sym->cells(testing::random_dataset(1, 1, 0).row(0)).np == 1.0);

  const auto group = quartet_from_json(
      Json{{"type", "group"}, {"fn_cost", {3.0, 1.0}}, {"fp_cost", {1.7, 1.0}}, {"bound", 50.0}});
  CHECK(group->bound == 50.0);
  const auto again = quartet_from_json(group->to_json());
  CHECK(again->to_json() == group->to_json());

  const auto constant = quartet_from_json(
      Json{{"type", "constant"}, {"l_pp", 0}, {"l_np", 2}, {"l_pn", 1}, {"l_nn", 0}});
  CHECK(threshold(dynamic_cast<const ConstantQuartet&>(*constant).values()) ==
        doctest::Approx(1.0 / 3.0));

  const auto pre = quartet_from_json(Json{{"type", "pretrial"}});
  CHECK(dynamic_cast<const pretrial::PretrialQuartet*>(pre.get()) != nullptr);

  CHECK_THROWS_AS(quartet_from_json(Json{{"type", "mystery"}}), ConfigError);
  CHECK_THROWS_AS(quartet_from_json(Json{{"type", "constant"}, {"l_pp", 0}}), ConfigError);
  CHECK_THROWS_AS(quartet_from_json(Json{{"type", "symmetric"}, {"min_net_loss", -1}}),
                  ConfigError);
  CHECK_THROWS_AS(quartet_from_json(Json::array()), ConfigError);
}
