#include "asymdec/simlab.hpp"

#include "asymdec/errors.hpp"
#include "asymdec/format.hpp"
#include "asymdec/parallel.hpp"
#include "asymdec/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace asymdec::sim {

std::vector<double> SimConfig::coefficients() const {
  if (!gamma.empty()) return gamma;
  std::vector<double> out(dim, 0.0);
  const double head[] = {1.0, 0.9, 0.8};
  for (std::size_t j = 0; j < std::min<std::size_t>(dim, 3); ++j) out[j] = head[j];
  return out;
}

std::size_t SimConfig::test_size() const {
  return static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
}

GroupQuartet SimConfig::quartet() const {
  return GroupQuartet({fn_cost0, fn_cost1}, {fp_cost0, fp_cost1});
}

double SimConfig::threshold(int group) const {
  return group == 0 ? fp_cost0 / (fp_cost0 + fn_cost0) : fp_cost1 / (fp_cost1 + fn_cost1);
}

void SimConfig::check() const {
  if (n < 20) throw ConfigError("n must be at least 20");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (test_size() >= n) throw ConfigError("test split leaves no training rows");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!gamma.empty() && gamma.size() != dim) throw ConfigError("gamma length must equal dim");
  for (double v : {fn_cost0, fn_cost1, fp_cost0, fp_cost1}) {
    if (!(v > 0.0)) throw ConfigError("group costs must be positive");
  }
  if (replications < 1) throw ConfigError("replications must be >= 1");
  for (const auto& f : families) parse_family(f);
  train.check();
}

Json SimConfig::to_json() const {
  return Json{{"n", n},
              {"test_fraction", test_fraction},
              {"dim", dim},
              {"rho", rho},
              {"sigma", sigma},
              {"tau", tau},
              {"gamma", coefficients()},
              {"fn_cost0", fn_cost0},
              {"fn_cost1", fn_cost1},
              {"fp_cost0", fp_cost0},
              {"fp_cost1", fp_cost1},
              {"replications", replications},
              {"seed", seed},
              {"families", families},
              {"train", train.to_json()},
              {"network_convexifier", std::string(asymdec::to_string(network_convexifier))}};
}

SimConfig SimConfig::from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("simulation config must be a JSON object");
  SimConfig config;
  const Json known = config.to_json();
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError("unknown simulation config key '" + key + "'");
  }
  try {
    auto read = [&](const char* key, auto& out) {
      if (doc.contains(key)) out = doc.at(key).get<std::decay_t<decltype(out)>>();
    };
    read("n", config.n);
    read("test_fraction", config.test_fraction);
    read("dim", config.dim);
    read("rho", config.rho);
    read("sigma", config.sigma);
    read("tau", config.tau);
    read("gamma", config.gamma);
    read("fn_cost0", config.fn_cost0);
    read("fn_cost1", config.fn_cost1);
    read("fp_cost0", config.fp_cost0);
    read("fp_cost1", config.fp_cost1);
    read("replications", config.replications);
    read("seed", config.seed);
    read("families", config.families);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("simulation config has a value of the wrong type: ") + e.what());
  }
  if (doc.contains("train")) config.train = TrainConfig::from_json(doc.at("train"));
  if (doc.contains("network_convexifier")) {
    config.network_convexifier = parse_convexifier(doc.at("network_convexifier").get<std::string>());
  }
  config.check();
  return config;
}

double latent_index(const SimConfig& config, int group, std::span<const double> z) {
  const auto gamma = config.coefficients();
  double index = 2.0 * group;
  for (std::size_t j = 0; j < z.size(); ++j) index += gamma[j] * z[j];
  if (config.tau != 0.0) {
    double squares = 0.0;
    double rest = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      squares += z[j] * z[j];
      if (j > 0) rest += z[j];
    }
    index += config.tau * (squares / static_cast<double>(z.size()) + 2.0 * z[0] * rest);
  }
  return index;
}

double eta_oracle(const SimConfig& config, int group, std::span<const double> z) {
  return normal_cdf(latent_index(config, group, z) / config.sigma);
}

int bayes_rule(const SimConfig& config, int group, std::span<const double> z) {
  return sign_of(eta_oracle(config, group, z) - config.threshold(group));
}

SimDraw draw(const SimConfig& config, std::uint64_t seed) {
  const std::size_t n = config.n;
  const std::size_t d = config.dim;
  SimDraw out;
  auto& data = out.data;
  data.feature_names.push_back("g");
  for (std::size_t j = 1; j <= d; ++j) data.feature_names.push_back("z" + std::to_string(j));
  data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d + 1));
  data.y.resize(n);
  data.group.resize(n);
  out.eta.resize(n);
  out.threshold.resize(n);

  Rng rng(seed);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    const int g = rng.bernoulli(config.rho) ? 1 : 0;
    for (auto& v : z) v = rng.normal();
    const double noise = rng.normal();
    const double index = latent_index(config, g, z);
    const auto r = static_cast<Eigen::Index>(i);
    data.X(r, 0) = g;
    for (std::size_t j = 0; j < d; ++j) data.X(r, static_cast<Eigen::Index>(j + 1)) = z[j];
    data.y[i] = index >= config.sigma * noise ? 1 : -1;
    data.group[i] = g;
    out.eta[i] = normal_cdf(index / config.sigma);
    out.threshold[i] = config.threshold(g);
  }
  return out;
}

BayesOracle brute_force_bayes(std::span<const SupportPoint> support) {
  const std::size_t k = support.size();
  if (k > 20) {
    throw SupportTooLarge("exhaustive search supports at most 20 points, got " + std::to_string(k));
  }
  for (std::size_t j = 0; j < k; ++j) {
    const auto& p = support[j];
    if (p.stated_threshold) {
      const double c = threshold(p.cells);
      if (std::abs(c - *p.stated_threshold) > 1e-12) {
        throw OracleMismatch("point " + std::to_string(j) + " states threshold " +
                             std::to_string(*p.stated_threshold) + " but its losses imply " +
                             std::to_string(c));
      }
    }
  }
  BayesOracle best;
  std::vector<int> rule(k);
  int best_positives = -1;
  const std::uint64_t rules = std::uint64_t{1} << k;
  for (std::uint64_t mask = 0; mask < rules; ++mask) {
    for (std::size_t j = 0; j < k; ++j) rule[j] = (mask >> j) & 1U ? 1 : -1;
    const double risk = support_risk(support, rule);
    const int positives = std::popcount(mask);
    const double tol = 1e-12 * std::max(1.0, std::abs(best.risk));
    const bool better = best_positives < 0 || risk < best.risk - tol ||
                        (risk <= best.risk + tol && positives > best_positives);
    if (better) {
      best.risk = risk;
      best.rule = rule;
      best_positives = positives;
    }
  }
  return best;
}

Json Summary::to_json() const {
  return Json{{"replications", replications}, {"failed", failed}, {"p_ratio_gt_1", p_ratio_gt_1},
              {"mean", mean},                 {"min", min},       {"q1", q1},
              {"median", median},             {"q3", q3},         {"max", max}};
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> ratios, std::size_t failed) {
  Summary s;
  s.replications = ratios.size();
  s.failed = failed;
  if (ratios.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.p_ratio_gt_1 = s.mean = s.min = s.q1 = s.median = s.q3 = s.max = nan;
    return s;
  }
  std::vector<double> sorted(ratios.begin(), ratios.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  std::size_t above = 0;
  for (double r : ratios) {
    sum += r;
    if (r > 1.0) ++above;
  }
  s.p_ratio_gt_1 = static_cast<double>(above) / static_cast<double>(ratios.size());
  s.mean = sum / static_cast<double>(ratios.size());
  s.min = sorted.front();
  s.q1 = quantile(sorted, 0.25);
  s.median = quantile(sorted, 0.5);
  s.q3 = quantile(sorted, 0.75);
  s.max = sorted.back();
  return s;
}

std::string ComparisonResult::to_csv() const {
  std::ostringstream out;
  out << "replication,seed," << baseline << "_cost,weighted_cost,ratio,status\n";
  for (const auto& r : rows) {
    out << r.index << ',' << r.seed << ',' << format_double(r.baseline_cost) << ','
        << format_double(r.weighted_cost) << ',' << format_double(r.ratio) << ','
        << (r.error.empty() ? "ok" : "failed") << '\n';
  }
  return out.str();
}

Json ComparisonResult::summary_json() const {
  Json doc = summary.to_json();
  doc["baseline"] = baseline;
  Json errors = Json::array();
  for (const auto& r : rows) {
    if (!r.error.empty()) errors.push_back({{"replication", r.index}, {"error", r.error}});
  }
  doc["errors"] = std::move(errors);
  return doc;
}

namespace {

struct Split {
  Dataset train;
  Dataset test;
};

Split split_draw(const SimConfig& config, const Dataset& data) {
  const std::size_t test = config.test_size();
  return Split{data.slice(0, data.size() - test), data.slice(data.size() - test, data.size())};
}

SoftDecisionModel fit_logit(const Dataset& train, const LossQuartet& quartet,
                            const SimConfig& config) {
  TrainConfig tc = config.train;
  return fit_linear(weigh_dataset(quartet, train), tc).model;
}

double test_cost(const SoftDecisionModel& model, const Dataset& test, const LossQuartet& quartet) {
  return evaluate(model, test, quartet).overall_cost;
}

double cost_ratio(double baseline, double weighted) {
  if (weighted == 0.0) return baseline == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return baseline / weighted;
}

template <typename Body>
ComparisonResult compare(const SimConfig& config, std::size_t jobs, std::string baseline,
                         Body body) {
  config.check();
  ComparisonResult result;
  result.baseline = std::move(baseline);
  result.rows.resize(config.replications);
  parallel_for(config.replications, jobs, [&](std::size_t r) {
    auto& row = result.rows[r];
    row.index = r;
    row.seed = derive_seed(config.seed, r);
    try {
      const SimDraw d = draw(config, row.seed);
      const Split split = split_draw(config, d.data);
      body(split, row);
      row.ratio = cost_ratio(row.baseline_cost, row.weighted_cost);
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  std::vector<double> ratios;
  std::size_t failed = 0;
  for (const auto& row : result.rows) {
    if (row.error.empty()) {
      ratios.push_back(row.ratio);
    } else {
      ++failed;
    }
  }
  result.summary = summarize(ratios, failed);
  return result;
}

}  // namespace

ComparisonResult run_comparison(const SimConfig& config, std::size_t jobs) {
  const GroupQuartet quartet = config.quartet();
  const QuartetPtr symmetric = symmetric_quartet();
  return compare(config, jobs, "logit", [&](const Split& split, Replication& row) {
    const auto plain = fit_logit(split.train, *symmetric, config);
    const auto weighted = fit_logit(split.train, quartet, config);
    row.baseline_cost = test_cost(plain, split.test, quartet);
    row.weighted_cost = test_cost(weighted, split.test, quartet);
  });
}

ComparisonResult run_plugin_comparison(const SimConfig& config, std::size_t jobs) {
  const GroupQuartet quartet = config.quartet();
  const QuartetPtr symmetric = symmetric_quartet();
  return compare(config, jobs, "plugin", [&](const Split& split, Replication& row) {
    const auto plain = fit_logit(split.train, *symmetric, config);
    const auto weighted = fit_logit(split.train, quartet, config);
    const Eigen::VectorXd half = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(split.test.size()), 0.5);
    const Eigen::VectorXd scores = plain.predict_soft(split.test.X, half);
    // The symmetric logistic fit estimates log-odds; compare the implied
    // probability with each row's threshold.
    std::vector<double> plugin(split.test.size());
    for (std::size_t i = 0; i < plugin.size(); ++i) {
      const double eta_hat = 1.0 / (1.0 + std::exp(-scores[static_cast<Eigen::Index>(i)]));
      plugin[i] = eta_hat - config.threshold(split.test.group[i]);
    }
    row.baseline_cost = evaluate_scores(plugin, split.test, quartet).overall_cost;
    row.weighted_cost = test_cost(weighted, split.test, quartet);
  });
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "phi0" || name == "fp_cost0") return SweepParameter::FpCost0;
  if (name == "psi0" || name == "fn_cost0") return SweepParameter::FnCost0;
  throw ConfigError("sweep parameter must be phi0 (fp_cost0) or psi0 (fn_cost0), got '" +
                    std::string(name) + "'");
}

std::string_view to_string(SweepParameter p) noexcept {
  return p == SweepParameter::FpCost0 ? "fp_cost0" : "fn_cost0";
}

std::string SweepResult::to_csv() const {
  std::ostringstream out;
  out << to_string(parameter) << ",fp_rate_g0,fp_rate_g1,fn_rate_g0,fn_rate_g1,replications\n";
  for (const auto& p : points) {
    out << format_double(p.value) << ',' << format_double(p.fp0) << ',' << format_double(p.fp1)
        << ',' << format_double(p.fn0) << ',' << format_double(p.fn1) << ',' << p.replications
        << '\n';
  }
  return out.str();
}

Json SweepResult::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"parameter", std::string(to_string(parameter))},
              {"fp_crossing", opt(fp_crossing)},
              {"fn_crossing", opt(fn_crossing)},
              {"points", points.size()}};
}

std::optional<double> find_crossing(std::span<const double> grid, std::span<const double> a,
                                    std::span<const double> b) {
  if (grid.size() != a.size() || grid.size() != b.size()) {
    throw DimensionMismatch("crossing search needs equally long series");
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double gap = a[k] - b[k];
    if (gap == 0.0) return grid[k];
    if (k + 1 < grid.size()) {
      const double next = a[k + 1] - b[k + 1];
      if ((gap < 0.0) != (next < 0.0) && next != 0.0) {
        return grid[k] + (grid[k + 1] - grid[k]) * gap / (gap - next);
      }
    }
  }
  return std::nullopt;
}

SweepResult run_equalization_sweep(const SimConfig& config, SweepParameter parameter,
                                   std::span<const double> grid, std::size_t jobs) {
  config.check();
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  const std::size_t reps = config.replications;
  const std::size_t points = grid.size();
  struct Cell {
    double fp0 = 0, fp1 = 0, fn0 = 0, fn1 = 0;
    bool ok = false;
  };
  std::vector<Cell> cells(points * reps);

  parallel_for(reps, jobs, [&](std::size_t r) {
    const SimDraw d = draw(config, derive_seed(config.seed, r));
    const Split split = split_draw(config, d.data);
    for (std::size_t k = 0; k < points; ++k) {
      SimConfig local = config;
      (parameter == SweepParameter::FpCost0 ? local.fp_cost0 : local.fn_cost0) = grid[k];
      auto& cell = cells[k * reps + r];
      try {
        const auto model = fit_logit(split.train, local.quartet(), local);
        const Eigen::VectorXd half =
            Eigen::VectorXd::Constant(static_cast<Eigen::Index>(split.test.size()), 0.5);
        const Eigen::VectorXd scores = model.predict_soft(split.test.X, half);
        std::vector<int> decisions(split.test.size());
        for (std::size_t i = 0; i < decisions.size(); ++i) {
          decisions[i] = sign_of(scores[static_cast<Eigen::Index>(i)]);
        }
        const auto rates =
            group_rates(decisions, split.test.y, split.test.group, std::vector<int>{0, 1});
        if (!rates[0].false_positive || !rates[1].false_positive) continue;
        cell.fp0 = *rates[0].false_positive;
        cell.fn0 = *rates[0].false_negative;
        cell.fp1 = *rates[1].false_positive;
        cell.fn1 = *rates[1].false_negative;
        cell.ok = true;
      } catch (const Error&) {
        cell.ok = false;
      }
    }
  });

  SweepResult result;
  result.parameter = parameter;
  std::vector<double> fp0, fp1, fn0, fn1;
  for (std::size_t k = 0; k < points; ++k) {
    SweepPoint p;
    p.value = grid[k];
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& cell = cells[k * reps + r];
      if (!cell.ok) continue;
      p.fp0 += cell.fp0;
      p.fp1 += cell.fp1;
      p.fn0 += cell.fn0;
      p.fn1 += cell.fn1;
      ++p.replications;
    }
    if (p.replications > 0) {
      const double m = static_cast<double>(p.replications);
      p.fp0 /= m;
      p.fp1 /= m;
      p.fn0 /= m;
      p.fn1 /= m;
    }
    fp0.push_back(p.fp0);
    fp1.push_back(p.fp1);
    fn0.push_back(p.fn0);
    fn1.push_back(p.fn1);
    result.points.push_back(p);
  }
  result.fp_crossing = find_crossing(grid, fp0, fp1);
  result.fn_crossing = find_crossing(grid, fn0, fn1);
  return result;
}

std::string MistakesResult::to_csv() const {
  std::ostringstream out;
  out << "family,fp_rate_g0,fn_rate_g0,fp_rate_g1,fn_rate_g1,error,replications\n";
  for (const auto& r : rows) {
    out << r.family << ',' << format_double(r.fp0) << ',' << format_double(r.fn0) << ','
        << format_double(r.fp1) << ',' << format_double(r.fn1) << ',' << format_double(r.error)
        << ',' << r.replications << '\n';
  }
  return out.str();
}

Json MistakesResult::to_json() const {
  Json doc = Json::array();
  for (const auto& r : rows) {
    doc.push_back({{"family", r.family},
                   {"fp_rate_g0", r.fp0},
                   {"fn_rate_g0", r.fn0},
                   {"fp_rate_g1", r.fp1},
                   {"fn_rate_g1", r.fn1},
                   {"error", r.error},
                   {"replications", r.replications}});
  }
  return doc;
}

MistakesResult run_mistakes(const SimConfig& config, std::size_t jobs) {
  config.check();
  std::vector<std::string> families = {"logit"};
  for (const auto& f : config.families) {
    if (parse_family(f) != ModelFamily::Linear) families.push_back(f);
  }
  const std::size_t reps = config.replications;
  struct Cell {
    double fp0 = 0, fn0 = 0, fp1 = 0, fn1 = 0, error = 0;
    bool ok = false;
  };
  std::vector<Cell> cells(families.size() * reps);
  const QuartetPtr symmetric = symmetric_quartet();

  parallel_for(reps, jobs, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(config.seed, r);
    const SimDraw d = draw(config, seed);
    const Split split = split_draw(config, d.data);
    const WeightedData train = weigh_dataset(*symmetric, split.train);
    for (std::size_t f = 0; f < families.size(); ++f) {
      auto& cell = cells[f * reps + r];
      try {
        const ModelFamily family = parse_family(families[f]);
        TrainConfig tc = config.train;
        tc.seed = derive_seed(seed, f + 1);
        if (is_network(family)) tc.convexifier = config.network_convexifier;
        FitResult fitted = fit(train, family, tc);
        fitted.model.fixed_threshold = 0.5;
        const auto report = evaluate(fitted.model, split.test, *symmetric);
        const auto rates = report.groups;
        cell.error = report.error_rate;
        for (const auto& g : rates) {
          if (g.group == 0 && g.false_positive) {
            cell.fp0 = *g.false_positive;
            cell.fn0 = *g.false_negative;
          } else if (g.group == 1 && g.false_positive) {
            cell.fp1 = *g.false_positive;
            cell.fn1 = *g.false_negative;
          }
        }
        cell.ok = true;
      } catch (const Error&) {
        cell.ok = false;
      }
    }
  });

  MistakesResult result;
  for (std::size_t f = 0; f < families.size(); ++f) {
    MistakeRow row;
    row.family = families[f];
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& cell = cells[f * reps + r];
      if (!cell.ok) continue;
      row.fp0 += cell.fp0;
      row.fn0 += cell.fn0;
      row.fp1 += cell.fp1;
      row.fn1 += cell.fn1;
      row.error += cell.error;
      ++row.replications;
    }
    if (row.replications > 0) {
      const double m = static_cast<double>(row.replications);
      row.fp0 /= m;
      row.fn0 /= m;
      row.fp1 /= m;
      row.fn1 /= m;
      row.error /= m;
    }
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace asymdec::sim
