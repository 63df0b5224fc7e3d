#pragma once

// Test-side reference computations. Each one is written from the defining
// formula with no calls into the library under test, so agreement between
// the two is evidence rather than tautology.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Real = long double;

// The four cells, decision sign first then outcome sign.
struct Quartet {
  double pp, np, pn, nn;
  double at(int f, int y) const { return f > 0 ? (y > 0 ? pp : pn) : (y > 0 ? np : nn); }
};

inline Real net_a(const Quartet& q) { return Real(q.np) - q.pp - (Real(q.pn) - q.nn); }
inline Real net_b(const Quartet& q) { return Real(q.np) - q.pp + (Real(q.pn) - q.nn); }
inline Real omega(const Quartet& q, int y) { return y * net_a(q) + net_b(q); }
inline Real threshold(const Quartet& q) { return (Real(q.pn) - q.nn) / net_b(q); }

// d(y) from the risk representation, written out cell by cell.
inline Real residual(const Quartet& q, int y) {
  return 0.25L * (Real(q.pp) + q.np) * (1 + y) + 0.25L * (Real(q.pn) + q.nn) * (1 - y) -
         0.25L * omega(q, y);
}

enum class Surrogate { Logistic, Exponential, Hinge };

inline Real surrogate(Surrogate s, Real z) {
  switch (s) {
    case Surrogate::Logistic:
      return (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) / std::log(2.0L);
    case Surrogate::Exponential:
      return std::exp(z);
    case Surrogate::Hinge:
      return std::max<Real>(0, 1 + z);
  }
  return 0;
}

inline Real q_value(Surrogate s, Real x, Real c, Real y) {
  return x * (1 - c) * surrogate(s, -y) + (1 - x) * c * surrogate(s, y);
}

// Minimum of Q_c(x, .) over [-40, 40]: a coarse scan, then golden-section
// refinement around the best scan point. Hinge is piecewise linear with
// kinks at +-1, so its candidates are checked directly as well.
inline Real numeric_inf_q(Surrogate s, Real x, Real c) {
  const Real lo = -40, hi = 40;
  const int steps = 8000;
  Real best_y = lo;
  Real best = q_value(s, x, c, lo);
  for (int k = 1; k <= steps; ++k) {
    const Real y = lo + (hi - lo) * k / steps;
    const Real v = q_value(s, x, c, y);
    if (v < best) {
      best = v;
      best_y = y;
    }
  }
  const Real h = (hi - lo) / steps;
  Real a = std::max(lo, best_y - h), b = std::min(hi, best_y + h);
  const Real ratio = (std::sqrt(5.0L) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const Real m1 = b - ratio * (b - a);
    const Real m2 = a + ratio * (b - a);
    if (q_value(s, x, c, m1) < q_value(s, x, c, m2)) {
      b = m2;
    } else {
      a = m1;
    }
  }
  best = std::min(best, q_value(s, x, c, (a + b) / 2));
  if (s == Surrogate::Hinge) {
    for (Real y : {-1.0L, 1.0L}) best = std::min(best, q_value(s, x, c, y));
  }
  return best;
}

struct SupportPoint {
  double mass;
  double eta;
  Quartet cells;
};

inline Real risk(const std::vector<SupportPoint>& support, const std::vector<int>& rule) {
  Real total = 0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto& p = support[k];
    total += Real(p.mass) * (Real(p.eta) * p.cells.at(rule[k], 1) +
                             (1 - Real(p.eta)) * p.cells.at(rule[k], -1));
  }
  return total;
}

// Exhaustive minimum risk over every rule on the support.
inline Real bayes_risk(const std::vector<SupportPoint>& support) {
  const std::size_t k = support.size();
  Real best = std::numeric_limits<Real>::infinity();
  std::vector<int> rule(k);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    for (std::size_t j = 0; j < k; ++j) rule[j] = (mask >> j) & 1 ? 1 : -1;
    best = std::min(best, risk(support, rule));
  }
  return best;
}

// Unweighted logistic MLE by Newton's method on a fixed design (intercept
// column included by the caller).
inline Eigen::VectorXd logistic_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(design.cols());
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd margin = y.cwiseProduct(design * theta);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(design.cols());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(design.cols(), design.cols());
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(margin[i]));  // sigmoid(-margin)
      g -= p * y[i] * design.row(i).transpose();
      H += p * (1 - p) * design.row(i).transpose() * design.row(i);
    }
    const Eigen::VectorXd step = H.ldlt().solve(g);
    theta -= step;
    if (step.norm() < 1e-14) break;
  }
  return theta;
}

inline Real normal_cdf(Real x) { return 0.5L * std::erfc(-x / std::sqrt(2.0L)); }

// Cells drawn so both one-sided net losses are at least 0.05.
inline Quartet random_valid_quartet(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> cell(-3.0, 3.0);
  std::uniform_real_distribution<double> gap(0.05, 4.0);
  Quartet q;
  q.pp = cell(gen);
  q.nn = cell(gen);
  q.np = q.pp + gap(gen);
  q.pn = q.nn + gap(gen);
  return q;
}

}  // namespace oracle
