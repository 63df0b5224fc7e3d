#include "asymdec/convexify.hpp"

#include "asymdec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace asymdec {

std::string_view to_string(ConvexifierKind kind) noexcept {
  switch (kind) {
    case ConvexifierKind::Logistic:
      return "logistic";
    case ConvexifierKind::Exponential:
      return "exponential";
    case ConvexifierKind::Hinge:
      return "hinge";
  }
  return "logistic";
}

ConvexifierKind parse_convexifier(std::string_view name) {
  if (name == "logistic") return ConvexifierKind::Logistic;
  if (name == "exponential") return ConvexifierKind::Exponential;
  if (name == "hinge") return ConvexifierKind::Hinge;
  throw ConfigError("unknown convexifier '" + std::string(name) +
                    "' (expected logistic, exponential or hinge)");
}

CalibrationConstants calibration_constants(ConvexifierKind kind) noexcept {
  switch (kind) {
    case ConvexifierKind::Logistic:
      return {0.5, std::sqrt(2.0 * std::numbers::ln2)};
    case ConvexifierKind::Exponential:
      return {0.5, 2.0};
    case ConvexifierKind::Hinge:
      return {1.0, 1.0};
  }
  return {1.0, 1.0};
}

namespace {

// ln(1 + e^z) without overflow.
double softplus(double z) noexcept {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// e^z / (1 + e^z).
double logistic_sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_interior(double x, double c) {
  if (!(x > 0.0 && x < 1.0 && c > 0.0 && c < 1.0)) {
    throw DomainError("arguments must lie strictly inside (0, 1); got x = " + std::to_string(x) +
                      ", c = " + std::to_string(c));
  }
}

// Binary entropy in bits.
double entropy_bits(double p) noexcept {
  auto term = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
  return term(p) + term(1.0 - p);
}

}  // namespace

double phi(ConvexifierKind kind, double z) noexcept {
  switch (kind) {
    case ConvexifierKind::Logistic:
      return softplus(z) / std::numbers::ln2;
    case ConvexifierKind::Exponential:
      return std::exp(z);
    case ConvexifierKind::Hinge:
      return std::max(0.0, 1.0 + z);
  }
  return 0.0;
}

double phi_derivative(ConvexifierKind kind, double z) noexcept {
  switch (kind) {
    case ConvexifierKind::Logistic:
      return logistic_sigmoid(z) / std::numbers::ln2;
    case ConvexifierKind::Exponential:
      return std::exp(z);
    case ConvexifierKind::Hinge:
      if (z > -1.0) return 1.0;
      if (z < -1.0) return 0.0;
      return 0.5;
  }
  return 0.0;
}

double lipschitz_bound(ConvexifierKind kind, double radius) noexcept {
  switch (kind) {
    case ConvexifierKind::Logistic:
      return logistic_sigmoid(radius) / std::numbers::ln2;
    case ConvexifierKind::Exponential:
      return std::exp(radius);
    case ConvexifierKind::Hinge:
      return 1.0;
  }
  return 1.0;
}

double q_functional(ConvexifierKind kind, double x, double c, double y) noexcept {
  return x * (1.0 - c) * phi(kind, -y) + (1.0 - x) * c * phi(kind, y);
}

double population_minimizer(ConvexifierKind kind, double eta, double c) {
  require_interior(eta, c);
  const double log_odds = std::log(eta * (1.0 - c)) - std::log((1.0 - eta) * c);
  switch (kind) {
    case ConvexifierKind::Logistic:
      return log_odds;
    case ConvexifierKind::Exponential:
      return 0.5 * log_odds;
    case ConvexifierKind::Hinge:
      return eta >= c ? 1.0 : -1.0;
  }
  return 0.0;
}

double inf_q_closed_form(ConvexifierKind kind, double x, double c) {
  require_interior(x, c);
  const double pos = x * (1.0 - c);
  const double neg = (1.0 - x) * c;
  switch (kind) {
    case ConvexifierKind::Hinge:
      return 2.0 * std::min(pos, neg);
    case ConvexifierKind::Exponential:
      return 2.0 * std::sqrt(pos * neg);
    case ConvexifierKind::Logistic: {
      const double mass = pos + neg;
      return mass * entropy_bits(pos / mass);
    }
  }
  return 0.0;
}

double calibration_gap(ConvexifierKind kind, double x, double c) {
  require_interior(x, c);
  const double pos = x * (1.0 - c);
  const double neg = (1.0 - x) * c;
  switch (kind) {
    case ConvexifierKind::Hinge:
      return std::abs(x - c);
    case ConvexifierKind::Exponential: {
      const double diff = std::sqrt(pos) - std::sqrt(neg);
      return diff * diff;
    }
    case ConvexifierKind::Logistic: {
      // mass * (1 - H(eta)) = mass * KL(eta || 1/2) in bits.
      const double mass = pos + neg;
      const double eta = pos / mass;
      auto term = [](double p) { return p > 0.0 ? p * std::log(2.0 * p) : 0.0; };
      return mass * (term(eta) + term(1.0 - eta)) / std::numbers::ln2;
    }
  }
  return 0.0;
}

}  // namespace asymdec
