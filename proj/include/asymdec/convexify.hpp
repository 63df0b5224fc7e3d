#pragma once

#include <string>
#include <string_view>

namespace asymdec {

enum class ConvexifierKind { Logistic, Exponential, Hinge };

std::string_view to_string(ConvexifierKind kind) noexcept;
// Accepts "logistic", "exponential", "hinge"; throws ConfigError otherwise.
ConvexifierKind parse_convexifier(std::string_view name);

// Calibration pair: |x - c| <= constant * gap(x, c)^exponent.
struct CalibrationConstants {
  double exponent;
  double constant;
};

CalibrationConstants calibration_constants(ConvexifierKind kind) noexcept;

// Convex, non-decreasing surrogate with phi(0) = 1.
double phi(ConvexifierKind kind, double z) noexcept;
// Hinge uses the subgradient 1/2 at the kink z = -1.
double phi_derivative(ConvexifierKind kind, double z) noexcept;
// Lipschitz constant of phi on [-radius, radius].
double lipschitz_bound(ConvexifierKind kind, double radius) noexcept;

// Q_c(x, y) = x (1 - c) phi(-y) + (1 - x) c phi(y).
double q_functional(ConvexifierKind kind, double x, double c, double y) noexcept;

// Minimizer over y of Q_c(eta, y). Throws DomainError unless both
// arguments lie strictly inside (0, 1). Hinge returns +-1 with ties to +1.
double population_minimizer(ConvexifierKind kind, double eta, double c);

// inf over y of Q_c(x, y), closed form. Throws DomainError on the boundary.
double inf_q_closed_form(ConvexifierKind kind, double x, double c);

// (x + c - 2xc) - inf_y Q_c(x, y), computed in a cancellation-free form.
double calibration_gap(ConvexifierKind kind, double x, double c);

}  // namespace asymdec
