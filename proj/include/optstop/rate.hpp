#pragma once

// The asymptotic winning rate w(t; a) of the threshold rule that stops at the
// first record inside {(t, x) : -x (1 - t) < a}, and its integral, the total
// win probability. a = c gives the optimal rule.

#include <cstddef>
#include <vector>

namespace optstop {

/// Within this distance of t = 0 or t = 1 the closed-form limits
/// 1 - e^{-a} and e^{-a} are returned instead of the formula.
inline constexpr double kRateEndpointEpsilon = 1e-10;

/// w(t; a) for 0 <= t <= 1 and a > 0. Throws DomainError otherwise.
double winning_rate(double t, double a);

/// w(t; c) for the optimal threshold.
double winning_rate(double t);

/// e^{-c} + (e^c - c - 1) E1(c).
double p_star_closed();

/// int_0^1 w(t; a) dt by adaptive quadrature.
double p_star_integrated(double a, double rel_tol = 1e-12);

struct RatePoint {
  double t = 0.0;
  double w = 0.0;
};

struct RateCurve {
  double a = 0.0;
  std::vector<RatePoint> points;
};

/// w(.; a) on `grid` equally spaced points of [0, 1], both endpoints included.
RateCurve rate_curve(double a, std::size_t grid);

}  // namespace optstop
