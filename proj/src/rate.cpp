#include "optstop/rate.hpp"

#include <cmath>

#include "optstop/numerics.hpp"
#include "optstop/stopping_core.hpp"

namespace optstop {

namespace {

// E1 is below 1e-300 past this point and is treated as zero.
constexpr double kE1Underflow = 700.0;

// a/u [ I(a/u, at/u) - I(a, at) ] with u = 1 - t.
double exponential_integral_term(double t, double u, double a) {
  const double outer_hi = a / u;
  const double outer_lo = a * t / u;
  double outer = 0.0;
  if (outer_lo < kE1Underflow) {
    outer = outer_hi > kE1Underflow ? exp_integral_e1(outer_lo)
                                    : exp_integral_I(outer_hi, outer_lo);
  }
  // Near t = 1 the inner interval [a(1 - u), a] is narrow and its integral
  // is O(u); pass u itself so the division by u keeps full precision.
  const double inner = u <= 0.5 ? exp_integral_I_narrow(a, u) : exp_integral_I(a, a * t);
  return outer_hi * (outer - inner);
}

}  // namespace

double winning_rate(double t, double a) {
  if (!(t >= 0.0 && t <= 1.0) || !(a > 0.0) || !std::isfinite(a)) {
    throw DomainError("winning_rate: require 0 <= t <= 1 and a > 0");
  }
  if (t < kRateEndpointEpsilon) {
    return -std::expm1(-a);
  }
  if (t > 1.0 - kRateEndpointEpsilon) {
    return std::exp(-a);
  }
  const double u = 1.0 - t;
  const double exp_neg_a = std::exp(-a);
  // (e^{-at} - e^{-at/u}) / t
  const double record_term = -std::exp(-a * t) * std::expm1(-a * t * t / u) / t;
  // (e^{-at} - t e^{-a}) / u
  const double boundary_term = exp_neg_a * (std::expm1(a * u) + u) / u;
  return -exp_neg_a + record_term + boundary_term + exponential_integral_term(t, u, a);
}

double winning_rate(double t) { return winning_rate(t, constants().c); }

double p_star_closed() { return constants().p_star; }

double p_star_integrated(double a, double rel_tol) {
  if (!(a > 0.0)) {
    throw DomainError("p_star_integrated: require a > 0");
  }
  return integrate([a](double t) { return winning_rate(t, a); }, 0.0, 1.0, rel_tol, 1e-15).value;
}

RateCurve rate_curve(double a, std::size_t grid) {
  if (grid < 2) {
    throw DomainError("rate_curve: require grid >= 2");
  }
  RateCurve curve;
  curve.a = a;
  curve.points.reserve(grid);
  const double last = static_cast<double>(grid - 1);
  for (std::size_t i = 0; i < grid; ++i) {
    const double t = static_cast<double>(i) / last;
    curve.points.push_back({t, winning_rate(t, a)});
  }
  return curve;
}

}  // namespace optstop
