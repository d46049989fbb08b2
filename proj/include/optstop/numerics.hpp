#pragma once

// Root finding, adaptive quadrature and the exponential integral E1.
// Everything here is a pure function of its arguments.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace optstop {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Root bracket whose endpoints do not straddle a sign change.
class NoSignChange : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Iteration or subdivision cap reached before the tolerance was met.
class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Argument outside the domain of the function.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct RootProblem {
  std::function<double(double)> objective;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  /// Absolute tolerance on the root location. Zero asks for full double precision.
  double tolerance = 1e-12;
  int max_iterations = 200;
};

/// Brent's method: bisection safeguarded inverse quadratic / secant steps.
/// The returned root always lies in [bracket_lo, bracket_hi].
double solve_root(const RootProblem& problem);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
};

/// Globally adaptive 7/15-point Gauss-Kronrod quadrature.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below max(rel_tol * |value|, abs_tol). No interval is split
/// more than 60 times; hitting that depth or the interval cap raises
/// NoConvergence. The integrand is never evaluated at the endpoints, so
/// integrable endpoint singularities are tolerated, but the caller should
/// remove them by substitution when accuracy matters.
QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                           double rel_tol, double abs_tol = 0.0);

/// E1(x) = int_x^inf e^{-t}/t dt for x > 0.
double exp_integral_e1(double x);

/// I(t, s) = int_s^t e^{-xi}/xi dxi = E1(s) - E1(t), for 0 < s <= t.
double exp_integral_I(double t, double s);

/// I(x, x(1 - u)) = int_{x(1-u)}^{x} e^{-xi}/xi dxi, for x > 0 and 0 <= u <= 1/2.
///
/// Takes the relative width u directly so that narrow intervals keep full
/// relative accuracy; exp_integral_I(x, x * (1 - u)) would lose it through
/// the rounding of x * (1 - u).
double exp_integral_I_narrow(double x, double u);

namespace detail {

/// Power series -gamma - ln x - sum (-x)^k / (k k!). Accurate for x <= 1.
double e1_series(double x);

/// Lentz evaluation of the continued fraction for e^x E1(x). Accurate for x >= 1.
double e1_continued_fraction(double x);

}  // namespace detail

}  // namespace optstop
