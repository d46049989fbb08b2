#include "optstop/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

namespace optstop {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

}  // namespace

double solve_root(const RootProblem& problem) {
  if (!problem.objective) {
    throw NoSignChange("solve_root: empty objective");
  }
  if (!(problem.tolerance >= 0.0)) {
    throw NumericalError("solve_root: tolerance must be non-negative");
  }
  const auto& f = problem.objective;
  double a = problem.bracket_lo;
  double b = problem.bracket_hi;
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (!std::isfinite(fa) || !std::isfinite(fb) || std::signbit(fa) == std::signbit(fb)) {
    throw NoSignChange("solve_root: objective does not change sign on [" + std::to_string(a) +
                       ", " + std::to_string(b) + "]");
  }

  // Brent (1973), in the zeroin arrangement: b is the best estimate, c the
  // contrapoint keeping the root bracketed between b and c.
  double c = a;
  double fc = fa;
  double d = b - a;
  double e = d;
  for (int iter = 0; iter < problem.max_iterations; ++iter) {
    if (std::signbit(fb) == std::signbit(fc)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * kEps * std::fabs(b) + 0.5 * problem.tolerance;
    const double m = 0.5 * (c - b);
    if (std::fabs(m) <= tol1 || fb == 0.0) {
      return b;
    }
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      double p;
      double q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) {
        q = -q;
      } else {
        p = -p;
      }
      if (2.0 * p < std::min(3.0 * m * q - std::fabs(tol1 * q), std::fabs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::fabs(d) > tol1 ? d : (m > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  throw NoConvergence("solve_root: iteration cap of " + std::to_string(problem.max_iterations) +
                      " reached");
}

namespace {

// 15-point Kronrod abscissae; odd indices are the 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double lo;
  double hi;
  double value;
  double error;
  int depth;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gauss_kronrod(const std::function<double(double)>& f, double lo, double hi, int depth) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  double abs_sum = std::fabs(kronrod);
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    abs_sum += kWgk[j] * (std::fabs(f1) + std::fabs(f2));
    if (j % 2 == 1) {
      gauss += kWg[j / 2] * (f1 + f2);
    }
  }
  const double value = kronrod * half;
  const double roundoff = 50.0 * kEps * abs_sum * std::fabs(half);
  const double error = std::max(std::fabs((kronrod - gauss) * half), roundoff);
  return {lo, hi, value, error, depth};
}

constexpr int kMaxDepth = 60;
constexpr std::size_t kMaxSegments = 100000;

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                           double rel_tol, double abs_tol) {
  if (!(lo <= hi)) {
    throw DomainError("integrate: require lo <= hi");
  }
  if (lo == hi) {
    return {0.0, 0.0, 1};
  }
  std::priority_queue<Segment> work;
  std::size_t evaluations = 15;
  Segment first = gauss_kronrod(f, lo, hi, 0);
  double total = first.value;
  double total_error = first.error;
  work.push(first);

  while (total_error > std::max(rel_tol * std::fabs(total), abs_tol)) {
    if (!std::isfinite(total)) {
      throw NoConvergence("integrate: non-finite integrand");
    }
    if (work.size() >= kMaxSegments) {
      throw NoConvergence("integrate: subdivision cap reached");
    }
    const Segment worst = work.top();
    if (worst.depth >= kMaxDepth) {
      throw NoConvergence("integrate: recursion depth cap reached");
    }
    work.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const Segment left = gauss_kronrod(f, worst.lo, mid, worst.depth + 1);
    const Segment right = gauss_kronrod(f, mid, worst.hi, worst.depth + 1);
    evaluations += 30;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    work.push(left);
    work.push(right);
  }

  // Re-sum from the segments to drop the drift of the running totals.
  double value = 0.0;
  double error = 0.0;
  while (!work.empty()) {
    value += work.top().value;
    error += work.top().error;
    work.pop();
  }
  return {value, error, evaluations};
}

namespace detail {

double e1_series(double x) {
  double term = 1.0;  // (-x)^k / k!
  double sum = 0.0;
  for (int k = 1; k < 1000; ++k) {
    term *= -x / k;
    const double contribution = term / k;
    sum += contribution;
    if (std::fabs(contribution) < 1e-16 * std::fabs(sum)) {
      break;
    }
  }
  return -std::numbers::egamma - std::log(x) - sum;
}

double e1_continued_fraction(double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double delta = c * d;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) {
      return h * std::exp(-x);
    }
  }
  throw NoConvergence("exp_integral_e1: continued fraction did not converge");
}

}  // namespace detail

double exp_integral_e1(double x) {
  if (!(x > 0.0)) {
    throw DomainError("exp_integral_e1: require x > 0");
  }
  return x <= 1.0 ? detail::e1_series(x) : detail::e1_continued_fraction(x);
}

double exp_integral_I(double t, double s) {
  if (!(s > 0.0 && s <= t)) {
    throw DomainError("exp_integral_I: require 0 < s <= t");
  }
  if (s == t) {
    return 0.0;
  }
  if (t > 1.0) {
    return std::max(0.0, exp_integral_e1(s) - exp_integral_e1(t));
  }
  // ln(t/s) + sum (-1)^k (t^k - s^k) / (k k!); the logarithms of E1 cancel exactly.
  double sum = std::log(t / s);
  double pt = 1.0;
  double ps = 1.0;
  for (int k = 1; k < 1000; ++k) {
    pt *= -t / k;
    ps *= -s / k;
    const double contribution = (pt - ps) / k;
    sum += contribution;
    if (std::fabs(contribution) < 1e-16 * std::fabs(sum)) {
      break;
    }
  }
  return std::max(0.0, sum);
}

double exp_integral_I_narrow(double x, double u) {
  if (!(x > 0.0) || !(u >= 0.0 && u <= 0.5)) {
    throw DomainError("exp_integral_I_narrow: require x > 0 and 0 <= u <= 1/2");
  }
  if (u == 0.0) {
    return 0.0;
  }
  if (x > 700.0) {
    return exp_integral_I(x, x * (1.0 - u));
  }
  // With xi = x (1 - v): e^{-x} int_0^u e^{xv} / (1 - v) dv. Expanding the
  // integrand gives sum_n q_n u^{n+1} / (n+1), q_n = P(Poisson(x) <= n).
  double pmf = std::exp(-x);
  double cdf = pmf;
  double power = u;
  double sum = 0.0;
  for (int n = 0; n < 100000; ++n) {
    sum += cdf * power / (n + 1);
    power *= u;
    pmf *= x / (n + 1);
    cdf = std::min(1.0, cdf + pmf);
    // q_n <= 1 bounds the remaining tail by a geometric series in u.
    const double tail = power / ((n + 2) * (1.0 - u));
    if (n + 1 > x && tail < 1e-17 * sum) {
      break;
    }
  }
  return sum;
}

}  // namespace optstop
