#include "optstop/stopping_core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "optstop/numerics.hpp"

namespace optstop {

double threshold_objective(double x) {
  if (x == 0.0) {
    return 0.0;
  }
  const auto integrand = [](double u) { return u == 0.0 ? 1.0 : std::expm1(u) / u; };
  return integrate(integrand, 0.0, x, 1e-13).value;
}

double compute_c(double tolerance) {
  if (!(tolerance > 0.0)) {
    throw DomainError("compute_c: tolerance must be positive");
  }
  RootProblem problem;
  problem.objective = [](double x) { return threshold_objective(x) - 1.0; };
  problem.bracket_lo = 0.5;
  problem.bracket_hi = 1.5;
  // The objective has slope (e^c - 1)/c ~ 1.54 at the root.
  problem.tolerance = 0.5 * tolerance;
  return solve_root(problem);
}

double p_star_from_threshold(double c) {
  return std::exp(-c) + (std::expm1(c) - c) * exp_integral_e1(c);
}

Constants make_constants(double tolerance) {
  Constants k;
  k.c = compute_c(tolerance);
  k.exp_neg_c = std::exp(-k.c);
  k.p_star = p_star_from_threshold(k.c);
  return k;
}

const Constants& constants() {
  static const Constants k = make_constants(1e-15);
  return k;
}

double decision_residual(double d, std::size_t k) {
  // With v = 1/d and delta = v - 1, p_j = v^j - 1 obeys
  // p_{j+1} = p_j + delta (p_j + 1), which never subtracts.
  const double delta = (1.0 - d) / d;
  double p = 0.0;
  double sum = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    p += delta * (p + 1.0);
    sum += p / static_cast<double>(j);
  }
  return sum - 1.0;
}

namespace {

constexpr double kResidualLimit = 1e-10;

double solve_decision_number(std::size_t k, double lower) {
  RootProblem problem;
  problem.objective = [k](double d) { return decision_residual(d, k); };
  // At d = 1 - 1/k the residual is at least Ein(1) - 1 > 0, since
  // (1 - 1/k)^{-j} >= e^{j/k}.
  const double kd = static_cast<double>(k);
  problem.bracket_lo = std::max({lower, 1e-6, (kd - 1.0) / kd});
  problem.bracket_hi = 1.0 - 1e-12;
  problem.tolerance = 0.0;
  const double d = solve_root(problem);
  if (!(std::fabs(decision_residual(d, k)) < kResidualLimit)) {
    throw NoConvergence("decision_number: residual above 1e-10 at k = " + std::to_string(k));
  }
  return d;
}

}  // namespace

double decision_number(std::size_t k) {
  if (k == 0) {
    return 0.0;
  }
  return solve_decision_number(k, 0.0);
}

DecisionTable decision_table(std::size_t n) {
  if (n == 0) {
    throw DomainError("decision_table: require n >= 1");
  }
  DecisionTable table;
  table.n = n;
  table.d.resize(n + 1);
  table.d[0] = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    table.d[k] = solve_decision_number(k, table.d[k - 1]);
  }
  return table;
}

std::shared_ptr<const DecisionTable> cached_decision_table(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const DecisionTable>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_shared<const DecisionTable>(decision_table(n));
  }
  return slot;
}

EmbeddedThresholds embedded_thresholds(std::size_t n, const DecisionTable& table) {
  if (n == 0 || table.d.size() < n) {
    throw DomainError("embedded_thresholds: table must cover d_0 .. d_{n-1}");
  }
  EmbeddedThresholds thresholds;
  thresholds.n = n;
  thresholds.b.resize(n);
  for (std::size_t k = 1; k < n; ++k) {
    thresholds.b[k] = static_cast<double>(n) * std::log(table.d[k]);
  }
  return thresholds;
}

double asymptotic_gap(std::size_t k) {
  if (k == 0) {
    throw DomainError("asymptotic_gap: require k >= 1");
  }
  return static_cast<double>(k) * (1.0 - decision_number(k));
}

}  // namespace optstop
