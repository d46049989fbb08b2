#pragma once

// Constants of the full-information best-choice problem: the critical
// threshold c, the finite-horizon decision numbers d_k and their embedding
// into the planar Poisson picture, b_k = n log d_k.

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

namespace optstop {

struct Constants {
  double c = 0.0;          ///< root of int_0^c (e^x - 1)/x dx = 1
  double exp_neg_c = 0.0;  ///< e^{-c}
  double p_star = 0.0;     ///< limiting optimal win probability, Samuels' closed form
};

/// Solves int_0^c (e^x - 1)/x dx = 1 on [0.5, 1.5]; the returned c has an
/// objective residual below `tolerance` (when the tolerance is attainable in
/// double precision).
double compute_c(double tolerance);

/// int_0^x (e^u - 1)/u du by adaptive quadrature with the removable
/// singularity at 0 filled in.
double threshold_objective(double x);

/// P* = e^{-c} + (e^c - c - 1) E1(c).
double p_star_from_threshold(double c);

Constants make_constants(double tolerance);

/// Process-wide constants at full double precision, computed once.
const Constants& constants();

/// sum_{j=1}^k (d^{-j} - 1)/j - 1, evaluated without pow() and without
/// cancellation for d close to 1.
double decision_residual(double d, std::size_t k);

/// d_0 = 0; for k >= 1 the unique root in (0,1) of decision_residual(., k).
double decision_number(std::size_t k);

struct DecisionTable {
  std::size_t n = 0;
  std::vector<double> d;  ///< d[0..n]

  double operator[](std::size_t k) const { return d[k]; }
};

/// d_0 .. d_n, each bracketed from below by its predecessor.
DecisionTable decision_table(std::size_t n);

/// Shared, immutable table for horizon n. Repeated requests for the same n
/// return the same object; safe to call from several threads.
std::shared_ptr<const DecisionTable> cached_decision_table(std::size_t n);

struct EmbeddedThresholds {
  std::size_t n = 0;
  /// b[k] = n log d[k] for k = 0..n-1. b[0] is empty: d_0 = 0 puts no
  /// constraint on the last strip.
  std::vector<std::optional<double>> b;
};

EmbeddedThresholds embedded_thresholds(std::size_t n, const DecisionTable& table);

/// k (1 - d_k); tends to c as k grows.
double asymptotic_gap(std::size_t k);

}  // namespace optstop
