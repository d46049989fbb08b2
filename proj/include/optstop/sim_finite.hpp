#pragma once

// Monte Carlo for the finite-horizon problem: n i.i.d. uniform draws, stop at
// the first running maximum X_i with X_i >= d_{n-i}, win if X_i is the
// maximum of all n draws.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "optstop/stopping_core.hpp"

namespace optstop {

enum class FiniteSampling {
  /// Draw all n values of every trial. The reference mode.
  naive,
  /// Jump between records (geometric gaps, uniform record values) and settle
  /// the win with one draw against P(max of the rest < x) = x^{n-i}.
  /// Same distribution as `naive`, different random streams.
  early_exit,
};

struct FiniteSimConfig {
  std::size_t n = 1;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::size_t chunks = 64;
  std::size_t threads = 0;  ///< 0 = hardware concurrency
  FiniteSampling sampling = FiniteSampling::naive;
};

struct TrialOutcome {
  std::size_t stop_index = 0;  ///< 1-based
  bool won = false;
};

/// Horizons up to this size keep one histogram slot per draw index.
inline constexpr std::size_t kPerIndexLimit = 10000;
/// Slot count for longer horizons.
inline constexpr std::size_t kCoarseBins = 20;

struct SimSummary {
  std::size_t n = 0;
  std::uint64_t trials = 0;
  std::uint64_t wins = 0;
  double win_rate = 0.0;
  double std_err = 0.0;
  /// Wins by stop index: slot i-1 for index i when n <= kPerIndexLimit,
  /// otherwise kCoarseBins equal-width buckets.
  std::vector<std::uint64_t> per_index_wins;
  /// Same layout; counts every trial at its stop index (index n when the
  /// rule never stopped).
  std::vector<std::uint64_t> stop_index_histogram;

  static SimSummary empty(std::size_t n);

  bool per_index() const { return per_index_wins.size() == n; }
  std::size_t bin_of(std::size_t index) const;

  void add(const TrialOutcome& outcome);
  void merge(const SimSummary& other);
  /// Recomputes win_rate and std_err from the counts.
  void finalize();
};

/// One play of the optimal rule. `next_uniform()` supplies X_1, X_2, ...;
/// all n draws are consumed.
template <class Uniform>
TrialOutcome run_trial(std::size_t n, const DecisionTable& table, Uniform&& next_uniform) {
  double running_max = -1.0;
  double stop_value = 0.0;
  double after_stop_max = -1.0;
  std::size_t stop = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double x = next_uniform();
    if (stop != 0) {
      after_stop_max = x > after_stop_max ? x : after_stop_max;
    } else if (x > running_max) {
      running_max = x;
      if (x >= table.d[n - i]) {
        stop = i;
        stop_value = x;
      }
    }
  }
  if (stop == 0) {
    return {n, false};
  }
  return {stop, !(after_stop_max > stop_value)};
}

/// Record-skipping variant of run_trial; see FiniteSampling::early_exit.
template <class Uniform>
TrialOutcome run_trial_early_exit(std::size_t n, const DecisionTable& table,
                                  Uniform&& next_uniform) {
  double running_max = 0.0;
  std::size_t i = 0;
  while (true) {
    // Draws until the next value above running_max: Geometric(1 - running_max).
    double gap = 1.0;
    if (running_max > 0.0) {
      gap += std::floor(std::log(next_uniform()) / std::log(running_max));
    }
    if (gap > static_cast<double>(n - i)) {
      return {n, false};
    }
    i += static_cast<std::size_t>(gap);
    running_max += (1.0 - running_max) * next_uniform();
    if (running_max >= table.d[n - i]) {
      const std::size_t remaining = n - i;
      const bool won = remaining == 0 ||
                       next_uniform() < std::pow(running_max, static_cast<double>(remaining));
      return {i, won};
    }
  }
}

SimSummary simulate_finite(const FiniteSimConfig& config);

/// One row of the empirical-versus-analytic winning-rate comparison.
struct BucketComparison {
  double bucket_mid = 0.0;   ///< mean draw index of the bucket
  double t = 0.0;            ///< bucket_mid / n
  double w_analytic = 0.0;   ///< mean of w(i/n; a) over the bucket's indices
  double w_empirical = 0.0;  ///< mean of n * P(stop at i and win) over the bucket
  double std_err = 0.0;
  double z = 0.0;
};

/// Groups the per-index wins into `buckets` consecutive index ranges and sets
/// each against the winning-rate curve with threshold a.
std::vector<BucketComparison> compare_with_rate(const SimSummary& summary, std::size_t buckets,
                                                double a);

double max_abs_deviation(const std::vector<BucketComparison>& rows);

}  // namespace optstop
