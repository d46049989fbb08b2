#pragma once

// The best-choice game on a unit-intensity planar Poisson process in
// [0,1] x (-inf, 0], truncated to scores above -depth. Time runs along t,
// scores along x; a record is an atom with no other atom north-west of it.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "optstop/random.hpp"
#include "optstop/stopping_core.hpp"

namespace optstop {

struct Atom {
  double t = 0.0;
  double x = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Stopping region {(t, x) : x >= boundary(t)}.
class StopRegion {
 public:
  enum class Kind { optimal, constrained, discrete };

  /// Gamma(a): x >= -a / (1 - t).
  static StopRegion optimal(double a);
  /// Gamma(a) intersected with x >= -ell.
  static StopRegion constrained(double a, double ell);
  /// Staircase x >= b_{n-i} on the strip [(i-1)/n, i/n). Played on strip
  /// maxima: see play_region.
  static StopRegion discrete(EmbeddedThresholds thresholds);

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double ell() const { return ell_; }
  std::size_t strips() const { return thresholds_ ? thresholds_->n : 0; }
  const EmbeddedThresholds* thresholds() const { return thresholds_.get(); }

  /// Lowest accepted score at time t; -infinity where everything is accepted.
  double boundary(double t) const;
  bool contains(const Atom& atom) const { return atom.x >= boundary(atom.t); }

  /// 1-based strip index of time t for the discrete kind.
  std::size_t strip_of(double t) const;

 private:
  Kind kind_ = Kind::optimal;
  double a_ = 0.0;
  double ell_ = 0.0;
  std::shared_ptr<const EmbeddedThresholds> thresholds_;
};

struct PppSimConfig {
  StopRegion region = StopRegion::optimal(0.8);
  double depth = 40.0;  ///< score axis truncated at -depth
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::size_t buckets = 20;  ///< time histogram resolution
  /// When set, a win additionally needs the maximum above -constrain_ell.
  std::optional<double> constrain_ell;
  /// Depths ell at which g(ell, t) is estimated, by replaying every trial's
  /// atoms through the constrained region. Optimal regions only.
  std::vector<double> g_ells;
  std::size_t chunks = 64;
  std::size_t threads = 0;
};

struct GSample {
  double ell = 0.0;
  double t = 0.0;  ///< right edge of a time bucket
  double estimate = 0.0;
  double std_err = 0.0;
};

struct PppSummary {
  std::uint64_t trials = 0;
  std::uint64_t wins = 0;
  double win_rate = 0.0;
  double std_err = 0.0;
  std::uint64_t atoms = 0;  ///< total atoms sampled
  /// Wins by the time bucket of the stopping atom.
  std::vector<std::uint64_t> time_histogram;
  /// Per ell in the config: wins of the constrained rule by time bucket.
  std::vector<std::vector<std::uint64_t>> g_histograms;
  std::vector<double> g_ells;

  static PppSummary empty(std::size_t buckets, const std::vector<double>& g_ells);
  void merge(const PppSummary& other);
  void finalize();

  /// g(infinity, t_b) for the configured region at each bucket's right edge.
  std::vector<GSample> g_unconstrained() const;
  /// g(ell, t_b) for every configured ell and bucket.
  std::vector<GSample> g_samples() const;
};

struct PppTrialOutcome {
  std::optional<Atom> stopped_at;
  bool won = false;
  double stop_time = 1.0;  ///< 1 when the rule never stops
};

/// Poisson(depth) atoms, uniform on [0,1) x (-depth, 0), sorted by time.
/// Generated in unit-depth slabs from the top down, so a deeper sample from
/// the same stream extends a shallower one.
std::vector<Atom> sample_atoms(double depth, RandomStream& rng);

/// Strict running maxima of a time-sorted atom list. The last element is the
/// overall maximum.
std::vector<Atom> record_chain(std::span<const Atom> atoms);

/// Plays `region` on a time-sorted atom list.
///
/// Continuous regions stop at the first record inside the region. The
/// discrete region walks the strips in order, takes each strip's best atom,
/// and stops at the first one that beats all earlier strips and clears the
/// strip's threshold; the win is credited when that atom is the overall
/// maximum.
PppTrialOutcome play_region(const StopRegion& region, std::span<const Atom> atoms,
                            std::optional<double> constrain_ell = std::nullopt);

PppTrialOutcome run_ppp_trial(const PppSimConfig& config, RandomStream& rng);

PppSummary simulate_ppp(const PppSimConfig& config);

}  // namespace optstop
