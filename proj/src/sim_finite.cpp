#include "optstop/sim_finite.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "optstop/numerics.hpp"
#include "optstop/parallel.hpp"
#include "optstop/random.hpp"
#include "optstop/rate.hpp"

namespace optstop {

SimSummary SimSummary::empty(std::size_t n) {
  SimSummary s;
  s.n = n;
  const std::size_t bins = n <= kPerIndexLimit ? n : kCoarseBins;
  s.per_index_wins.assign(bins, 0);
  s.stop_index_histogram.assign(bins, 0);
  return s;
}

std::size_t SimSummary::bin_of(std::size_t index) const {
  if (per_index()) return index - 1;
  return (index - 1) * per_index_wins.size() / n;
}

void SimSummary::add(const TrialOutcome& outcome) {
  const std::size_t bin = bin_of(outcome.stop_index);
  ++trials;
  ++stop_index_histogram[bin];
  if (outcome.won) {
    ++wins;
    ++per_index_wins[bin];
  }
}

void SimSummary::merge(const SimSummary& other) {
  trials += other.trials;
  wins += other.wins;
  for (std::size_t b = 0; b < per_index_wins.size(); ++b) {
    per_index_wins[b] += other.per_index_wins[b];
    stop_index_histogram[b] += other.stop_index_histogram[b];
  }
  finalize();
}

void SimSummary::finalize() {
  if (trials == 0) {
    win_rate = 0.0;
    std_err = 0.0;
    return;
  }
  const double t = static_cast<double>(trials);
  win_rate = static_cast<double>(wins) / t;
  std_err = std::sqrt(win_rate * (1.0 - win_rate) / t);
}

SimSummary simulate_finite(const FiniteSimConfig& config) {
  if (config.n == 0 || config.trials == 0 || config.chunks == 0) {
    throw std::invalid_argument("simulate_finite: n, trials and chunks must be positive");
  }
  const auto table = cached_decision_table(config.n);
  const auto run_chunk = [&](std::uint64_t begin, std::uint64_t end) {
    SimSummary part = SimSummary::empty(config.n);
    for (std::uint64_t trial = begin; trial < end; ++trial) {
      RandomStream rng = RandomStream::for_item(config.seed, trial);
      const auto draw = [&rng] { return rng.uniform(); };
      part.add(config.sampling == FiniteSampling::naive
                   ? run_trial(config.n, *table, draw)
                   : run_trial_early_exit(config.n, *table, draw));
    }
    return part;
  };
  return run_sharded(config.trials, config.chunks, config.threads, run_chunk,
                     SimSummary::empty(config.n));
}

std::vector<BucketComparison> compare_with_rate(const SimSummary& summary, std::size_t buckets,
                                                double a) {
  const std::size_t n = summary.n;
  if (buckets == 0 || summary.trials == 0) {
    throw std::invalid_argument("compare_with_rate: need buckets >= 1 and a non-empty summary");
  }
  if (!summary.per_index() && buckets != summary.per_index_wins.size()) {
    throw std::invalid_argument("compare_with_rate: coarse summaries only support " +
                                std::to_string(summary.per_index_wins.size()) + " buckets");
  }
  buckets = std::min(buckets, n);
  const double trials = static_cast<double>(summary.trials);

  std::vector<BucketComparison> rows;
  rows.reserve(buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    // Indices i with (i - 1) * buckets / n == b.
    const std::size_t first = (b * n + buckets - 1) / buckets + 1;
    const std::size_t last = ((b + 1) * n + buckets - 1) / buckets;
    std::uint64_t wins = 0;
    double w_sum = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
      w_sum += winning_rate(static_cast<double>(i) / static_cast<double>(n), a);
      if (summary.per_index()) wins += summary.per_index_wins[i - 1];
    }
    if (!summary.per_index()) wins = summary.per_index_wins[b];

    const double width = static_cast<double>(last - first + 1);
    const double scale = static_cast<double>(n) / width;
    const double p = static_cast<double>(wins) / trials;

    BucketComparison row;
    row.bucket_mid = 0.5 * static_cast<double>(first + last);
    row.t = row.bucket_mid / static_cast<double>(n);
    row.w_analytic = w_sum / width;
    row.w_empirical = scale * p;
    row.std_err = scale * std::sqrt(p * (1.0 - p) / trials);
    const double diff = row.w_empirical - row.w_analytic;
    row.z = row.std_err > 0.0 ? diff / row.std_err : (diff == 0.0 ? 0.0 : INFINITY);
    rows.push_back(row);
  }
  return rows;
}

double max_abs_deviation(const std::vector<BucketComparison>& rows) {
  double worst = 0.0;
  for (const auto& row : rows) worst = std::max(worst, std::fabs(row.w_empirical - row.w_analytic));
  return worst;
}

}  // namespace optstop
