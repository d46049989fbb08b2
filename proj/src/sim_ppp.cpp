#include "optstop/sim_ppp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "optstop/parallel.hpp"

namespace optstop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string("StopRegion: ") + what + " must be positive");
  }
}

void fill_atoms(double depth, RandomStream& rng, std::vector<Atom>& atoms) {
  atoms.clear();
  for (double top = 0.0; top < depth; top += 1.0) {
    const double height = std::min(1.0, depth - top);
    const std::uint32_t count = rng.poisson_small(height);
    for (std::uint32_t j = 0; j < count; ++j) {
      const double t = rng.uniform();
      const double x = -(top + height * rng.uniform());
      atoms.push_back({t, x});
    }
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& l, const Atom& r) { return l.t < r.t || (l.t == r.t && l.x > r.x); });
}

bool beaten_after(std::span<const Atom> atoms, std::size_t from, double x) {
  for (std::size_t j = from; j < atoms.size(); ++j) {
    if (atoms[j].x > x) return true;
  }
  return false;
}

PppTrialOutcome play_continuous(const StopRegion& region, std::span<const Atom> atoms) {
  double best = kNegInf;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const Atom& atom = atoms[j];
    if (atom.x <= best) continue;
    best = atom.x;
    if (region.contains(atom)) {
      return {atom, !beaten_after(atoms, j + 1, atom.x), atom.t};
    }
  }
  return {};
}

PppTrialOutcome play_discrete(const StopRegion& region, std::span<const Atom> atoms) {
  double best_so_far = kNegInf;
  std::size_t j = 0;
  while (j < atoms.size()) {
    const std::size_t strip = region.strip_of(atoms[j].t);
    std::size_t strip_best = j;
    std::size_t k = j + 1;
    while (k < atoms.size() && region.strip_of(atoms[k].t) == strip) {
      if (atoms[k].x > atoms[strip_best].x) strip_best = k;
      ++k;
    }
    const Atom& candidate = atoms[strip_best];
    if (candidate.x > best_so_far) {
      best_so_far = candidate.x;
      if (region.contains(candidate)) {
        return {candidate, !beaten_after(atoms, k, candidate.x), candidate.t};
      }
    }
    j = k;
  }
  return {};
}

std::size_t time_bucket(double t, std::size_t buckets) {
  const auto b = static_cast<std::size_t>(t * static_cast<double>(buckets));
  return std::min(b, buckets - 1);
}

void validate(const PppSimConfig& config) {
  if (!(config.depth >= 10.0) || !std::isfinite(config.depth)) {
    throw std::invalid_argument("PppSimConfig: depth must be at least 10");
  }
  if (config.buckets == 0 || config.trials == 0 || config.chunks == 0) {
    throw std::invalid_argument("PppSimConfig: buckets, trials and chunks must be positive");
  }
  if (!config.g_ells.empty() && config.region.kind() != StopRegion::Kind::optimal) {
    throw std::invalid_argument("PppSimConfig: g(ell, t) needs an optimal-kind region");
  }
  for (double ell : config.g_ells) {
    if (!(ell > 0.0)) throw std::invalid_argument("PppSimConfig: g depths must be positive");
  }
  if (config.constrain_ell && !(*config.constrain_ell > 0.0)) {
    throw std::invalid_argument("PppSimConfig: constrain_ell must be positive");
  }
}

std::vector<GSample> cumulative(const std::vector<std::uint64_t>& histogram, double ell,
                                std::uint64_t trials) {
  std::vector<GSample> out;
  out.reserve(histogram.size());
  const double n = static_cast<double>(trials);
  std::uint64_t running = 0;
  for (std::size_t b = 0; b < histogram.size(); ++b) {
    running += histogram[b];
    const double p = trials ? static_cast<double>(running) / n : 0.0;
    out.push_back({ell, static_cast<double>(b + 1) / static_cast<double>(histogram.size()), p,
                   trials ? std::sqrt(p * (1.0 - p) / n) : 0.0});
  }
  return out;
}

}  // namespace

StopRegion StopRegion::optimal(double a) {
  check_positive(a, "a");
  StopRegion r;
  r.kind_ = Kind::optimal;
  r.a_ = a;
  return r;
}

StopRegion StopRegion::constrained(double a, double ell) {
  check_positive(a, "a");
  check_positive(ell, "ell");
  StopRegion r;
  r.kind_ = Kind::constrained;
  r.a_ = a;
  r.ell_ = ell;
  return r;
}

StopRegion StopRegion::discrete(EmbeddedThresholds thresholds) {
  if (thresholds.n == 0 || thresholds.b.size() != thresholds.n) {
    throw std::invalid_argument("StopRegion: thresholds must hold b_0 .. b_{n-1}");
  }
  StopRegion r;
  r.kind_ = Kind::discrete;
  r.thresholds_ = std::make_shared<const EmbeddedThresholds>(std::move(thresholds));
  return r;
}

std::size_t StopRegion::strip_of(double t) const {
  const std::size_t n = strips();
  const auto i = static_cast<std::size_t>(std::max(0.0, t) * static_cast<double>(n)) + 1;
  return std::min(i, n);
}

double StopRegion::boundary(double t) const {
  switch (kind_) {
    case Kind::optimal:
      return t < 1.0 ? -a_ / (1.0 - t) : kNegInf;
    case Kind::constrained:
      return t < 1.0 ? std::max(-a_ / (1.0 - t), -ell_) : -ell_;
    case Kind::discrete: {
      const auto& b = thresholds_->b[thresholds_->n - strip_of(t)];
      return b ? *b : kNegInf;
    }
  }
  return kNegInf;
}

std::vector<Atom> sample_atoms(double depth, RandomStream& rng) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw std::invalid_argument("sample_atoms: depth must be positive");
  }
  std::vector<Atom> atoms;
  fill_atoms(depth, rng, atoms);
  return atoms;
}

std::vector<Atom> record_chain(std::span<const Atom> atoms) {
  std::vector<Atom> chain;
  double best = kNegInf;
  for (const Atom& atom : atoms) {
    if (atom.x > best) {
      best = atom.x;
      chain.push_back(atom);
    }
  }
  return chain;
}

PppTrialOutcome play_region(const StopRegion& region, std::span<const Atom> atoms,
                            std::optional<double> constrain_ell) {
  PppTrialOutcome outcome = region.kind() == StopRegion::Kind::discrete
                                ? play_discrete(region, atoms)
                                : play_continuous(region, atoms);
  if (outcome.won && constrain_ell && !(outcome.stopped_at->x > -*constrain_ell)) {
    outcome.won = false;
  }
  return outcome;
}

PppTrialOutcome run_ppp_trial(const PppSimConfig& config, RandomStream& rng) {
  validate(config);
  std::vector<Atom> atoms;
  fill_atoms(config.depth, rng, atoms);
  return play_region(config.region, atoms, config.constrain_ell);
}

PppSummary PppSummary::empty(std::size_t buckets, const std::vector<double>& g_ells) {
  PppSummary s;
  s.time_histogram.assign(buckets, 0);
  s.g_ells = g_ells;
  s.g_histograms.assign(g_ells.size(), std::vector<std::uint64_t>(buckets, 0));
  return s;
}

void PppSummary::merge(const PppSummary& other) {
  trials += other.trials;
  wins += other.wins;
  atoms += other.atoms;
  for (std::size_t b = 0; b < time_histogram.size(); ++b) {
    time_histogram[b] += other.time_histogram[b];
  }
  for (std::size_t g = 0; g < g_histograms.size(); ++g) {
    for (std::size_t b = 0; b < time_histogram.size(); ++b) {
      g_histograms[g][b] += other.g_histograms[g][b];
    }
  }
  finalize();
}

void PppSummary::finalize() {
  if (trials == 0) {
    win_rate = std_err = 0.0;
    return;
  }
  const double n = static_cast<double>(trials);
  win_rate = static_cast<double>(wins) / n;
  std_err = std::sqrt(win_rate * (1.0 - win_rate) / n);
}

std::vector<GSample> PppSummary::g_unconstrained() const {
  return cumulative(time_histogram, std::numeric_limits<double>::infinity(), trials);
}

std::vector<GSample> PppSummary::g_samples() const {
  std::vector<GSample> out;
  for (std::size_t g = 0; g < g_ells.size(); ++g) {
    const auto rows = cumulative(g_histograms[g], g_ells[g], trials);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

PppSummary simulate_ppp(const PppSimConfig& config) {
  validate(config);
  std::vector<StopRegion> g_regions;
  for (double ell : config.g_ells) {
    g_regions.push_back(StopRegion::constrained(config.region.a(), ell));
  }

  const auto run_chunk = [&](std::uint64_t begin, std::uint64_t end) {
    PppSummary part = PppSummary::empty(config.buckets, config.g_ells);
    std::vector<Atom> atoms;
    for (std::uint64_t trial = begin; trial < end; ++trial) {
      RandomStream rng = RandomStream::for_item(config.seed, trial);
      fill_atoms(config.depth, rng, atoms);
      part.atoms += atoms.size();
      ++part.trials;
      const auto outcome = play_region(config.region, atoms, config.constrain_ell);
      if (outcome.won) {
        ++part.wins;
        ++part.time_histogram[time_bucket(outcome.stop_time, config.buckets)];
      }
      for (std::size_t g = 0; g < g_regions.size(); ++g) {
        const auto constrained = play_region(g_regions[g], atoms, config.g_ells[g]);
        if (constrained.won) {
          ++part.g_histograms[g][time_bucket(constrained.stop_time, config.buckets)];
        }
      }
    }
    part.finalize();
    return part;
  };
  return run_sharded(config.trials, config.chunks, config.threads, run_chunk,
                     PppSummary::empty(config.buckets, config.g_ells));
}

}  // namespace optstop
