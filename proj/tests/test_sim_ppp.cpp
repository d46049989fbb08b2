#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "optstop/random.hpp"
#include "optstop/rate.hpp"
#include "optstop/sim_finite.hpp"
#include "optstop/sim_ppp.hpp"
#include "optstop/stopping_core.hpp"

using namespace optstop;

namespace {

PppSimConfig ppp(StopRegion region, std::uint64_t trials, std::uint64_t seed = 3) {
  PppSimConfig c;
  c.region = std::move(region);
  c.trials = trials;
  c.seed = seed;
  return c;
}

std::vector<Atom> random_atoms(std::mt19937_64& gen, std::size_t count) {
  std::uniform_real_distribution<double> t(0.0, 1.0);
  std::uniform_real_distribution<double> x(-5.0, 0.0);
  std::vector<Atom> atoms(count);
  for (auto& a : atoms) a = {t(gen), x(gen)};
  std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.t < r.t; });
  return atoms;
}

}  // namespace

TEST_CASE("sample_atoms: count, window and order") {
  RandomStream rng(17);
  const int samples = 20000;
  double total = 0.0;
  for (int i = 0; i < samples; ++i) {
    const auto atoms = sample_atoms(40.0, rng);
    total += static_cast<double>(atoms.size());
    CHECK_FALSE(atoms.empty());
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      CHECK(atoms[j].t >= 0.0);
      CHECK(atoms[j].t <= 1.0);
      CHECK(atoms[j].x <= 0.0);
      CHECK(atoms[j].x >= -40.0);
      if (j > 0) CHECK(atoms[j - 1].t <= atoms[j].t);
    }
  }
  const double mean = total / samples;
  CHECK(std::fabs(mean - 40.0) < 4.0 * std::sqrt(40.0 / samples));

  CHECK_THROWS(sample_atoms(0.0, rng));
  CHECK(sample_atoms(10.5, rng).size() < 60);
}

TEST_CASE("sample_atoms: the maximum score is exponential") {
  RandomStream rng(23);
  const int samples = 100000;
  const double ells[] = {0.25, 0.5, 1.0, 2.0, 3.0};
  std::vector<int> below(std::size(ells), 0);
  int above_one = 0;
  for (int i = 0; i < samples; ++i) {
    const auto atoms = sample_atoms(40.0, rng);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : atoms) {
      best = std::max(best, a.x);
      if (a.x > -1.0) ++above_one;
    }
    for (std::size_t k = 0; k < std::size(ells); ++k) below[k] += best < -ells[k];
  }
  for (std::size_t k = 0; k < std::size(ells); ++k) {
    const double p = std::exp(-ells[k]);
    CAPTURE(ells[k]);
    CHECK(std::fabs(below[k] / double(samples) - p) < 4.0 * std::sqrt(p * (1 - p) / samples));
  }
  CHECK(std::fabs(above_one / double(samples) - 1.0) < 4.0 / std::sqrt(samples));
}

TEST_CASE("sample_atoms: a deeper sample extends a shallower one") {
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto r40 = RandomStream::for_item(9, i);
    auto r60 = RandomStream::for_item(9, i);
    const auto shallow = sample_atoms(40.0, r40);
    auto deep = sample_atoms(60.0, r60);
    std::erase_if(deep, [](const Atom& a) { return a.x < -40.0; });
    CHECK(deep == shallow);
  }
}

TEST_CASE("record_chain examples") {
  CHECK(record_chain({}).empty());
  const std::vector<Atom> one = {{0.3, -2.0}};
  CHECK(record_chain(one) == one);
  const std::vector<Atom> atoms = {{0.2, -3.0}, {0.5, -1.0}, {0.7, -2.0}};
  const auto chain = record_chain(atoms);
  REQUIRE(chain.size() == 2);
  CHECK(chain[0] == Atom{0.2, -3.0});
  CHECK(chain[1] == Atom{0.5, -1.0});
  CHECK(oracle::records_brute_force(atoms) == chain);
}

TEST_CASE("record_chain matches the brute-force north-west check") {
  std::mt19937_64 gen(29);
  std::uniform_int_distribution<std::size_t> size(0, 100);
  for (int i = 0; i < 2000; ++i) {
    const auto atoms = random_atoms(gen, size(gen));
    const auto chain = record_chain(atoms);
    CHECK(chain == oracle::records_brute_force(atoms));
    if (!atoms.empty()) {
      const auto top = std::max_element(atoms.begin(), atoms.end(),
                                        [](const Atom& l, const Atom& r) { return l.x < r.x; });
      CHECK(chain.back() == *top);
    }
  }
}

TEST_CASE("StopRegion boundaries") {
  const double c = constants().c;
  const auto opt = StopRegion::optimal(c);
  CHECK(opt.boundary(0.0) == doctest::Approx(-c));
  CHECK(opt.boundary(0.5) == doctest::Approx(-2 * c));
  CHECK(opt.boundary(1.0) == -std::numeric_limits<double>::infinity());
  CHECK(opt.contains({0.5, -2 * c}));

  const auto con = StopRegion::constrained(c, 4.0);
  CHECK(con.boundary(0.1) == opt.boundary(0.1));
  CHECK(con.boundary(0.9) == -4.0);
  CHECK(con.boundary(1.0) == -4.0);

  const auto table = decision_table(4);
  const auto disc = StopRegion::discrete(embedded_thresholds(4, table));
  CHECK(disc.strips() == 4);
  CHECK(disc.strip_of(0.0) == 1);
  CHECK(disc.strip_of(0.26) == 2);
  CHECK(disc.strip_of(0.999) == 4);
  CHECK(disc.strip_of(1.0) == 4);
  CHECK(disc.boundary(0.1) == doctest::Approx(4.0 * std::log(table.d[3])));
  CHECK(disc.boundary(0.8) == -std::numeric_limits<double>::infinity());

  CHECK_THROWS(StopRegion::optimal(0.0));
  CHECK_THROWS(StopRegion::constrained(1.0, -1.0));
}

TEST_CASE("play_region on a hand-built fixture") {
  const auto region = StopRegion::optimal(constants().c);
  // (0.1, -5) is a record outside the region; (0.4, -0.5) is the first record inside.
  const std::vector<Atom> beaten = {{0.1, -5.0}, {0.4, -0.5}, {0.6, -0.2}};
  const auto lost = play_region(region, beaten);
  REQUIRE(lost.stopped_at);
  CHECK(*lost.stopped_at == Atom{0.4, -0.5});
  CHECK(lost.stop_time == 0.4);
  CHECK_FALSE(lost.won);

  const std::vector<Atom> held = {{0.1, -5.0}, {0.4, -0.5}, {0.6, -0.7}};
  const auto won = play_region(region, held);
  REQUIRE(won.stopped_at);
  CHECK(*won.stopped_at == Atom{0.4, -0.5});
  CHECK(won.won);
  CHECK_FALSE(play_region(region, held, 0.4).won);
  CHECK(play_region(region, held, 0.6).won);

  const std::vector<Atom> never = {{0.1, -5.0}};
  const auto none = play_region(StopRegion::optimal(1e-9), never);
  CHECK_FALSE(none.stopped_at);
  CHECK_FALSE(none.won);
  CHECK(none.stop_time == 1.0);
}

TEST_CASE("discrete region plays strip maxima") {
  const auto table = decision_table(2);
  const auto region = StopRegion::discrete(embedded_thresholds(2, table));
  // b_1 = 2 log(1/2) = -1.386 on the first strip, everything accepted on the second.
  const std::vector<Atom> atoms = {{0.1, -3.0}, {0.2, -1.0}, {0.3, -2.0}, {0.7, -0.5}};
  const auto out = play_region(region, atoms);
  REQUIRE(out.stopped_at);
  CHECK(*out.stopped_at == Atom{0.2, -1.0});
  CHECK_FALSE(out.won);

  const std::vector<Atom> weak = {{0.1, -3.0}, {0.3, -2.0}, {0.7, -2.5}, {0.8, -2.6}};
  const auto later = play_region(region, weak);
  CHECK_FALSE(later.stopped_at);
  const std::vector<Atom> second = {{0.1, -3.0}, {0.7, -2.9}, {0.8, -2.0}};
  const auto last = play_region(region, second);
  REQUIRE(last.stopped_at);
  CHECK(*last.stopped_at == Atom{0.8, -2.0});
  CHECK(last.won);
}

TEST_CASE("a vanishing region almost never stops") {
  const auto s = simulate_ppp(ppp(StopRegion::optimal(1e-9), 20000));
  CHECK(s.wins <= 2);
}

TEST_CASE("enlarging the region never delays the stop") {
  for (std::uint64_t i = 0; i < 5000; ++i) {
    auto rng = RandomStream::for_item(41, i);
    const auto atoms = sample_atoms(40.0, rng);
    double previous = 2.0;
    for (double a : {0.3, 0.5, 0.8, 1.2, 2.0, 4.0}) {
      const auto out = play_region(StopRegion::optimal(a), atoms);
      CHECK(out.stop_time <= previous);
      previous = out.stop_time;
    }
  }
}

TEST_CASE("truncation at 40 and 60 gives identical outcomes") {
  auto shallow = ppp(StopRegion::optimal(constants().c), 20000, 12);
  auto deep = shallow;
  deep.depth = 60.0;
  for (std::uint64_t i = 0; i < 5000; ++i) {
    auto r40 = RandomStream::for_item(12, i);
    auto r60 = RandomStream::for_item(12, i);
    const auto a = run_ppp_trial(shallow, r40);
    const auto b = run_ppp_trial(deep, r60);
    CHECK(a.won == b.won);
    CHECK(a.stopped_at == b.stopped_at);
  }
  const auto s40 = simulate_ppp(shallow);
  const auto s60 = simulate_ppp(deep);
  CHECK(s40.wins == s60.wins);
  CHECK(s40.time_histogram == s60.time_histogram);
}

TEST_CASE("optimal region: win rate, histogram and determinism") {
  const double c = constants().c;
  auto config = ppp(StopRegion::optimal(c), 200000, 5);
  const auto s = simulate_ppp(config);
  CHECK(std::fabs(s.win_rate - p_star_closed()) < 4.0 * s.std_err);
  CHECK(std::fabs(static_cast<double>(s.atoms) / s.trials - 40.0) < 0.1);

  const auto sum = std::accumulate(s.time_histogram.begin(), s.time_histogram.end(), std::uint64_t{0});
  CHECK(sum == s.wins);
  const double buckets = static_cast<double>(s.time_histogram.size());
  double normalised = 0.0;
  for (auto count : s.time_histogram) normalised += buckets * (count / double(s.trials)) / buckets;
  CHECK(normalised == doctest::Approx(s.win_rate).epsilon(1e-14));

  for (std::size_t b = 0; b < s.time_histogram.size(); ++b) {
    const double lo = b / buckets;
    const double hi = (b + 1) / buckets;
    const double p = s.time_histogram[b] / double(s.trials);
    const double empirical = buckets * p;
    const double se = buckets * std::sqrt(p * (1 - p) / s.trials);
    const double mid = winning_rate(0.5 * (lo + hi), c);
    CAPTURE(b);
    CHECK(std::fabs(empirical - mid) < 4.0 * se);
  }

  config.chunks = 7;
  config.threads = 2;
  const auto again = simulate_ppp(config);
  CHECK(again.wins == s.wins);
  CHECK(again.time_histogram == s.time_histogram);
}

TEST_CASE("histogram agrees with a 101-point rate curve and pins w(0.5)") {
  const double c = constants().c;
  // 21 buckets put the middle one at [10/21, 11/21], centred on t = 0.5.
  auto config = ppp(StopRegion::optimal(c), 200000, 31);
  config.buckets = 21;
  const auto s = simulate_ppp(config);
  const double buckets = 21.0;
  const auto bucket_stats = [&](std::size_t b) {
    const double p = s.time_histogram[b] / double(s.trials);
    return std::pair{buckets * p, buckets * std::sqrt(p * (1 - p) / s.trials)};
  };
  const auto [middle, middle_se] = bucket_stats(10);
  CHECK(std::fabs(middle - 0.61626305519743781) < 3.0 * middle_se);

  // Bucket averages from the tabulated curve: trapezoid on the grid, with the
  // bucket edges linearly interpolated.
  const auto curve = rate_curve(c, 101);
  const auto interpolate = [&](double t) {
    const auto i = std::min<std::size_t>(99, static_cast<std::size_t>(t * 100.0));
    const double frac = t * 100.0 - static_cast<double>(i);
    return curve.points[i].w + frac * (curve.points[i + 1].w - curve.points[i].w);
  };
  for (std::size_t b = 0; b < 21; ++b) {
    const double lo = b / buckets;
    const double hi = (b + 1) / buckets;
    std::vector<double> ts = {lo};
    for (const auto& p : curve.points) {
      if (p.t > lo && p.t < hi) ts.push_back(p.t);
    }
    ts.push_back(hi);
    double area = 0.0;
    for (std::size_t i = 1; i < ts.size(); ++i) {
      area += 0.5 * (interpolate(ts[i]) + interpolate(ts[i - 1])) * (ts[i] - ts[i - 1]);
    }
    const auto [empirical, se] = bucket_stats(b);
    CAPTURE(b);
    CHECK(std::fabs(empirical - area * buckets) < 3.0 * se);
  }
}

TEST_CASE("constrained replay matches the unconstrained rule before 1 - c/ell") {
  const double c = constants().c;
  auto config = ppp(StopRegion::optimal(c), 50000, 8);
  config.g_ells = {1.0, 2.0, 4.0, 8.0};
  const auto s = simulate_ppp(config);
  const auto full = s.g_unconstrained();
  const auto rows = s.g_samples();
  REQUIRE(rows.size() == 4 * full.size());
  for (std::size_t g = 0; g < config.g_ells.size(); ++g) {
    const double ell = config.g_ells[g];
    const double cutoff = std::max(0.0, 1.0 - c / ell);
    for (std::size_t b = 0; b < full.size(); ++b) {
      const auto& row = rows[g * full.size() + b];
      CHECK(row.ell == ell);
      CHECK(row.t == full[b].t);
      CHECK(row.estimate <= full[b].estimate + 1e-15);
      if (row.t <= cutoff) {
        CAPTURE(ell);
        CAPTURE(row.t);
        CHECK(row.estimate == full[b].estimate);
      }
    }
    // g(ell, 1) = P(win, x* > -ell) is strictly below P* for small ell.
    if (ell <= 2.0) CHECK(rows[g * full.size() + full.size() - 1].estimate < full.back().estimate);
  }
  CHECK(full.back().estimate == doctest::Approx(s.win_rate).epsilon(1e-15));

  auto bad = ppp(StopRegion::constrained(c, 2.0), 10);
  bad.g_ells = {2.0};
  CHECK_THROWS(simulate_ppp(bad));
}

TEST_CASE("constrain_ell only removes wins below -ell") {
  const double c = constants().c;
  const auto free = simulate_ppp(ppp(StopRegion::optimal(c), 50000, 4));
  auto config = ppp(StopRegion::optimal(c), 50000, 4);
  config.constrain_ell = 1.0;
  const auto constrained = simulate_ppp(config);
  CHECK(constrained.wins < free.wins);
  for (std::size_t b = 0; b < free.time_histogram.size(); ++b) {
    CHECK(constrained.time_histogram[b] <= free.time_histogram[b]);
  }
}

TEST_CASE("discrete region matches the finite game and is at least the optimal rate") {
  const std::size_t n = 50;
  const auto table = decision_table(n);
  const auto config = ppp(StopRegion::discrete(embedded_thresholds(n, table)), 300000, 19);
  const auto discrete = simulate_ppp(config);
  const auto optimal = simulate_ppp(ppp(StopRegion::optimal(constants().c), 300000, 20));

  FiniteSimConfig fc;
  fc.n = n;
  fc.trials = 300000;
  fc.seed = 21;
  fc.sampling = FiniteSampling::early_exit;
  const auto finite = simulate_finite(fc);

  CHECK(std::fabs(discrete.win_rate - finite.win_rate) <
        4.0 * std::hypot(discrete.std_err, finite.std_err));
  CHECK(discrete.win_rate > optimal.win_rate - 3.0 * std::hypot(discrete.std_err, optimal.std_err));
}

TEST_CASE("configuration validation") {
  auto config = ppp(StopRegion::optimal(1.0), 10);
  config.depth = 5.0;
  CHECK_THROWS(simulate_ppp(config));
  config.depth = 40.0;
  config.buckets = 0;
  CHECK_THROWS(simulate_ppp(config));
  config.buckets = 20;
  config.constrain_ell = -1.0;
  CHECK_THROWS(simulate_ppp(config));
}
