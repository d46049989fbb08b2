#include "optstop/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "optstop/numerics.hpp"
#include "optstop/rate.hpp"
#include "optstop/sim_finite.hpp"
#include "optstop/sim_ppp.hpp"
#include "optstop/stopping_core.hpp"

namespace optstop {

using json = nlohmann::json;

std::string format_number(double value, int digits) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*g", digits, value);
  return buffer;
}

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  bool json = false;
  std::string out;
  std::string histogram_out;
  int digits = 17;
  bool timing = false;
  std::size_t threads = 0;
  std::size_t chunks = 64;
  std::uint64_t seed = 1;
  std::uint64_t trials = 100000;
};

// JSON numbers may not be infinite; those become null.
json number_or_null(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

class Emitter {
 public:
  Emitter(const Common& common, std::ostream& out) : common_(common), out_(out) {}

  std::string num(double value) const { return format_number(value, common_.digits); }

  void write(const std::string& text, const std::string& path) const {
    if (path.empty()) {
      out_ << text;
      return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file << text;
    file.close();
    if (!file) throw IoError("failed writing '" + path + "'");
  }

  void primary(const std::string& text) const { write(text, common_.out); }

  void document(const std::string& command, json parameters, json results,
                std::optional<std::uint64_t> seed, double wall_seconds) const {
    json doc;
    doc["schema_version"] = kJsonSchemaVersion;
    doc["command"] = command;
    doc["version"] = kVersion;
    doc["parameters"] = std::move(parameters);
    if (seed) doc["seed"] = *seed;
    if (common_.timing) doc["wall_time_s"] = wall_seconds;
    for (auto& [key, value] : results.items()) doc[key] = value;
    primary(doc.dump(2) + "\n");
  }

 private:
  const Common& common_;
  std::ostream& out_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::size_t threads_from_env() {
  if (const char* env = std::getenv("OPTSTOP_THREADS")) {
    try {
      return static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      throw CLI::ValidationError("OPTSTOP_THREADS", "expected a non-negative integer");
    }
  }
  return 0;
}

// ---- constants -----------------------------------------------------------

void cmd_constants(const Common& common, double precision, const Emitter& emit) {
  const auto start = std::chrono::steady_clock::now();
  const Constants k = make_constants(precision);
  const double residual = threshold_objective(k.c) - 1.0;
  const double integrated = p_star_integrated(k.c);
  const double difference = std::fabs(integrated - k.p_star);
  if (common.json) {
    json results = {{"c", k.c},
                    {"exp_neg_c", k.exp_neg_c},
                    {"p_star", k.p_star},
                    {"p_star_integrated", integrated},
                    {"p_star_difference", difference},
                    {"c_residual", residual}};
    emit.document("constants", {{"precision", precision}}, results, std::nullopt,
                  seconds_since(start));
    return;
  }
  std::ostringstream csv;
  csv << "name,value\n";
  csv << "c," << emit.num(k.c) << "\n";
  csv << "exp_neg_c," << emit.num(k.exp_neg_c) << "\n";
  csv << "p_star," << emit.num(k.p_star) << "\n";
  csv << "p_star_integrated," << emit.num(integrated) << "\n";
  csv << "p_star_difference," << emit.num(difference) << "\n";
  csv << "c_residual," << emit.num(residual) << "\n";
  emit.primary(csv.str());
}

// ---- decision-numbers ----------------------------------------------------

void cmd_decision_numbers(const Common& common, std::size_t n, const Emitter& emit) {
  const auto start = std::chrono::steady_clock::now();
  const DecisionTable table = decision_table(n);
  const EmbeddedThresholds b = embedded_thresholds(n, table);
  if (common.json) {
    json d = json::array();
    json gaps = json::array();
    json bs = json::array();
    for (std::size_t k = 0; k <= n; ++k) {
      d.push_back(table.d[k]);
      gaps.push_back(k == 0 ? json(nullptr) : json(static_cast<double>(k) * (1.0 - table.d[k])));
    }
    for (const auto& bk : b.b) bs.push_back(bk ? json(*bk) : json(nullptr));
    emit.document("decision-numbers", {{"n", n}}, {{"d", d}, {"gap", gaps}, {"b", bs}},
                  std::nullopt, seconds_since(start));
    return;
  }
  std::ostringstream csv;
  csv << "k,d,gap,b\n";
  for (std::size_t k = 0; k <= n; ++k) {
    csv << k << "," << emit.num(table.d[k]) << ",";
    if (k > 0) csv << emit.num(static_cast<double>(k) * (1.0 - table.d[k]));
    csv << ",";
    if (k < n && b.b[k]) csv << emit.num(*b.b[k]);
    csv << "\n";
  }
  emit.primary(csv.str());
}

// ---- rate ----------------------------------------------------------------

void cmd_rate(const Common& common, double a, std::size_t grid, const Emitter& emit) {
  const auto start = std::chrono::steady_clock::now();
  const RateCurve curve = rate_curve(a, grid);
  if (common.json) {
    json ts = json::array();
    json ws = json::array();
    for (const auto& p : curve.points) {
      ts.push_back(p.t);
      ws.push_back(p.w);
    }
    emit.document("rate", {{"a", a}, {"grid", grid}}, {{"t", ts}, {"w", ws}}, std::nullopt,
                  seconds_since(start));
    return;
  }
  std::ostringstream csv;
  csv << "t,w\n";
  for (const auto& p : curve.points) csv << emit.num(p.t) << "," << emit.num(p.w) << "\n";
  emit.primary(csv.str());
}

// ---- sim finite ----------------------------------------------------------

struct FiniteFlags {
  std::size_t n = 100;
  bool early_exit = false;
};

FiniteSimConfig finite_config(const Common& common, const FiniteFlags& flags) {
  FiniteSimConfig config;
  config.n = flags.n;
  config.trials = common.trials;
  config.seed = common.seed;
  config.chunks = common.chunks;
  config.threads = common.threads;
  config.sampling = flags.early_exit ? FiniteSampling::early_exit : FiniteSampling::naive;
  return config;
}

json finite_parameters(const Common& common, const FiniteFlags& flags) {
  return {{"n", flags.n},           {"trials", common.trials},
          {"seed", common.seed},    {"chunks", common.chunks},
          {"early_exit", flags.early_exit}};
}

void cmd_sim_finite(const Common& common, const FiniteFlags& flags, const Emitter& emit) {
  const auto start = std::chrono::steady_clock::now();
  const SimSummary s = simulate_finite(finite_config(common, flags));
  const double wall = seconds_since(start);

  const std::size_t bins = s.per_index_wins.size();
  const auto index_range = [&](std::size_t bin) {
    if (s.per_index()) return std::pair{bin + 1, bin + 1};
    return std::pair{(bin * s.n + bins - 1) / bins + 1, ((bin + 1) * s.n + bins - 1) / bins};
  };

  if (!common.histogram_out.empty()) {
    std::ostringstream csv;
    csv << "bin,index_lo,index_hi,wins,stops\n";
    for (std::size_t b = 0; b < bins; ++b) {
      const auto [lo, hi] = index_range(b);
      csv << b << "," << lo << "," << hi << "," << s.per_index_wins[b] << ","
          << s.stop_index_histogram[b] << "\n";
    }
    emit.write(csv.str(), common.histogram_out);
  }
  if (common.json) {
    json results = {{"trials", s.trials},
                    {"wins", s.wins},
                    {"win_rate", s.win_rate},
                    {"std_err", s.std_err},
                    {"per_index", s.per_index()},
                    {"per_index_wins", s.per_index_wins},
                    {"stop_index_histogram", s.stop_index_histogram}};
    emit.document("sim finite", finite_parameters(common, flags), results, common.seed, wall);
    return;
  }
  std::ostringstream csv;
  csv << "kind,n,trials,wins,win_rate,std_err,seed,chunks\n";
  csv << "finite," << s.n << "," << s.trials << "," << s.wins << "," << emit.num(s.win_rate) << ","
      << emit.num(s.std_err) << "," << common.seed << "," << common.chunks << "\n";
  emit.primary(csv.str());
}

// ---- sim ppp -------------------------------------------------------------

struct PppFlags {
  double a = 0.0;  // 0 = use c
  std::optional<double> ell;
  std::size_t discrete_n = 0;
  double depth = 40.0;
  std::size_t buckets = 20;
  std::vector<double> g_ells;
  std::string g_out;
};

void cmd_sim_ppp(const Common& common, const PppFlags& flags, const Emitter& emit) {
  const auto start = std::chrono::steady_clock::now();
  const double a = flags.a > 0.0 ? flags.a : constants().c;
  PppSimConfig config;
  std::string region_name = "optimal";
  if (flags.discrete_n > 0) {
    const auto table = cached_decision_table(flags.discrete_n);
    config.region = StopRegion::discrete(embedded_thresholds(flags.discrete_n, *table));
    region_name = "discrete";
  } else if (flags.ell) {
    config.region = StopRegion::constrained(a, *flags.ell);
    config.constrain_ell = flags.ell;
    region_name = "constrained";
  } else {
    config.region = StopRegion::optimal(a);
  }
  config.depth = flags.depth;
  config.trials = common.trials;
  config.seed = common.seed;
  config.buckets = flags.buckets;
  config.g_ells = flags.g_ells;
  config.chunks = common.chunks;
  config.threads = common.threads;
  const PppSummary s = simulate_ppp(config);
  const double wall = seconds_since(start);

  const double buckets = static_cast<double>(flags.buckets);
  const double trials = static_cast<double>(s.trials);
  if (!common.histogram_out.empty()) {
    std::ostringstream csv;
    csv << "bucket,t_lo,t_hi,wins,w_empirical,std_err\n";
    for (std::size_t b = 0; b < s.time_histogram.size(); ++b) {
      const double p = static_cast<double>(s.time_histogram[b]) / trials;
      csv << b << "," << emit.num(static_cast<double>(b) / buckets) << ","
          << emit.num(static_cast<double>(b + 1) / buckets) << "," << s.time_histogram[b] << ","
          << emit.num(buckets * p) << "," << emit.num(buckets * std::sqrt(p * (1 - p) / trials))
          << "\n";
    }
    emit.write(csv.str(), common.histogram_out);
  }
  auto g_rows = s.g_unconstrained();
  const auto constrained_rows = s.g_samples();
  g_rows.insert(g_rows.end(), constrained_rows.begin(), constrained_rows.end());
  if (!flags.g_out.empty()) {
    std::ostringstream csv;
    csv << "ell,t,estimate,std_err\n";
    for (const auto& g : g_rows) {
      if (std::isfinite(g.ell)) csv << emit.num(g.ell);
      csv << "," << emit.num(g.t) << "," << emit.num(g.estimate) << "," << emit.num(g.std_err)
          << "\n";
    }
    emit.write(csv.str(), flags.g_out);
  }

  json parameters = {{"region", region_name},
                     {"a", a},
                     {"ell", flags.ell ? json(*flags.ell) : json(nullptr)},
                     {"discrete_n", flags.discrete_n},
                     {"depth", flags.depth},
                     {"trials", common.trials},
                     {"buckets", flags.buckets},
                     {"g_ells", flags.g_ells},
                     {"chunks", common.chunks}};
  if (common.json) {
    json g = json::array();
    for (const auto& row : g_rows) {
      g.push_back({{"ell", number_or_null(row.ell)},
                   {"t", row.t},
                   {"estimate", row.estimate},
                   {"std_err", row.std_err}});
    }
    json results = {{"trials", s.trials},     {"wins", s.wins},
                    {"win_rate", s.win_rate}, {"std_err", s.std_err},
                    {"atoms", s.atoms},       {"time_histogram", s.time_histogram},
                    {"g_samples", g}};
    emit.document("sim ppp", parameters, results, common.seed, wall);
    return;
  }
  std::ostringstream csv;
  csv << "kind,region,a,ell,trials,wins,win_rate,std_err,seed,depth\n";
  csv << "ppp," << region_name << "," << emit.num(a) << ","
      << (flags.ell ? emit.num(*flags.ell) : std::string()) << "," << s.trials << "," << s.wins
      << "," << emit.num(s.win_rate) << "," << emit.num(s.std_err) << "," << common.seed << ","
      << emit.num(flags.depth) << "\n";
  emit.primary(csv.str());
}

// ---- compare -------------------------------------------------------------

void cmd_compare(const Common& common, const FiniteFlags& flags, std::size_t buckets, double a,
                 std::ostream& err, const Emitter& emit) {
  const auto start = std::chrono::steady_clock::now();
  const double threshold = a > 0.0 ? a : constants().c;
  const SimSummary s = simulate_finite(finite_config(common, flags));
  const auto rows = compare_with_rate(s, buckets, threshold);
  const double deviation = max_abs_deviation(rows);
  double max_z = 0.0;
  for (const auto& row : rows) max_z = std::max(max_z, std::fabs(row.z));
  const double wall = seconds_since(start);

  if (common.json) {
    json table = json::array();
    for (const auto& row : rows) {
      table.push_back({{"bucket_mid", row.bucket_mid},
                       {"t", row.t},
                       {"w_analytic", row.w_analytic},
                       {"w_empirical", row.w_empirical},
                       {"std_err", row.std_err},
                       {"z", number_or_null(row.z)}});
    }
    json parameters = finite_parameters(common, flags);
    parameters["buckets"] = buckets;
    parameters["a"] = threshold;
    json results = {{"win_rate", s.win_rate},
                    {"std_err", s.std_err},
                    {"max_abs_deviation", deviation},
                    {"max_abs_z", number_or_null(max_z)},
                    {"buckets", table}};
    emit.document("compare", parameters, results, common.seed, wall);
    return;
  }
  std::ostringstream csv;
  csv << "bucket_mid,t,w_analytic,w_empirical,std_err,z\n";
  for (const auto& row : rows) {
    csv << emit.num(row.bucket_mid) << "," << emit.num(row.t) << "," << emit.num(row.w_analytic)
        << "," << emit.num(row.w_empirical) << "," << emit.num(row.std_err) << ","
        << emit.num(row.z) << "\n";
  }
  emit.primary(csv.str());
  err << "# win_rate=" << emit.num(s.win_rate) << " std_err=" << emit.num(s.std_err)
      << " max_abs_deviation=" << emit.num(deviation) << " max_abs_z=" << emit.num(max_z) << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Winning rate of the full-information best-choice problem", "optstop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  app.add_flag("--json", common.json, "Emit a JSON document instead of CSV");
  app.add_option("--out", common.out, "Write the primary output to this file");
  app.add_option("--digits", common.digits, "Significant digits in CSV output")
      ->check(CLI::Range(1, 17));
  app.add_flag("--timing", common.timing, "Include wall time in JSON output");

  const auto add_sim_options = [&](CLI::App* cmd) {
    cmd->add_option("--trials", common.trials, "Number of Monte Carlo trials")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", common.seed, "Base seed");
    cmd->add_option("--chunks", common.chunks, "Shards; results depend on seed only")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
    cmd->add_option("--histogram", common.histogram_out, "Write the win histogram CSV here");
  };

  double precision = 1e-13;
  auto* constants_cmd = app.add_subcommand("constants", "c, e^{-c} and P*");
  constants_cmd->add_option("--precision", precision, "Residual tolerance for c")
      ->check(CLI::Range(1e-13, 1.0));

  std::size_t decision_n = 10;
  auto* decision_cmd = app.add_subcommand("decision-numbers", "d_k, k(1-d_k) and b_k = n log d_k");
  decision_cmd->add_option("--n", decision_n, "Horizon")->required()->check(CLI::Range(1, 1000000));

  double rate_a = 0.0;
  std::size_t rate_grid = 101;
  auto* rate_cmd = app.add_subcommand("rate", "Tabulate the winning rate w(t; a)");
  rate_cmd->add_option("--a", rate_a, "Threshold constant (default c)")->check(CLI::PositiveNumber);
  rate_cmd->add_option("--grid", rate_grid, "Number of grid points")->check(CLI::Range(2, 100000000));

  auto* sim_cmd = app.add_subcommand("sim", "Monte Carlo simulators");
  sim_cmd->require_subcommand(1);

  FiniteFlags finite;
  auto* finite_cmd = sim_cmd->add_subcommand("finite", "Finite-n optimal rule on uniform draws");
  finite_cmd->add_option("--n", finite.n, "Horizon")->check(CLI::Range(1, 100000000));
  finite_cmd->add_flag("--early-exit", finite.early_exit, "Record-skipping sampler");
  add_sim_options(finite_cmd);

  PppFlags ppp;
  auto* ppp_cmd = sim_cmd->add_subcommand("ppp", "Planar Poisson process game");
  ppp_cmd->add_option("--a", ppp.a, "Threshold constant of the region (default c)")
      ->check(CLI::PositiveNumber);
  ppp_cmd->add_option("--ell", ppp.ell, "Constrain region and win to scores above -ell")
      ->check(CLI::PositiveNumber);
  ppp_cmd->add_option("--discrete-n", ppp.discrete_n, "Play the staircase region of horizon n")
      ->check(CLI::PositiveNumber);
  ppp_cmd->add_option("--depth", ppp.depth, "Score-axis truncation depth")
      ->check(CLI::Range(10.0, 1000.0));
  ppp_cmd->add_option("--buckets", ppp.buckets, "Time histogram buckets")
      ->check(CLI::Range(1, 1000000));
  ppp_cmd->add_option("--g-ell", ppp.g_ells, "Depths at which to estimate g(ell, t)")
      ->check(CLI::PositiveNumber);
  ppp_cmd->add_option("--g-out", ppp.g_out, "Write the g(ell, t) CSV here");
  add_sim_options(ppp_cmd);
  ppp_cmd->get_option("--discrete-n")->excludes("--ell");

  FiniteFlags compare;
  compare.n = 1000;
  std::size_t compare_buckets = 20;
  double compare_a = 0.0;
  auto* compare_cmd =
      app.add_subcommand("compare", "Simulated n P(win at i) against w(i/n), bucketed");
  compare_cmd->add_option("--n", compare.n, "Horizon")->check(CLI::Range(10, 100000000));
  compare_cmd->add_option("--buckets", compare_buckets, "Buckets")->check(CLI::Range(1, 100000));
  compare_cmd->add_option("--a", compare_a, "Threshold of the analytic curve (default c)")
      ->check(CLI::PositiveNumber);
  compare_cmd->add_flag("--early-exit", compare.early_exit, "Record-skipping sampler");
  add_sim_options(compare_cmd);

  for (auto* cmd : {constants_cmd, decision_cmd, rate_cmd, sim_cmd, finite_cmd, ppp_cmd, compare_cmd}) {
    cmd->fallthrough();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    common.threads = threads_from_env();
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const Emitter emit(common, out);
    if (*constants_cmd) {
      cmd_constants(common, precision, emit);
    } else if (*decision_cmd) {
      cmd_decision_numbers(common, decision_n, emit);
    } else if (*rate_cmd) {
      cmd_rate(common, rate_a > 0.0 ? rate_a : constants().c, rate_grid, emit);
    } else if (*finite_cmd) {
      cmd_sim_finite(common, finite, emit);
    } else if (*ppp_cmd) {
      cmd_sim_ppp(common, ppp, emit);
    } else if (*compare_cmd) {
      cmd_compare(common, compare, compare_buckets, compare_a, err, emit);
    }
  } catch (const IoError& e) {
    err << "optstop: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "optstop: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "optstop: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace optstop
