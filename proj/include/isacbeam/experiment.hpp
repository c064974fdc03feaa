#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "isacbeam/config.hpp"
#include "isacbeam/errors.hpp"
#include "isacbeam/model.hpp"
#include "isacbeam/rng.hpp"
#include "isacbeam/solver.hpp"
#include "isacbeam/version.hpp"

namespace isacbeam::experiment {

/// One experiment: which sweep to run, over which grid, how many channel
/// realizations, and where the CSV goes. Defaults reproduce the desk-scale
/// reference setup (16x20 arrays, 4 users, 30 slots, 10 dBm transmit power,
/// 0 dBm noise).
struct ExperimentSpec {
  SystemConfig base;
  std::string mode = "single";  // single | sweep-delta | sweep-k | trace
  std::vector<double> delta_grid;
  std::vector<int> k_grid{2, 4, 6, 8, 10, 12};
  int realizations = 100;
  std::string out_path = "results.csv";
  std::string trace_path;
  InitKind init = InitKind::kMrt;
  int jobs = 1;
};

/// `count` log-spaced points from `lo` to `hi` inclusive, endpoints exact.
inline std::vector<double> logspace(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi > 0.0))
    throw ConfigError("logspace: need count >= 1 and positive endpoints");
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < count; ++i)
    g[i] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline ExperimentSpec default_spec() {
  ExperimentSpec s;
  s.delta_grid = logspace(1e-7, 1e1, 20);
  return s;
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0' || !std::isfinite(v))
    throw ConfigError("bad value for key '" + key + "': " + value);
  return v;
}

inline long parse_long(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError("bad value for key '" + key + "': " + value);
  return v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError("bad value for key '" + key + "': " + value);
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Grid syntax: "lo:hi:20log", "lo:hi:20lin", or a comma list.
inline std::vector<double> parse_delta_grid(const std::string& key, const std::string& value) {
  if (value.find(':') != std::string::npos) {
    const auto parts = split(value, ':');
    if (parts.size() != 3) throw ConfigError("bad grid for key '" + key + "': " + value);
    const double lo = parse_double(key, parts[0]);
    const double hi = parse_double(key, parts[1]);
    std::string tail = parts[2];
    bool log_scale = true;
    if (tail.size() >= 3 && tail.substr(tail.size() - 3) == "log")
      tail = tail.substr(0, tail.size() - 3);
    else if (tail.size() >= 3 && tail.substr(tail.size() - 3) == "lin")
      log_scale = false, tail = tail.substr(0, tail.size() - 3);
    const long n = parse_long(key, tail);
    if (n < 1) throw ConfigError("grid for key '" + key + "' needs >= 1 points");
    if (log_scale) return logspace(lo, hi, static_cast<int>(n));
    std::vector<double> g(n);
    for (long i = 0; i < n; ++i)
      g[i] = (n == 1) ? lo : lo + (hi - lo) * i / (n - 1);
    return g;
  }
  std::vector<double> g;
  for (const auto& p : split(value, ',')) g.push_back(parse_double(key, trim(p)));
  if (g.empty()) throw ConfigError("grid for key '" + key + "' is empty");
  return g;
}

}  // namespace detail

/// Applies one `key = value` setting. Unknown keys and malformed or
/// out-of-range values throw ConfigError naming the key.
///
/// `sigma_c_pending` collects per-user noise entries so a scalar can be
/// broadcast once the final user count is known (see finalize_spec).
inline void apply_setting(ExperimentSpec& spec, std::vector<double>& sigma_c_pending,
                          const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_long;
  auto require = [&](bool ok, const char* what) {
    if (!ok) throw ConfigError("value out of range for key '" + key + "': " + what);
  };
  if (key == "n_tx") {
    spec.base.n_tx = static_cast<int>(parse_long(key, value));
    require(spec.base.n_tx >= 1, "need >= 1");
  } else if (key == "n_rx") {
    spec.base.n_rx = static_cast<int>(parse_long(key, value));
    require(spec.base.n_rx >= 1, "need >= 1");
  } else if (key == "n_users") {
    spec.base.n_users = static_cast<int>(parse_long(key, value));
    require(spec.base.n_users >= 1, "need >= 1");
  } else if (key == "n_slots") {
    spec.base.n_slots = static_cast<int>(parse_long(key, value));
    require(spec.base.n_slots >= 1, "need >= 1");
  } else if (key == "p_tx") {
    spec.base.p_tx = parse_double(key, value);
    require(spec.base.p_tx > 0.0, "need > 0");
  } else if (key == "p_tx_dbm") {
    spec.base.p_tx = dbm_to_mw(parse_double(key, value));
  } else if (key == "sigma_c_sq") {
    sigma_c_pending.clear();
    for (const auto& p : detail::split(value, ',')) {
      const double s = parse_double(key, detail::trim(p));
      require(s > 0.0, "need > 0");
      sigma_c_pending.push_back(s);
    }
    require(!sigma_c_pending.empty(), "need at least one entry");
  } else if (key == "sigma_c_dbm") {
    sigma_c_pending.clear();
    for (const auto& p : detail::split(value, ','))
      sigma_c_pending.push_back(dbm_to_mw(parse_double(key, detail::trim(p))));
  } else if (key == "sigma_s_sq") {
    spec.base.sigma_s_sq = parse_double(key, value);
    require(spec.base.sigma_s_sq > 0.0, "need > 0");
  } else if (key == "sigma_s_dbm") {
    spec.base.sigma_s_sq = dbm_to_mw(parse_double(key, value));
  } else if (key == "delta") {
    spec.base.delta = parse_double(key, value);
    require(spec.base.delta >= 0.0, "need >= 0");
  } else if (key == "alpha_re") {
    spec.base.alpha.real(parse_double(key, value));
  } else if (key == "alpha_im") {
    spec.base.alpha.imag(parse_double(key, value));
  } else if (key == "theta") {
    spec.base.theta = parse_double(key, value);
    require(std::abs(spec.base.theta) <= std::numbers::pi / 2, "need |theta| <= pi/2");
  } else if (key == "outer_tol") {
    spec.base.outer_tol = parse_double(key, value);
    require(spec.base.outer_tol > 0.0, "need > 0");
  } else if (key == "inner_iters") {
    spec.base.inner_iters = static_cast<int>(parse_long(key, value));
    require(spec.base.inner_iters >= 1, "need >= 1");
  } else if (key == "max_outer") {
    spec.base.max_outer = static_cast<int>(parse_long(key, value));
    require(spec.base.max_outer >= 1, "need >= 1");
  } else if (key == "seed") {
    spec.base.seed = detail::parse_u64(key, value);
  } else if (key == "mode") {
    if (value != "single" && value != "sweep-delta" && value != "sweep-k" && value != "trace")
      throw ConfigError("bad value for key 'mode': " + value);
    spec.mode = value;
  } else if (key == "delta_grid") {
    spec.delta_grid = detail::parse_delta_grid(key, value);
    for (double d : spec.delta_grid) require(d >= 0.0, "grid entries need >= 0");
  } else if (key == "k_grid") {
    spec.k_grid.clear();
    for (const auto& p : detail::split(value, ',')) {
      const long k = parse_long(key, detail::trim(p));
      require(k >= 1, "grid entries need >= 1");
      spec.k_grid.push_back(static_cast<int>(k));
    }
    require(!spec.k_grid.empty(), "need at least one entry");
  } else if (key == "realizations") {
    spec.realizations = static_cast<int>(parse_long(key, value));
    require(spec.realizations >= 1, "need >= 1");
  } else if (key == "out") {
    spec.out_path = value;
  } else if (key == "trace") {
    spec.trace_path = value;
  } else if (key == "init") {
    if (value == "mrt")
      spec.init = InitKind::kMrt;
    else if (value == "random")
      spec.init = InitKind::kRandom;
    else
      throw ConfigError("bad value for key 'init': " + value);
  } else if (key == "jobs") {
    spec.jobs = static_cast<int>(parse_long(key, value));
    require(spec.jobs >= 1, "need >= 1");
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

/// Broadcasts pending per-user noise entries and validates the result.
inline void finalize_spec(ExperimentSpec& spec, const std::vector<double>& sigma_c_pending) {
  if (!sigma_c_pending.empty()) {
    if (sigma_c_pending.size() == 1)
      spec.base.sigma_c_sq.assign(spec.base.n_users, sigma_c_pending.front());
    else if (static_cast<int>(sigma_c_pending.size()) == spec.base.n_users)
      spec.base.sigma_c_sq = sigma_c_pending;
    else
      throw ConfigError("sigma_c list length does not match n_users");
  } else {
    spec.base.sigma_c_sq.assign(spec.base.n_users, spec.base.sigma_c_sq.empty()
                                                       ? 1.0
                                                       : spec.base.sigma_c_sq.front());
  }
  try {
    spec.base.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

/// Parses an optional flat key=value file ('#' comments) plus ordered
/// command-line overrides. Later assignments win.
inline ExperimentSpec parse_config(const std::optional<std::string>& file_path,
                                   const std::vector<std::string>& overrides = {}) {
  ExperimentSpec spec = default_spec();
  std::vector<double> sigma_c_pending;

  if (file_path) {
    std::ifstream in(*file_path);
    if (!in) throw IoError("cannot open config file: " + *file_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) + " is not 'key = value'");
      apply_setting(spec, sigma_c_pending, detail::trim(line.substr(0, eq)),
                    detail::trim(line.substr(eq + 1)));
    }
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError("override is not key=value: " + ov);
    apply_setting(spec, sigma_c_pending, detail::trim(ov.substr(0, eq)),
                  detail::trim(ov.substr(eq + 1)));
  }
  finalize_spec(spec, sigma_c_pending);
  return spec;
}

/// One solved (grid point, realization) pair.
struct ResultRow {
  std::string mode;
  std::uint64_t seed = 0;  // per-realization seed (base seed + index)
  int realization = 0;
  double delta = 0.0;
  int k = 0;
  double sum_rate_nats = 0.0;
  double sum_rate_bits = 0.0;
  double crlb_theta = 0.0;
  double trace_f_inv = 0.0;
  double objective = 0.0;
  int outer_iters = 0;
  int total_inner_iters = 0;
  bool converged = false;
  double runtime_ms = 0.0;  // solve wall time only, excludes channel gen and I/O
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  IterationTrace first_trace;  // captured in trace mode
  bool has_trace = false;
};

namespace detail {

struct GridPoint {
  double delta;
  int k;
};

inline std::vector<GridPoint> grid_for(const ExperimentSpec& spec) {
  std::vector<GridPoint> g;
  if (spec.mode == "sweep-delta") {
    for (double d : spec.delta_grid) g.push_back({d, spec.base.n_users});
  } else if (spec.mode == "sweep-k") {
    for (int k : spec.k_grid) g.push_back({spec.base.delta, k});
  } else {
    g.push_back({spec.base.delta, spec.base.n_users});
  }
  return g;
}

}  // namespace detail

/// Runs the experiment grid. Realization r of every grid point uses seed
/// base_seed + r (common random numbers across the grid). Rows come back
/// ordered by (grid point, realization) no matter how many jobs run; a
/// failed solve produces a converged=false row with zeroed metrics and a
/// diagnostic on stderr, never an abort.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const auto grid = detail::grid_for(spec);
  const int realizations = (spec.mode == "trace") ? 1 : spec.realizations;
  const long total = static_cast<long>(grid.size()) * realizations;

  ExperimentResult result;
  result.rows.resize(total);
  std::mutex stderr_mutex;

  auto run_one = [&](long idx) {
    const long gi = idx / realizations;
    const int ri = static_cast<int>(idx % realizations);
    SystemConfig cfg = with_users(spec.base, grid[gi].k);
    cfg.delta = grid[gi].delta;
    cfg.seed = spec.base.seed + static_cast<std::uint64_t>(ri);

    ResultRow row;
    row.mode = spec.mode;
    row.seed = cfg.seed;
    row.realization = ri;
    row.delta = cfg.delta;
    row.k = cfg.n_users;
    try {
      const ChannelSet h = generate_channels(cfg);
      const SensingScene scene = build_scene(cfg);
      SolveResult sol = solve(cfg, h, scene, std::nullopt, spec.init);
      const ObjectiveBreakdown fin = eval_objective(sol.w, h, scene, cfg);
      row.sum_rate_nats = fin.sum_rate;
      row.sum_rate_bits = fin.sum_rate / std::numbers::ln2;
      row.crlb_theta = fin.crlb_theta;
      row.trace_f_inv = fin.trace_f_inv;
      row.objective = fin.objective;
      row.outer_iters = sol.trace.outer_count;
      int inner_total = 0;
      for (int c : sol.trace.inner_counts) inner_total += c;
      row.total_inner_iters = inner_total;
      row.converged = sol.trace.converged;
      row.runtime_ms = sol.trace.wall_time_ms;
      if (spec.mode == "trace" && idx == 0) {
        result.first_trace = std::move(sol.trace);
        result.has_trace = true;
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(stderr_mutex);
      std::cerr << "solve failed (delta=" << cfg.delta << ", k=" << cfg.n_users
                << ", seed=" << cfg.seed << "): " << e.what() << "\n";
    }
    result.rows[idx] = std::move(row);
  };

  const int jobs = static_cast<int>(std::max<long>(1, std::min<long>(spec.jobs, total)));
  if (jobs == 1) {
    for (long i = 0; i < total; ++i) run_one(i);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (long i = next.fetch_add(1); i < total; i = next.fetch_add(1)) run_one(i);
      });
    for (auto& t : pool) t.join();
  }
  return result;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string config_comment(const ExperimentSpec& spec) {
  std::ostringstream os;
  os << "# " << kToolName << " " << kToolVersion << "; generator=" << kGeneratorId
     << "; mode=" << spec.mode << "; n_tx=" << spec.base.n_tx << "; n_rx=" << spec.base.n_rx
     << "; n_users=" << spec.base.n_users << "; n_slots=" << spec.base.n_slots
     << "; p_tx_mw=" << fmt(spec.base.p_tx) << "; sigma_c_sq_mw=";
  for (std::size_t i = 0; i < spec.base.sigma_c_sq.size(); ++i)
    os << (i ? "," : "") << fmt(spec.base.sigma_c_sq[i]);
  os << "; sigma_s_sq_mw=" << fmt(spec.base.sigma_s_sq) << "; delta=" << fmt(spec.base.delta)
     << "; alpha=" << fmt(spec.base.alpha.real()) << "+" << fmt(spec.base.alpha.imag()) << "j"
     << "; theta=" << fmt(spec.base.theta) << "; outer_tol=" << fmt(spec.base.outer_tol)
     << "; inner_iters=" << spec.base.inner_iters << "; max_outer=" << spec.base.max_outer
     << "; seed=" << spec.base.seed << "; realizations="
     << ((spec.mode == "trace") ? 1 : spec.realizations)
     << "; realization_seeds=base+index (shared across grid points)"
     << "; init=" << (spec.init == InitKind::kMrt ? "mrt" : "random");
  if (spec.mode == "sweep-delta") {
    os << "; delta_grid=";
    for (std::size_t i = 0; i < spec.delta_grid.size(); ++i)
      os << (i ? "," : "") << fmt(spec.delta_grid[i]);
  }
  if (spec.mode == "sweep-k") {
    os << "; k_grid=";
    for (std::size_t i = 0; i < spec.k_grid.size(); ++i)
      os << (i ? "," : "") << spec.k_grid[i];
  }
  return os.str();
}

}  // namespace detail

inline constexpr const char* kCsvHeader =
    "mode,seed,realization,delta,k,sum_rate_nats,sum_rate_bits,crlb_theta,"
    "trace_f_inv,objective,outer_iters,total_inner_iters,converged,runtime_ms";

/// CSV layout: one '#' comment line (tool version, generator identity,
/// resolved config), the header, then one line per row. Doubles carry 17
/// significant digits so they parse back bit-exactly.
inline void write_csv(const std::vector<ResultRow>& rows, const std::string& path,
                      const ExperimentSpec& spec) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  out << detail::config_comment(spec) << "\n" << kCsvHeader << "\n";
  for (const auto& r : rows) {
    out << r.mode << ',' << r.seed << ',' << r.realization << ',' << detail::fmt(r.delta)
        << ',' << r.k << ',' << detail::fmt(r.sum_rate_nats) << ','
        << detail::fmt(r.sum_rate_bits) << ',' << detail::fmt(r.crlb_theta) << ','
        << detail::fmt(r.trace_f_inv) << ',' << detail::fmt(r.objective) << ','
        << r.outer_iters << ',' << r.total_inner_iters << ',' << (r.converged ? 1 : 0)
        << ',' << detail::fmt(r.runtime_ms) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

/// Writes the outer-loop curve to `path` (iteration,objective) and the
/// inner-loop curves to a sibling file with "_inner" appended to the stem
/// (outer,inner,subobjective). Indices are zero-based; inner index 0 is
/// the subproblem value entering the inner loop.
inline void emit_trace(const IterationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open trace file: " + path);
  out << "iteration,objective\n";
  for (std::size_t i = 0; i < trace.outer_objectives.size(); ++i)
    out << i << ',' << detail::fmt(trace.outer_objectives[i]) << "\n";
  if (!out) throw IoError("write failed: " + path);

  std::filesystem::path p(path);
  const std::filesystem::path inner_path =
      p.parent_path() / (p.stem().string() + "_inner" + p.extension().string());
  std::ofstream inner(inner_path);
  if (!inner) throw IoError("cannot open trace file: " + inner_path.string());
  inner << "outer,inner,subobjective\n";
  for (std::size_t t = 0; t < trace.inner_objectives.size(); ++t)
    for (std::size_t n = 0; n < trace.inner_objectives[t].size(); ++n)
      inner << t << ',' << n << ',' << detail::fmt(trace.inner_objectives[t][n]) << "\n";
  if (!inner) throw IoError("write failed: " + inner_path.string());
}

}  // namespace isacbeam::experiment
