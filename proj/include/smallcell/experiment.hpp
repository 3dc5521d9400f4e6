#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "smallcell/analytic.hpp"
#include "smallcell/cell_sizing.hpp"
#include "smallcell/config_io.hpp"
#include "smallcell/errors.hpp"
#include "smallcell/power_opt.hpp"
#include "smallcell/simulator.hpp"
#include "smallcell/units.hpp"

namespace smallcell::exp {

inline std::string fmt(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", x);
  return b;
}
inline std::string fmt_u64(std::uint64_t x) {
  char b[32];
  std::snprintf(b, sizeof b, "%llu", static_cast<unsigned long long>(x));
  return b;
}

/// Rows of pre-formatted cells; byte-stable CSV for fixed (spec, seeds).
struct ResultTable {
  std::string mode;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  bool insufficient_data = false;

  std::string to_csv() const {
    std::string s = "# scns-results v1 mode=" + mode + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      s += columns[i];
      s += (i + 1 < columns.size()) ? ',' : '\n';
    }
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        s += row[i];
        s += (i + 1 < row.size()) ? ',' : '\n';
      }
    }
    return s;
  }
};

namespace detail {

struct RepResult {
  sim::MetricsReport report;
};

/// Across-replication mean and 95% normal CI of one metric.
struct Agg {
  double mean = 0.0;
  double ci_half = std::numeric_limits<double>::quiet_NaN();
  bool insufficient = true;
};

inline Agg aggregate(const std::vector<double>& xs) {
  Agg a;
  if (xs.empty()) return a;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  a.mean = m;
  if (xs.size() >= 2) {
    double var = 0.0;
    for (double x : xs) var += (x - m) * (x - m);
    var /= static_cast<double>(xs.size() - 1);
    a.ci_half = 1.96 * std::sqrt(var / static_cast<double>(xs.size()));
    a.insufficient = false;
  }
  return a;
}

inline Agg aggregate_metric(const std::vector<RepResult>& reps,
                            sim::Estimate sim::MetricsReport::*field) {
  std::vector<double> xs;
  xs.reserve(reps.size());
  for (const auto& r : reps) xs.push_back((r.report.*field).value);
  Agg a = aggregate(xs);
  if (reps.size() == 1) {
    // fall back to the single run's batch-means interval
    a.ci_half = (reps[0].report.*field).ci_half;
    a.insufficient = (reps[0].report.*field).insufficient;
  }
  return a;
}

/// Run one simulation per (grid point, replication) pair, optionally on a few
/// threads. Results land in grid-major order regardless of completion order.
template <class MakeConfig>
std::vector<std::vector<RepResult>> run_grid(std::size_t grid_size,
                                             const std::vector<std::uint64_t>& seeds,
                                             MakeConfig&& make_config, int parallel,
                                             std::ostream* trace) {
  const std::size_t reps = seeds.size();
  std::vector<std::vector<RepResult>> out(grid_size, std::vector<RepResult>(reps));
  const std::size_t jobs = grid_size * reps;
  if (parallel <= 1 || jobs <= 1) {
    for (std::size_t g = 0; g < grid_size; ++g) {
      for (std::size_t r = 0; r < reps; ++r) {
        sim::Simulator s(make_config(g, seeds[r]));
        out[g][r].report = s.run(trace);
      }
    }
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs) return;
      try {
        const std::size_t g = j / reps;
        const std::size_t r = j % reps;
        sim::Simulator s(make_config(g, seeds[r]));
        out[g][r].report = s.run(nullptr);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int nthreads = std::min<std::size_t>(static_cast<std::size_t>(parallel), jobs);
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

inline void append_report_cells(std::vector<std::string>& row, const sim::MetricsReport& r) {
  auto add_est = [&row](const sim::Estimate& e) {
    row.push_back(fmt(e.value));
    row.push_back(e.insufficient ? "" : fmt(e.ci_half));
  };
  add_est(r.p_busy);
  add_est(r.p_drop);
  add_est(r.p_e_ho);
  add_est(r.p_h_ho);
  add_est(r.b_e);
  add_est(r.b_h);
  row.push_back(fmt_u64(r.counts.new_arrivals));
  row.push_back(fmt_u64(r.counts.blocked));
  row.push_back(fmt_u64(r.counts.admitted));
  row.push_back(fmt_u64(r.counts.handover_attempts));
  row.push_back(fmt_u64(r.counts.handover_drops));
  row.push_back(fmt_u64(r.counts.completions));
  row.push_back(fmt_u64(r.counts.in_flight_at_end));
}

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "p_busy",  "p_busy_ci", "p_drop",      "p_drop_ci", "p_e_ho",   "p_e_ho_ci",
      "p_h_ho",  "p_h_ho_ci", "b_e_s",       "b_e_ci",    "b_h_s",    "b_h_ci",
      "arrivals", "blocked",  "admitted",    "ho_attempts", "ho_drops", "completions",
      "in_flight"};
  return cols;
}

}  // namespace detail

inline ResultTable run_analytic(const io::ExperimentSpec& spec) {
  ResultTable t;
  t.mode = "analytic";
  t.columns = {"p_bar",    "p_e_ho",  "p_h_ho", "b_e_s",  "b_h_s",
               "lambda_h", "rho",     "p_busy", "v_lim_mps"};
  const PowerPolicy pol = spec.policy.build(spec.geom, spec.traffic, spec.speed);
  const double p_bar = spec.policy.p_bar;
  const auto hp = ho_probabilities(spec.geom, spec.traffic, p_bar, spec.speed);
  const auto st = service_times(spec.geom, spec.traffic, spec.speed);
  const double lam_h = handover_rate(spec.geom, spec.traffic, p_bar, spec.speed);
  const double rho = pol.kind() == PowerPolicy::Kind::equal
                         ? load_factor(spec.geom, spec.traffic, p_bar, spec.speed)
                         : load_factor_continuous(spec.geom, spec.traffic, pol, spec.speed);
  const double pb = erlang_b(rho, spec.traffic.servers());
  const double vlim = velocity_limit(spec.geom, spec.traffic, p_bar);
  t.rows.push_back({fmt(p_bar), fmt(hp.p_e_ho), fmt(hp.p_h_ho), fmt(st.b_e), fmt(st.b_h),
                    fmt(lam_h), fmt(rho), fmt(pb), fmt(vlim)});
  return t;
}

inline ResultTable run_optimize_power(const io::ExperimentSpec& spec) {
  ResultTable t;
  t.mode = "optimize-power";
  t.columns = {"row",  "class", "v_lo_kmph", "v_hi_kmph", "prob",
               "upsilon", "power", "slope",    "rho"};
  const double p_bar = spec.policy.p_bar;
  const auto classes = SpeedClasses::uniform_partition(spec.speed, spec.speed_classes);
  const auto powers = discrete_optimal_power(spec.geom, spec.traffic, classes, p_bar);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    t.rows.push_back({"class", fmt_u64(i), fmt(mps_to_kmph(classes[i].v_lo)),
                      fmt(mps_to_kmph(classes[i].v_hi)), fmt(classes[i].prob),
                      fmt(classes[i].cond_inv_speed), fmt(powers[i]), "", ""});
  }
  const double rho_discrete = load_factor_classes(spec.geom, spec.traffic, classes, powers);
  t.rows.push_back({"rho_discrete", "", "", "", "", "", "", "", fmt(rho_discrete)});
  const PowerPolicy lin = continuous_optimal_power(spec.geom, spec.traffic, spec.speed, p_bar);
  t.rows.push_back({"continuous", "", "", "", "", "", fmt(lin.p_bar()), fmt(lin.slope()), ""});
  const double rho_star = rho_at_optimum(spec.geom, spec.traffic, spec.speed, p_bar);
  t.rows.push_back({"rho_continuous", "", "", "", "", "", "", "", fmt(rho_star)});
  return t;
}

inline ResultTable run_cell_size(const io::ExperimentSpec& spec) {
  ResultTable t;
  t.mode = "cell-size";
  t.columns = {"l_star_m", "cost", "at_boundary", "l_star_closed_form_m", "p_bar_at_l_star"};
  const ScalingSpec& sc = *spec.scaling;
  double lo = -1.0, hi = -1.0;
  if (spec.bracket_m) {
    lo = spec.bracket_m->first;
    hi = spec.bracket_m->second;
  }
  const CellSizeResult r =
      optimal_cell_size_numeric(spec.geom, spec.traffic, spec.speed, sc, lo, hi);
  std::string closed;
  try {
    closed = fmt(optimal_cell_size_closed_form(spec.geom, spec.traffic, spec.speed, sc));
  } catch (const std::invalid_argument&) {
    closed = "";  // closed form needs beta = 2, gamma = 1, C_rho,1 > 0
  }
  const double p_bar_at =
      sc.p_tilde * std::pow(r.half_length, spec.geom.pathloss_beta() + sc.gamma);
  t.rows.push_back({fmt(r.half_length), fmt(r.cost), r.at_boundary() ? "1" : "0", closed,
                    fmt(p_bar_at)});
  return t;
}

inline ResultTable run_simulate(const io::ExperimentSpec& spec, int parallel,
                                std::ostream* trace) {
  ResultTable t;
  t.mode = "simulate";
  t.columns = {"p_bar", "beta", "rep", "seed"};
  for (const auto& c : detail::report_columns()) t.columns.push_back(c);

  const std::vector<double> p_bars =
      spec.p_bars.empty() ? std::vector<double>{spec.policy.p_bar} : spec.p_bars;
  const std::vector<double> betas =
      spec.betas.empty() ? std::vector<double>{spec.geom.pathloss_beta()} : spec.betas;
  struct Point {
    double p_bar, beta;
  };
  std::vector<Point> grid;
  for (double pb : p_bars) {
    for (double be : betas) grid.push_back({pb, be});
  }
  auto results = detail::run_grid(
      grid.size(), spec.seeds,
      [&](std::size_t g, std::uint64_t seed) {
        return spec.make_sim_config(seed, grid[g].p_bar, grid[g].beta, -1.0);
      },
      parallel, trace);

  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t r = 0; r < spec.seeds.size(); ++r) {
      std::vector<std::string> row = {fmt(grid[g].p_bar), fmt(grid[g].beta), fmt_u64(r),
                                      fmt_u64(spec.seeds[r])};
      detail::append_report_cells(row, results[g][r].report);
      t.rows.push_back(std::move(row));
    }
    // aggregate row
    std::vector<std::string> row = {fmt(grid[g].p_bar), fmt(grid[g].beta), "mean", ""};
    auto add_metric = [&](sim::Estimate sim::MetricsReport::*field) {
      const auto a = detail::aggregate_metric(results[g], field);
      row.push_back(fmt(a.mean));
      row.push_back(a.insufficient ? "" : fmt(a.ci_half));
    };
    add_metric(&sim::MetricsReport::p_busy);
    add_metric(&sim::MetricsReport::p_drop);
    add_metric(&sim::MetricsReport::p_e_ho);
    add_metric(&sim::MetricsReport::p_h_ho);
    add_metric(&sim::MetricsReport::b_e);
    add_metric(&sim::MetricsReport::b_h);
    sim::SimCounts sum;
    for (const auto& rr : results[g]) {
      sum.new_arrivals += rr.report.counts.new_arrivals;
      sum.blocked += rr.report.counts.blocked;
      sum.admitted += rr.report.counts.admitted;
      sum.handover_attempts += rr.report.counts.handover_attempts;
      sum.handover_drops += rr.report.counts.handover_drops;
      sum.completions += rr.report.counts.completions;
      sum.in_flight_at_end += rr.report.counts.in_flight_at_end;
    }
    row.push_back(fmt_u64(sum.new_arrivals));
    row.push_back(fmt_u64(sum.blocked));
    row.push_back(fmt_u64(sum.admitted));
    row.push_back(fmt_u64(sum.handover_attempts));
    row.push_back(fmt_u64(sum.handover_drops));
    row.push_back(fmt_u64(sum.completions));
    row.push_back(fmt_u64(sum.in_flight_at_end));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// One aggregate row per alpha; improvement is measured against the alpha = 1
/// (equal power) row as 100 * (baseline P_Drop - variant P_Drop) / baseline.
inline ResultTable run_sweep_alpha(const io::ExperimentSpec& spec, int parallel,
                                   std::ostream* trace) {
  ResultTable t;
  t.mode = "sweep-alpha";
  t.columns = {"alpha",      "p_busy", "p_busy_ci", "p_drop",   "p_drop_ci",
               "improvement_pct", "arrivals", "blocked",  "admitted", "ho_drops"};
  auto results = detail::run_grid(
      spec.alphas.size(), spec.seeds,
      [&](std::size_t g, std::uint64_t seed) {
        return spec.make_sim_config(seed, std::numeric_limits<double>::quiet_NaN(),
                                    std::numeric_limits<double>::quiet_NaN(),
                                    spec.alphas[g]);
      },
      parallel, trace);

  double baseline_p_drop = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t g = 0; g < spec.alphas.size(); ++g) {
    if (spec.alphas[g] == 1.0) {
      baseline_p_drop = detail::aggregate_metric(results[g], &sim::MetricsReport::p_drop).mean;
      break;
    }
  }
  for (std::size_t g = 0; g < spec.alphas.size(); ++g) {
    const auto pb = detail::aggregate_metric(results[g], &sim::MetricsReport::p_busy);
    const auto pd = detail::aggregate_metric(results[g], &sim::MetricsReport::p_drop);
    std::string impr;
    if (!std::isnan(baseline_p_drop) && baseline_p_drop > 0.0) {
      impr = fmt(100.0 * (baseline_p_drop - pd.mean) / baseline_p_drop);
    }
    sim::SimCounts sum;
    for (const auto& rr : results[g]) {
      sum.new_arrivals += rr.report.counts.new_arrivals;
      sum.blocked += rr.report.counts.blocked;
      sum.admitted += rr.report.counts.admitted;
      sum.handover_drops += rr.report.counts.handover_drops;
    }
    t.rows.push_back({fmt(spec.alphas[g]), fmt(pb.mean),
                      pb.insufficient ? "" : fmt(pb.ci_half), fmt(pd.mean),
                      pd.insufficient ? "" : fmt(pd.ci_half), impr,
                      fmt_u64(sum.new_arrivals), fmt_u64(sum.blocked),
                      fmt_u64(sum.admitted), fmt_u64(sum.handover_drops)});
  }
  return t;
}

/// Side-by-side simulated vs closed-form metrics with normalized differences.
inline ResultTable run_validate(const io::ExperimentSpec& spec, int parallel,
                                std::ostream* trace) {
  ResultTable t;
  t.mode = "validate";
  t.columns = {"metric", "simulated", "sim_ci", "theoretical", "normalized_diff_pct"};
  auto results = detail::run_grid(
      1, spec.seeds,
      [&](std::size_t, std::uint64_t seed) {
        return spec.make_sim_config(seed, std::numeric_limits<double>::quiet_NaN(),
                                    std::numeric_limits<double>::quiet_NaN(), -1.0);
      },
      parallel, trace);
  const auto& reps = results[0];

  const double p_bar = spec.policy.p_bar;
  const auto hp = ho_probabilities(spec.geom, spec.traffic, p_bar, spec.speed);
  const auto st = service_times(spec.geom, spec.traffic, spec.speed);
  const double rho = load_factor(spec.geom, spec.traffic, p_bar, spec.speed);
  const double p_busy_theory = erlang_b(rho, spec.traffic.servers());

  bool insufficient = false;
  auto add_row = [&](const char* name, sim::Estimate sim::MetricsReport::*field,
                     double theory, bool has_theory) {
    const auto a = detail::aggregate_metric(reps, field);
    insufficient = insufficient || a.insufficient;
    std::string diff;
    if (has_theory && theory != 0.0) {
      diff = fmt(100.0 * std::abs(a.mean - theory) / std::abs(theory));
    }
    t.rows.push_back({name, fmt(a.mean), a.insufficient ? "" : fmt(a.ci_half),
                      has_theory ? fmt(theory) : "", diff});
  };
  add_row("p_e_ho", &sim::MetricsReport::p_e_ho, hp.p_e_ho, true);
  add_row("p_h_ho", &sim::MetricsReport::p_h_ho, hp.p_h_ho, true);
  add_row("b_e_s", &sim::MetricsReport::b_e, st.b_e, true);
  add_row("b_h_s", &sim::MetricsReport::b_h, st.b_h, true);
  {
    // busy probability has an Erlang-B closed form; drop probability comes
    // from the simulator only
    const auto a = detail::aggregate_metric(reps, &sim::MetricsReport::p_busy);
    std::string diff;
    if (p_busy_theory != 0.0) diff = fmt(100.0 * std::abs(a.mean - p_busy_theory) / p_busy_theory);
    t.rows.push_back({"p_busy", fmt(a.mean), a.insufficient ? "" : fmt(a.ci_half),
                      fmt(p_busy_theory), diff});
    const auto d = detail::aggregate_metric(reps, &sim::MetricsReport::p_drop);
    t.rows.push_back({"p_drop", fmt(d.mean), d.insufficient ? "" : fmt(d.ci_half), "", ""});
  }
  t.insufficient_data = insufficient;
  return t;
}

inline ResultTable run_experiment(const io::ExperimentSpec& spec, int parallel = 1,
                                  std::ostream* trace = nullptr) {
  switch (spec.mode) {
    case io::Mode::analytic: return run_analytic(spec);
    case io::Mode::optimize_power: return run_optimize_power(spec);
    case io::Mode::cell_size: return run_cell_size(spec);
    case io::Mode::simulate: return run_simulate(spec, parallel, trace);
    case io::Mode::sweep_alpha: return run_sweep_alpha(spec, parallel, trace);
    case io::Mode::validate: return run_validate(spec, parallel, trace);
  }
  throw ConfigError("run_experiment: unhandled mode");
}

}  // namespace smallcell::exp
