#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "smallcell/analytic.hpp"
#include "smallcell/errors.hpp"
#include "smallcell/geometry.hpp"
#include "smallcell/power_policy.hpp"
#include "smallcell/speed_model.hpp"
#include "smallcell/traffic.hpp"

namespace smallcell::sim {

/// Time-stepped Monte-Carlo configuration: cars on a ring of towers_n cells
/// (cell spacing 2L, the road past the last tower feeds the first), K-server
/// cells, Poisson arrivals, Exp(mu) jobs, s_h extra bytes per handover, and
/// discrete rate selection from rate_set by received SNR (or SINR).
struct SimConfig {
  CellGeometry geom;
  TrafficModel traffic;
  SpeedModel speed;
  PowerPolicy policy;
  std::vector<double> rate_set;  // strictly decreasing, positive
  int towers_n = 1;
  double dt_delta = 0.01;  // seconds per step
  double warmup_s = 0.0;   // counters start after this
  double horizon_s = 0.0;
  bool interference_enabled = false;
  std::optional<double> sigma2;  // noise variance for the SINR denominator
  std::uint64_t seed = 1;

  SimConfig(CellGeometry g, TrafficModel t, SpeedModel s, PowerPolicy p,
            std::vector<double> rates, int towers, double dt, double warmup,
            double horizon)
      : geom(std::move(g)),
        traffic(std::move(t)),
        speed(std::move(s)),
        policy(std::move(p)),
        rate_set(std::move(rates)),
        towers_n(towers),
        dt_delta(dt),
        warmup_s(warmup),
        horizon_s(horizon) {}

  /// 10% of the horizon or 200 mean cell-traverse times, whichever is larger.
  static double default_warmup(double horizon, const CellGeometry& geom,
                               const SpeedModel& speed) {
    const double mean_service = 2.0 * geom.half_length() * speed.mean_inverse_speed();
    return std::max(0.1 * horizon, 200.0 * mean_service);
  }

  void validate() const {
    if (towers_n < 1) throw ConfigError("SimConfig: towers_n must be >= 1");
    if (!(dt_delta > 0.0)) throw ConfigError("SimConfig: dt_delta must be positive");
    if (!(warmup_s > 0.0) || !(horizon_s > warmup_s)) {
      throw ConfigError("SimConfig: requires horizon_s > warmup_s > 0");
    }
    const double max_step = speed.v_max() * dt_delta;
    const double region_len = geom.half_length() / geom.num_regions();
    if (!(max_step < region_len / 4.0)) {
      throw ConfigError(
          "SimConfig: dt_delta too coarse; a car may skip a rate region in one step "
          "(need v_max * dt < (L/N)/4)");
    }
    if (rate_set.empty()) throw ConfigError("SimConfig: rate_set must be non-empty");
    double prev = std::numeric_limits<double>::infinity();
    for (double r : rate_set) {
      if (!(r > 0.0)) throw ConfigError("SimConfig: rates must be positive");
      if (!(r < prev)) throw ConfigError("SimConfig: rate_set must be strictly decreasing");
      prev = r;
    }
    if (interference_enabled) {
      if (!sigma2 || !(*sigma2 > 0.0)) {
        throw ConfigError("SimConfig: interference requires a positive sigma2");
      }
    }
    if (traffic.num_regions() != geom.num_regions()) {
      throw ConfigError("SimConfig: traffic pi and geometry disagree on N");
    }
    policy.check_positive(speed);
  }
};

struct UserState {
  std::uint64_t id = 0;
  double position = 0.0;        // meters along the ring, in [0, 2L*n)
  double speed = 0.0;           // m/s, frozen for the call's life
  double remaining_bytes = 0.0; // includes any pending handover bytes
  double power = 0.0;           // policy.evaluate(speed), fixed at admission
  int serving_tower = -1;
  int channel = -1;             // server slot in the serving cell; reuse-1 across cells
  bool handover_origin = false; // entered the current cell via handover
  double visit_start = 0.0;
  bool counted = false;         // admitted after warmup (drop cohort member)
  int admit_batch = -1;
  bool dead = false;
};

/// Point estimate with a 95% batch-means confidence half-width. `insufficient`
/// marks metrics whose 30 batches were not all populated.
struct Estimate {
  double value = 0.0;
  double ci_half = std::numeric_limits<double>::quiet_NaN();
  bool insufficient = true;
};

/// Raw post-warmup counters. Blocking counters are arrival-time based;
/// admitted/drops/completions/in-flight describe the cohort of calls admitted
/// after warmup, so admitted = completions + handover_drops + in_flight_at_end
/// holds exactly.
struct SimCounts {
  std::uint64_t new_arrivals = 0;
  std::uint64_t blocked = 0;
  std::uint64_t admitted = 0;
  std::uint64_t handover_attempts = 0;
  std::uint64_t handover_drops = 0;
  std::uint64_t completions = 0;
  std::uint64_t in_flight_at_end = 0;
};

struct MetricsReport {
  Estimate p_busy;   // blocked / new arrivals
  Estimate p_drop;   // cohort drops / cohort admissions
  Estimate p_e_ho;   // new-call cell visits ending in a handover attempt
  Estimate p_h_ho;   // handover-call cell visits ending in another attempt
  Estimate b_e;      // mean new-call time in cell, seconds
  Estimate b_h;      // mean handover-call time in cell, seconds
  SimCounts counts;

  std::string serialize() const {
    char buf[512];
    auto est = [](const Estimate& e) {
      char b[96];
      std::snprintf(b, sizeof b, "%.17g/%.17g/%d", e.value, e.ci_half,
                    e.insufficient ? 1 : 0);
      return std::string(b);
    };
    std::string s;
    s += "p_busy=" + est(p_busy) + " p_drop=" + est(p_drop);
    s += " p_e_ho=" + est(p_e_ho) + " p_h_ho=" + est(p_h_ho);
    s += " b_e=" + est(b_e) + " b_h=" + est(b_h);
    std::snprintf(buf, sizeof buf,
                  " arrivals=%llu blocked=%llu admitted=%llu ho_attempts=%llu "
                  "ho_drops=%llu completions=%llu in_flight=%llu",
                  static_cast<unsigned long long>(counts.new_arrivals),
                  static_cast<unsigned long long>(counts.blocked),
                  static_cast<unsigned long long>(counts.admitted),
                  static_cast<unsigned long long>(counts.handover_attempts),
                  static_cast<unsigned long long>(counts.handover_drops),
                  static_cast<unsigned long long>(counts.completions),
                  static_cast<unsigned long long>(counts.in_flight_at_end));
    s += buf;
    return s;
  }
};

/// Largest rate in the (decreasing) set not exceeding the link quality;
/// 0 when even the smallest rate is unsupported (the server stays busy,
/// no bytes move).
inline double select_rate(double snr_or_sinr, std::span<const double> rate_set) {
  auto it = std::lower_bound(rate_set.begin(), rate_set.end(), snr_or_sinr,
                             [](double rate, double q) { return rate > q; });
  return it == rate_set.end() ? 0.0 : *it;
}

/// Interference and SINR of a tagged in-service user. Cells reuse the same K
/// channels (one per server slot): an in-service user of another cell
/// interferes only when it sits on the tagged user's channel, contributing its
/// serving tower's transmit power attenuated over the tower-to-tagged-user
/// distance. With interference disabled this is the plain SNR.
inline double sinr(const UserState& tagged, std::span<const UserState> others,
                   const SimConfig& cfg) {
  const double two_l = 2.0 * cfg.geom.half_length();
  const double ring = two_l * cfg.towers_n;
  auto ring_dist = [ring](double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, ring - d);
  };
  auto tower_center = [two_l](int t) { return t * two_l + two_l / 2.0; };

  const double own = tagged.power *
                     cfg.geom.attenuation(ring_dist(tagged.position,
                                                    tower_center(tagged.serving_tower)));
  if (!cfg.interference_enabled) return own;

  std::vector<double> tower_power(static_cast<std::size_t>(cfg.towers_n), 0.0);
  for (const auto& u : others) {
    if (u.dead || u.serving_tower < 0 || u.serving_tower == tagged.serving_tower ||
        u.channel != tagged.channel || u.id == tagged.id) {
      continue;
    }
    tower_power[static_cast<std::size_t>(u.serving_tower)] += u.power;
  }
  double interference = 0.0;
  for (int t = 0; t < cfg.towers_n; ++t) {
    if (t == tagged.serving_tower || tower_power[static_cast<std::size_t>(t)] == 0.0) continue;
    interference += tower_power[static_cast<std::size_t>(t)] *
                    cfg.geom.attenuation(ring_dist(tower_center(t), tagged.position));
  }
  return own / (1.0 + interference / *cfg.sigma2);
}

class Simulator {
 public:
  static constexpr int kBatches = 30;

  explicit Simulator(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    two_l_ = 2.0 * cfg_.geom.half_length();
    ring_ = two_l_ * cfg_.towers_n;
    busy_.assign(static_cast<std::size_t>(cfg_.towers_n), 0);
    channel_power_.assign(
        static_cast<std::size_t>(cfg_.towers_n) *
            static_cast<std::size_t>(cfg_.traffic.servers()),
        0.0);
    cell_ho_attempts_.assign(static_cast<std::size_t>(cfg_.towers_n), 0);
    batch_len_ = (cfg_.horizon_s - cfg_.warmup_s) / kBatches;
    b_.arrivals.assign(kBatches, 0);
    b_.blocked.assign(kBatches, 0);
    b_.admitted.assign(kBatches, 0);
    b_.dropped.assign(kBatches, 0);
    b_.new_ends.assign(kBatches, 0);
    b_.new_cross.assign(kBatches, 0);
    b_.ho_ends.assign(kBatches, 0);
    b_.ho_cross.assign(kBatches, 0);
    b_.new_time.assign(kBatches, 0.0);
    b_.ho_time.assign(kBatches, 0.0);
    const double mean_arrivals_per_step =
        cfg_.traffic.lambda() * cfg_.geom.half_length() * cfg_.towers_n * cfg_.dt_delta;
    if (mean_arrivals_per_step > 0.0) {
      poisson_ = std::poisson_distribution<int>(mean_arrivals_per_step);
    }
    total_steps_ = static_cast<std::int64_t>(std::llround(cfg_.horizon_s / cfg_.dt_delta));
  }

  const SimConfig& config() const noexcept { return cfg_; }
  double now() const noexcept { return static_cast<double>(step_index_) * cfg_.dt_delta; }
  const std::vector<UserState>& users() const noexcept { return users_; }
  /// Post-warmup handover attempts entering each cell.
  const std::vector<std::uint64_t>& per_cell_handover_attempts() const noexcept {
    return cell_ho_attempts_;
  }

  /// Test hook: place a user directly (bypasses the arrival process).
  /// `force_serving` overrides the tower derived from the position, e.g. to
  /// stage a user sitting exactly on a boundary with a stale serving cell.
  void inject_user(double position, double speed_mps, double bytes, double power,
                   bool handover_origin = false, int force_serving = -1) {
    UserState u;
    u.id = next_id_++;
    u.position = wrap(position);
    u.speed = speed_mps;
    u.remaining_bytes = bytes;
    u.power = power;
    u.serving_tower = force_serving >= 0 ? force_serving : tower_of(u.position);
    u.handover_origin = handover_origin;
    u.visit_start = now();
    u.counted = false;
    u.admit_batch = -1;
    busy_[static_cast<std::size_t>(u.serving_tower)]++;
    u.channel = assign_channel(u.serving_tower, u.power);
    users_.push_back(u);
  }

  /// One delta step in fixed stage order: spawn, advance, handovers,
  /// service, retirement.
  void step_once(std::ostream* trace = nullptr) {
    const double t = now();
    spawn_arrivals(t, trace);
    advance_positions();
    process_crossings(t, trace);
    serve_users();
    retire_completed(t, trace);
    users_.erase(std::remove_if(users_.begin(), users_.end(),
                                [](const UserState& u) { return u.dead; }),
                 users_.end());
    ++step_index_;
  }

  MetricsReport run(std::ostream* trace = nullptr) {
    while (step_index_ < total_steps_) step_once(trace);
    return report();
  }

  MetricsReport report() const {
    MetricsReport r;
    r.counts = counts_;
    r.counts.in_flight_at_end = 0;
    for (const auto& u : users_) {
      if (!u.dead && u.counted) ++r.counts.in_flight_at_end;
    }
    r.p_busy = ratio_estimate(b_.blocked, b_.arrivals);
    r.p_drop = ratio_estimate(b_.dropped, b_.admitted);
    r.p_e_ho = ratio_estimate(b_.new_cross, b_.new_ends);
    r.p_h_ho = ratio_estimate(b_.ho_cross, b_.ho_ends);
    r.b_e = mean_estimate(b_.new_time, b_.new_ends);
    r.b_h = mean_estimate(b_.ho_time, b_.ho_ends);
    return r;
  }

 private:
  struct Batches {
    std::vector<std::uint64_t> arrivals, blocked;
    std::vector<std::uint64_t> admitted, dropped;
    std::vector<std::uint64_t> new_ends, new_cross, ho_ends, ho_cross;
    std::vector<double> new_time, ho_time;
  };

  double wrap(double pos) const {
    pos = std::fmod(pos, ring_);
    return pos < 0.0 ? pos + ring_ : pos;
  }

  /// Lowest free channel (server slot) of a cell. Every cell reuses the same
  /// K channel indices; in-cell orthogonality is a free channel per user.
  int assign_channel(int cell, double power) {
    const int K = cfg_.traffic.servers();
    double* base = channel_power_.data() + static_cast<std::size_t>(cell) * K;
    for (int k = 0; k < K; ++k) {
      if (base[k] == 0.0) {
        base[k] = power;
        return k;
      }
    }
    throw std::logic_error("assign_channel: no free server slot despite admission");
  }
  void release_channel(int cell, int channel) {
    channel_power_[static_cast<std::size_t>(cell) * cfg_.traffic.servers() +
                   static_cast<std::size_t>(channel)] = 0.0;
  }
  int tower_of(double pos) const {
    int t = static_cast<int>(pos / two_l_);
    return t >= cfg_.towers_n ? cfg_.towers_n - 1 : t;
  }
  double tower_center(int t) const { return t * two_l_ + two_l_ / 2.0; }
  double ring_distance(double a, double b) const {
    const double d = std::abs(a - b);
    return std::min(d, ring_ - d);
  }
  bool warm(double t) const { return t >= cfg_.warmup_s; }
  int batch_of(double t) const {
    if (t < cfg_.warmup_s) return -1;
    const int b = static_cast<int>((t - cfg_.warmup_s) / batch_len_);
    return std::min(b, kBatches - 1);
  }

  void emit(std::ostream* trace, double t, const char* event, std::uint64_t id,
            int cell, double value) const {
    if (!trace) return;
    char line[160];
    std::snprintf(line, sizeof line, "%.6f,%s,%llu,%d,%.6g\n", t, event,
                  static_cast<unsigned long long>(id), cell, value);
    *trace << line;
  }

  void spawn_arrivals(double t, std::ostream* trace) {
    if (!poisson_) return;
    const int k = (*poisson_)(rng_);
    std::uniform_real_distribution<double> upos(0.0, ring_);
    std::exponential_distribution<double> ubytes(cfg_.traffic.mu());
    for (int i = 0; i < k; ++i) {
      const double pos = upos(rng_);
      const double v = cfg_.speed.sample(rng_);
      const double bytes = ubytes(rng_);
      const int cell = tower_of(pos);
      const bool is_warm = warm(t);
      const int batch = batch_of(t);
      if (is_warm) {
        ++counts_.new_arrivals;
        ++b_.arrivals[static_cast<std::size_t>(batch)];
      }
      emit(trace, t, "arrive", next_id_, cell, v);
      if (busy_[static_cast<std::size_t>(cell)] >= cfg_.traffic.servers()) {
        if (is_warm) {
          ++counts_.blocked;
          ++b_.blocked[static_cast<std::size_t>(batch)];
        }
        emit(trace, t, "block", next_id_, cell, v);
        ++next_id_;
        continue;
      }
      UserState u;
      u.id = next_id_++;
      u.position = pos;
      u.speed = v;
      u.remaining_bytes = bytes;
      u.power = cfg_.policy.evaluate(v);
      u.serving_tower = cell;
      u.handover_origin = false;
      u.visit_start = t;
      u.counted = is_warm;
      u.admit_batch = batch;
      if (is_warm) {
        ++counts_.admitted;
        ++b_.admitted[static_cast<std::size_t>(batch)];
      }
      busy_[static_cast<std::size_t>(cell)]++;
      u.channel = assign_channel(cell, u.power);
      users_.push_back(u);
      emit(trace, t, "admit", u.id, cell, bytes);
    }
  }

  void advance_positions() {
    const double dt = cfg_.dt_delta;
    for (auto& u : users_) {
      u.position += u.speed * dt;
      if (u.position >= ring_) u.position -= ring_;
    }
  }

  void record_visit_end(const UserState& u, double t, bool crossed) {
    const int batch = batch_of(t);
    if (batch < 0) return;
    const auto bi = static_cast<std::size_t>(batch);
    const double dur = t - u.visit_start;
    if (u.handover_origin) {
      ++b_.ho_ends[bi];
      if (crossed) ++b_.ho_cross[bi];
      b_.ho_time[bi] += dur;
    } else {
      ++b_.new_ends[bi];
      if (crossed) ++b_.new_cross[bi];
      b_.new_time[bi] += dur;
    }
  }

  void process_crossings(double t, std::ostream* trace) {
    const double s_h = cfg_.traffic.s_h();
    const int K = cfg_.traffic.servers();
    for (auto& u : users_) {
      if (u.dead) continue;
      const int cell = tower_of(u.position);
      if (cell == u.serving_tower) continue;
      record_visit_end(u, t, /*crossed=*/true);
      if (warm(t)) {
        ++counts_.handover_attempts;
        ++cell_ho_attempts_[static_cast<std::size_t>(cell)];
      }
      u.remaining_bytes += s_h;
      busy_[static_cast<std::size_t>(u.serving_tower)]--;
      release_channel(u.serving_tower, u.channel);
      if (busy_[static_cast<std::size_t>(cell)] >= K) {
        if (u.counted) {
          ++counts_.handover_drops;
          ++b_.dropped[static_cast<std::size_t>(u.admit_batch)];
        }
        u.dead = true;
        emit(trace, t, "drop", u.id, cell, u.remaining_bytes);
        continue;
      }
      busy_[static_cast<std::size_t>(cell)]++;
      u.serving_tower = cell;
      u.channel = assign_channel(cell, u.power);
      u.handover_origin = true;
      u.visit_start = t;
      emit(trace, t, "cross", u.id, cell, u.remaining_bytes);
    }
  }

  void serve_users() {
    const double dt = cfg_.dt_delta;
    const bool interf = cfg_.interference_enabled;
    const int K = cfg_.traffic.servers();
    const std::span<const double> rates(cfg_.rate_set);
    for (auto& u : users_) {
      if (u.dead) continue;
      const double d_own = ring_distance(u.position, tower_center(u.serving_tower));
      double quality = u.power * cfg_.geom.attenuation(d_own);
      if (interf) {
        // co-channel interference: at most one user per other cell shares the
        // tagged user's channel
        double interference = 0.0;
        for (int tw = 0; tw < cfg_.towers_n; ++tw) {
          if (tw == u.serving_tower) continue;
          const double p = channel_power_[static_cast<std::size_t>(tw) * K +
                                          static_cast<std::size_t>(u.channel)];
          if (p == 0.0) continue;
          interference += p * cfg_.geom.attenuation(ring_distance(tower_center(tw), u.position));
        }
        quality /= 1.0 + interference / *cfg_.sigma2;
      }
      const double rate = select_rate(quality, rates);
      if (rate > 0.0) u.remaining_bytes -= rate * dt;
    }
  }

  void retire_completed(double t, std::ostream* trace) {
    for (auto& u : users_) {
      if (u.dead || u.remaining_bytes > 0.0) continue;
      record_visit_end(u, t, /*crossed=*/false);
      busy_[static_cast<std::size_t>(u.serving_tower)]--;
      release_channel(u.serving_tower, u.channel);
      if (u.counted) ++counts_.completions;
      u.dead = true;
      emit(trace, t, "complete", u.id, u.serving_tower, u.remaining_bytes);
    }
  }

  template <class Num, class Den>
  static Estimate ratio_or_mean(const Num& num, const Den& den) {
    Estimate e;
    double total_num = 0.0;
    double total_den = 0.0;
    for (std::size_t i = 0; i < den.size(); ++i) {
      total_num += static_cast<double>(num[i]);
      total_den += static_cast<double>(den[i]);
    }
    e.value = total_den > 0.0 ? total_num / total_den : 0.0;
    bool all_populated = true;
    for (auto d : den) {
      if (d == 0) {
        all_populated = false;
        break;
      }
    }
    if (all_populated && den.size() >= 2) {
      double mean = 0.0;
      std::vector<double> r(den.size());
      for (std::size_t i = 0; i < den.size(); ++i) {
        r[i] = static_cast<double>(num[i]) / static_cast<double>(den[i]);
        mean += r[i];
      }
      mean /= static_cast<double>(r.size());
      double var = 0.0;
      for (double x : r) var += (x - mean) * (x - mean);
      var /= static_cast<double>(r.size() - 1);
      e.ci_half = 1.96 * std::sqrt(var / static_cast<double>(r.size()));
      e.insufficient = false;
    }
    return e;
  }

  static Estimate ratio_estimate(const std::vector<std::uint64_t>& num,
                                 const std::vector<std::uint64_t>& den) {
    return ratio_or_mean(num, den);
  }
  static Estimate mean_estimate(const std::vector<double>& sum,
                                const std::vector<std::uint64_t>& den) {
    return ratio_or_mean(sum, den);
  }

  SimConfig cfg_;
  std::mt19937_64 rng_;
  std::optional<std::poisson_distribution<int>> poisson_;
  std::vector<UserState> users_;
  std::vector<int> busy_;
  std::vector<double> channel_power_;  // towers_n x K, 0 marks a free slot
  std::vector<std::uint64_t> cell_ho_attempts_;
  Batches b_;
  SimCounts counts_;
  double two_l_ = 0.0;
  double ring_ = 0.0;
  double batch_len_ = 0.0;
  std::int64_t step_index_ = 0;
  std::int64_t total_steps_ = 0;
  std::uint64_t next_id_ = 0;
};

inline MetricsReport run(const SimConfig& cfg, std::ostream* trace = nullptr) {
  Simulator s(cfg);
  return s.run(trace);
}

struct IntermediateEstimates {
  Estimate p_e_ho, p_h_ho, b_e, b_h;
};

/// Per-cell new-vs-handover classification ratios and visit-time averages,
/// with batch-means confidence intervals.
inline IntermediateEstimates estimate_intermediate(const SimConfig& cfg) {
  const MetricsReport r = run(cfg);
  return {r.p_e_ho, r.p_h_ho, r.b_e, r.b_h};
}

}  // namespace smallcell::sim
