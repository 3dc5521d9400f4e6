#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "smallcell/errors.hpp"
#include "smallcell/geometry.hpp"
#include "smallcell/numerics.hpp"
#include "smallcell/power_policy.hpp"
#include "smallcell/speed_classes.hpp"
#include "smallcell/speed_model.hpp"
#include "smallcell/traffic.hpp"

namespace smallcell {

/// Aggregated handover/service-time constants of the metric chain.
/// All are independent of power, speed profile and cell size; they collect
/// the partition, path-loss and arrival-position structure:
///   c_e_ho = (mu/N) r0 sum_n pi_n sum_{m=n..N} phi_|m|^{-beta}
///   c_h_ho = (mu/N) r0 * 2 sum_{n=1..N} phi_n^{-beta}
///   c_b_e  = sum_n pi_n (phi_N - phi_n)      (phi_{-n} = -phi_n)
///   c_b_h  = 2
struct HoConstants {
  double c_e_ho = 0.0;
  double c_h_ho = 0.0;
  double c_b_e = 0.0;
  double c_b_h = 2.0;
};

namespace detail {

/// phi_|m|^{-beta} for m = 1..N.
inline std::vector<double> phi_pow(const CellGeometry& g) {
  std::vector<double> w(g.phi().size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::pow(g.phi()[i], -g.pathloss_beta());
  }
  return w;
}

/// sum_{m=n}^{N} phi_|m|^{-beta} over m in {-N..-1,1..N}, skipping m = 0.
inline double traversal_sum(const std::vector<double>& w, int n, int N) {
  double s = 0.0;
  for (int m = n; m <= N; ++m) {
    if (m == 0) continue;
    s += w[static_cast<std::size_t>(std::abs(m) - 1)];
  }
  return s;
}

}  // namespace detail

inline HoConstants ho_constants(const CellGeometry& geom, const TrafficModel& traffic) {
  const int N = geom.num_regions();
  if (traffic.num_regions() != N) {
    throw ConfigError("ho_constants: traffic pi and geometry disagree on N");
  }
  const auto w = detail::phi_pow(geom);
  const double scale = traffic.mu() / N * geom.r0();

  double full = 0.0;
  for (double x : w) full += x;

  HoConstants c;
  c.c_h_ho = scale * 2.0 * full;
  double eho = 0.0;
  double cbe = 0.0;
  for (int n = -N; n <= N; ++n) {
    if (n == 0) continue;
    const double pin = traffic.pi_at(n);
    eho += pin * detail::traversal_sum(w, n, N);
    cbe += pin * (1.0 - geom.phi_signed(n));
  }
  c.c_e_ho = scale * eho;
  c.c_b_e = cbe;
  c.c_b_h = 2.0;
  return c;
}

/// Probability that a call arriving in region n finishes before the cell
/// boundary (linearized): psi_n = mu*(L/N) * sum_{m=n..N} r_m * E[1/V].
/// The raw value; may exceed 1 outside the approximation regime.
inline double completion_prob_unclamped(int region, const CellGeometry& geom,
                                        double power, const SpeedModel& speed,
                                        double mu) {
  geom.check_region_index(region);
  if (!(power > 0.0)) throw std::invalid_argument("completion_prob: power must be positive");
  if (mu < 0.0) throw std::invalid_argument("completion_prob: mu must be >= 0");
  const int N = geom.num_regions();
  const auto w = detail::phi_pow(geom);
  const double L = geom.half_length();
  const double rate_sum = geom.r0() * power * std::pow(L, -geom.pathloss_beta()) *
                          detail::traversal_sum(w, region, N);
  return mu * L / N * rate_sum * speed.mean_inverse_speed();
}

/// Clamped to [0, 1]; values near or above ~0.3 signal that the surrounding
/// approximations are degrading.
inline double completion_prob(int region, const CellGeometry& geom, double power,
                              const SpeedModel& speed, double mu) {
  return std::clamp(completion_prob_unclamped(region, geom, power, speed, mu), 0.0, 1.0);
}

struct HoProbabilities {
  double p_e_ho = 0.0;  // new call handed over
  double p_h_ho = 0.0;  // handover call handed over again
};

inline HoProbabilities ho_probabilities(const CellGeometry& geom,
                                        const TrafficModel& traffic, double power,
                                        const SpeedModel& speed) {
  const HoConstants c = ho_constants(geom, traffic);
  const double delta = power * std::pow(geom.half_length(), 1.0 - geom.pathloss_beta()) *
                       speed.mean_inverse_speed();
  HoProbabilities p;
  p.p_e_ho = 1.0 - delta * c.c_e_ho;
  p.p_h_ho = 1.0 - (c.c_h_ho * delta - traffic.mu() * traffic.s_h());
  if (p.p_e_ho < 0.0 || p.p_e_ho > 1.0) {
    throw RegimeViolation("ho_probabilities: P_e,ho left [0,1]; configuration is outside "
                          "the approximation regime", p.p_e_ho);
  }
  if (p.p_h_ho < 0.0 || p.p_h_ho > 1.0) {
    throw RegimeViolation("ho_probabilities: P_h,ho left [0,1]; configuration is outside "
                          "the approximation regime", p.p_h_ho);
  }
  return p;
}

struct ServiceTimes {
  double b_e = 0.0;  // seconds, new call
  double b_h = 0.0;  // seconds, handover call (full cell traverse)
};

inline ServiceTimes service_times(const CellGeometry& geom, const TrafficModel& traffic,
                                  const SpeedModel& speed) {
  const HoConstants c = ho_constants(geom, traffic);
  ServiceTimes t;
  t.b_e = c.c_b_e * geom.half_length() * speed.mean_inverse_speed();
  t.b_h = c.c_b_h * geom.half_length() * speed.mean_inverse_speed();
  return t;
}

/// Handover arrival rate lambda_h;L solving the fixed point
/// lambda_h = lambda_L * P_e,ho + lambda_h * P_h,ho.
inline double handover_rate(const CellGeometry& geom, const TrafficModel& traffic,
                            double power, const SpeedModel& speed) {
  const HoConstants c = ho_constants(geom, traffic);
  const double delta = power * std::pow(geom.half_length(), 1.0 - geom.pathloss_beta()) *
                       speed.mean_inverse_speed();
  const double denom = delta * c.c_h_ho - traffic.mu() * traffic.s_h();
  if (!(denom > 0.0)) {
    throw UnsupportableVelocity(
        "handover_rate: P*L^{1-beta}*E[1/V]*C_h,ho - mu*s_h <= 0; the speed profile "
        "exceeds the supportable velocity limit for this power",
        std::numeric_limits<double>::quiet_NaN());
  }
  const double numer = 1.0 - delta * c.c_e_ho;
  if (numer < 0.0) {
    throw RegimeViolation("handover_rate: P_e,ho left [0,1]", numer);
  }
  return traffic.lambda() * geom.half_length() * numer / denom;
}

/// Load factor under a single power P, with delta = P L^{1-beta} E[1/V]:
/// rho = (lambda L^2 E[1/V] / K) (C_b,e + C_b,h (1 - delta C_e,ho)/(delta C_h,ho - mu s_h))
inline double load_factor(const CellGeometry& geom, const TrafficModel& traffic,
                          double power, const SpeedModel& speed) {
  const HoConstants c = ho_constants(geom, traffic);
  const double L = geom.half_length();
  const double einv = speed.mean_inverse_speed();
  const double delta = power * std::pow(L, 1.0 - geom.pathloss_beta()) * einv;
  const double denom = delta * c.c_h_ho - traffic.mu() * traffic.s_h();
  if (!(denom > 0.0)) {
    throw UnsupportableVelocity(
        "load_factor: handover budget unsustainable (denominator <= 0)",
        std::numeric_limits<double>::quiet_NaN());
  }
  const double numer = 1.0 - delta * c.c_e_ho;
  if (numer < 0.0) {
    throw RegimeViolation("load_factor: P_e,ho left [0,1]", numer);
  }
  return traffic.lambda() * L * L * einv / traffic.servers() *
         (c.c_b_e + c.c_b_h * numer / denom);
}

/// Per-class load factor for a discrete power vector (one power per class):
/// rho = (lambda L^2 / K) sum_i p_i Y_i (C_b,e + C_b,h (1 - d_i C_e,ho)/(d_i C_h,ho - mu s_h)),
/// d_i = P_i Y_i L^{1-beta}.
inline double load_factor_classes(const CellGeometry& geom, const TrafficModel& traffic,
                                  const SpeedClasses& classes,
                                  std::span<const double> powers) {
  if (powers.size() != classes.size()) {
    throw std::invalid_argument("load_factor_classes: one power per class required");
  }
  const HoConstants c = ho_constants(geom, traffic);
  const double L = geom.half_length();
  const double lscale = std::pow(L, 1.0 - geom.pathloss_beta());
  const double mush = traffic.mu() * traffic.s_h();
  double sum = 0.0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const double d_i = powers[i] * classes[i].cond_inv_speed * lscale;
    const double denom = d_i * c.c_h_ho - mush;
    if (!(denom > 0.0)) {
      throw UnsupportableVelocity(
          "load_factor_classes: class " + std::to_string(i) +
              " cannot sustain its handover budget at the allocated power",
          1.0 / classes[i].cond_inv_speed);
    }
    sum += classes[i].prob * classes[i].cond_inv_speed *
           (c.c_b_e + c.c_b_h * (1.0 - d_i * c.c_e_ho) / denom);
  }
  return traffic.lambda() * L * L / traffic.servers() * sum;
}

/// Continuum load factor: quadrature of the per-speed integrand against the
/// speed density. For a speed-dependent policy P(.) this is the exact
/// continuum limit of the per-class form.
inline double load_factor_continuous(const CellGeometry& geom, const TrafficModel& traffic,
                                     const PowerPolicy& policy, const SpeedModel& speed,
                                     double rel_tol = 1e-10) {
  const HoConstants c = ho_constants(geom, traffic);
  const double L = geom.half_length();
  const double lpow = std::pow(L, geom.pathloss_beta() - 1.0);
  const double mush = traffic.mu() * traffic.s_h();

  auto denom_at = [&](double v) { return policy.evaluate(v) * c.c_h_ho / (lpow * v) - mush; };

  // Pole screen before integrating: the feasibility margin must stay positive
  // over the whole support.
  const int probes = 2049;
  for (int i = 0; i < probes; ++i) {
    const double v = speed.v_min() + (speed.v_max() - speed.v_min()) * i / (probes - 1);
    if (!(denom_at(v) > 0.0)) {
      throw UnsupportableVelocity(
          "load_factor_continuous: speed " + std::to_string(v) +
              " m/s cannot sustain its handover budget under this policy",
          v);
    }
  }

  auto integrand = [&](double v) {
    const double P = policy.evaluate(v);
    const double num = 1.0 - P * c.c_e_ho / (lpow * v);
    return (c.c_b_e + c.c_b_h * num / denom_at(v)) * speed.pdf(v) / v;
  };

  // Integrate piecewise across class edges when the policy is a step function.
  double integral = 0.0;
  if (policy.kind() == PowerPolicy::Kind::discrete) {
    for (const auto& cls : policy.classes()) {
      const double lo = std::max(cls.v_lo, speed.v_min());
      const double hi = std::min(cls.v_hi, speed.v_max());
      if (lo < hi) integral += numerics::integrate(integrand, lo, hi, rel_tol);
    }
  } else {
    integral = numerics::integrate(integrand, speed.v_min(), speed.v_max(), rel_tol);
  }
  return traffic.lambda() * L * L / traffic.servers() * integral;
}

/// Erlang-B blocking probability via the stable recurrence
/// B_0 = 1, B_k = rho B_{k-1} / (k + rho B_{k-1}); avoids factorial overflow.
inline double erlang_b(double rho, int servers) {
  if (rho < 0.0) throw std::invalid_argument("erlang_b: rho must be >= 0");
  if (servers < 1) throw std::invalid_argument("erlang_b: servers must be >= 1");
  double b = 1.0;
  for (int k = 1; k <= servers; ++k) {
    b = rho * b / (k + rho * b);
  }
  return b;
}

}  // namespace smallcell
