#pragma once

// Shared test utilities: an independent quadrature routine, direct-summation
// oracles, and random valid-configuration generators. Oracles here are kept
// separate from the library's own numeric paths.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "smallcell/analytic.hpp"
#include "smallcell/geometry.hpp"
#include "smallcell/speed_model.hpp"
#include "smallcell/traffic.hpp"
#include "smallcell/units.hpp"

namespace test_helpers {

/// Composite Simpson on a fixed fine grid (independent of the library's
/// adaptive integrator).
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int panels = 4096) {
  const double h = (b - a) / (2 * panels);
  double s = f(a) + f(b);
  for (int i = 1; i < 2 * panels; ++i) {
    s += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
  }
  return s * h / 3.0;
}

/// Erlang-B by direct factorial summation (exact for small K).
inline double erlang_b_direct(double rho, int servers) {
  double term = 1.0;  // rho^k / k!
  double sum = 1.0;
  for (int k = 1; k <= servers; ++k) {
    term *= rho / k;
    sum += term;
  }
  return term / sum;
}

struct Config {
  smallcell::CellGeometry geom;
  smallcell::TrafficModel traffic;
  smallcell::SpeedModel speed;
  double p_bar;
};

/// Random configuration with every speed in the support clearing the
/// handover-budget pole under constant power p_bar (margin sampled in
/// [margin_lo, margin_hi]) and both handover probabilities inside [0,1].
inline Config sample_valid_config(std::mt19937_64& rng, double margin_lo = 1.3,
                                  double margin_hi = 3.0) {
  using namespace smallcell;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 200; ++attempt) {
    const double d0 = 5.0 + 10.0 * u01(rng);
    const int N = 2 + static_cast<int>(u01(rng) * 5.0);
    const double L = N * d0 * (1.3 + 2.7 * u01(rng));
    const double beta = 2.0 + 1.5 * u01(rng);
    const double mu = 0.05 + 0.25 * u01(rng);
    double s_h = 0.1 + 0.7 * u01(rng);
    if (mu * s_h > 0.15) s_h = 0.15 / mu;
    const double vmin = kmph_to_mps(15.0 + 25.0 * u01(rng));
    const double vmax = vmin + kmph_to_mps(10.0 + 50.0 * u01(rng));
    const int K = 10 + static_cast<int>(u01(rng) * 50.0);
    const double lambda = 0.001 + 0.049 * u01(rng);

    CellGeometry geom = CellGeometry::uniform_partition(L, N, d0, beta);
    SpeedModel speed = SpeedModel::uniform_interval(vmin, vmax);
    TrafficModel traffic(lambda, mu, s_h, K, TrafficModel::uniform_position_pi(geom));
    const HoConstants c = ho_constants(geom, traffic);

    // constant-power pole floor at the fastest speed
    const double floor = mu * s_h * std::pow(L, beta - 1.0) * vmax / c.c_h_ho;
    const double p_bar = floor * (margin_lo + (margin_hi - margin_lo) * u01(rng));

    const double delta = p_bar * std::pow(L, 1.0 - beta) * speed.mean_inverse_speed();
    const double p_e_ho = 1.0 - delta * c.c_e_ho;
    const double p_h_ho = 1.0 - (delta * c.c_h_ho - mu * s_h);
    if (p_e_ho < 0.02 || p_e_ho > 0.999 || p_h_ho < 0.02 || p_h_ho > 0.999) continue;
    return Config{std::move(geom), std::move(traffic), std::move(speed), p_bar};
  }
  throw std::runtime_error("sample_valid_config: no valid draw in 200 attempts");
}

/// Arrival-position distribution concentrated on inner positive regions,
/// which produces C_rho,1 > 0 (needed by the closed-form optimal cell size).
inline std::vector<double> positive_heavy_pi(int N, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> pi(static_cast<std::size_t>(2 * N), 0.0);
  // regions are stored -N..-1 then 1..N
  const double bulk = 0.85 + 0.1 * u01(rng);
  const std::size_t mid_pos = static_cast<std::size_t>(N + (N >= 2 ? 1 : 0));  // region +2 (or +1)
  pi[mid_pos] = bulk;
  const double rest = (1.0 - bulk) / (2 * N - 1);
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (i != mid_pos) pi[i] = rest;
  }
  return pi;
}

}  // namespace test_helpers
