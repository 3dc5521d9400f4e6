#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "smallcell/analytic.hpp"
#include "smallcell/errors.hpp"
#include "smallcell/numerics.hpp"
#include "smallcell/power_policy.hpp"
#include "smallcell/speed_classes.hpp"

namespace smallcell {

/// The (I-1)x(I-1) second-order matrix of the discrete power optimum:
/// M[i][j] = p_i 1{i=j} + p_i p_j / p_I. Positive definiteness certifies the
/// stationary point as the minimizer.
struct PvMatrix {
  std::vector<double> values;  // row-major, dim x dim
  std::size_t dim = 0;
  bool positive_definite = true;

  double at(std::size_t i, std::size_t j) const { return values[i * dim + j]; }
};

inline PvMatrix pv_matrix(std::span<const double> probs) {
  for (double p : probs) {
    if (!(p > 0.0)) throw std::invalid_argument("pv_matrix: class probabilities must be positive");
  }
  PvMatrix m;
  if (probs.size() < 2) {
    m.dim = 0;
    m.positive_definite = true;  // no free coordinates, trivially definite
    return m;
  }
  const std::size_t k = probs.size() - 1;
  const double p_last = probs[probs.size() - 1];
  m.dim = k;
  m.values.resize(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double v = probs[i] * probs[j] / p_last;
      if (i == j) v += probs[i];
      m.values[i * k + j] = v;
    }
  }
  m.positive_definite = numerics::cholesky_positive_definite(m.values, k);
  return m;
}

namespace detail {

/// Feasibility floor: the class load-factor denominator d_i C_h,ho - mu s_h
/// is positive only above this power.
inline double class_power_floor(const HoConstants& c, const TrafficModel& traffic,
                                const CellGeometry& geom, double cond_inv_speed) {
  return traffic.mu() * traffic.s_h() *
         std::pow(geom.half_length(), geom.pathloss_beta() - 1.0) /
         (c.c_h_ho * cond_inv_speed);
}

inline bool all_equal_inv_speeds(const SpeedClasses& classes) {
  for (std::size_t i = 1; i < classes.size(); ++i) {
    if (classes[i].cond_inv_speed != classes[0].cond_inv_speed) return false;
  }
  return true;
}

}  // namespace detail

/// Closed-form per-class optimal powers under the average-power budget:
/// P_i* = p_bar + (mu s_h L^{beta-1} / C_h,ho) (1/Y_i - sum_j p_j / Y_j).
/// The budget binds exactly: sum_i p_i P_i* = p_bar.
///
/// Every resulting power must clear its class feasibility floor by
/// `floor_margin` (the budget is otherwise declared insufficient).
inline std::vector<double> discrete_optimal_power(const CellGeometry& geom,
                                                  const TrafficModel& traffic,
                                                  const SpeedClasses& classes,
                                                  double p_bar,
                                                  double floor_margin = 0.05) {
  if (!(p_bar > 0.0)) throw std::invalid_argument("discrete_optimal_power: p_bar must be positive");
  const HoConstants c = ho_constants(geom, traffic);
  if (!(c.c_h_ho - traffic.mu() * traffic.s_h() * c.c_e_ho > 0.0)) {
    throw ConfigError("discrete_optimal_power: requires C_h,ho - mu*s_h*C_e,ho > 0");
  }
  const std::size_t I = classes.size();
  std::vector<double> powers(I, p_bar);

  // Identical conditional speeds: symmetric objective, equal powers optimal.
  if (!detail::all_equal_inv_speeds(classes)) {
    std::vector<double> probs(I);
    for (std::size_t i = 0; i < I; ++i) probs[i] = classes[i].prob;
    const PvMatrix pv = pv_matrix(probs);
    if (!pv.positive_definite) {
      throw ConfigError("discrete_optimal_power: class-probability matrix is not positive definite");
    }
    double mean_inv_upsilon = 0.0;
    for (const auto& cls : classes) mean_inv_upsilon += cls.prob / cls.cond_inv_speed;
    const double gain = traffic.mu() * traffic.s_h() *
                        std::pow(geom.half_length(), geom.pathloss_beta() - 1.0) /
                        c.c_h_ho;
    for (std::size_t i = 0; i < I; ++i) {
      powers[i] = p_bar + gain * (1.0 / classes[i].cond_inv_speed - mean_inv_upsilon);
    }
  }

  for (std::size_t i = 0; i < I; ++i) {
    const double floor =
        detail::class_power_floor(c, traffic, geom, classes[i].cond_inv_speed);
    if (!(powers[i] > floor * (1.0 + floor_margin))) {
      throw InsufficientPowerBudget(
          "discrete_optimal_power: class " + std::to_string(i) +
          " receives power " + std::to_string(powers[i]) +
          " below its feasibility floor " + std::to_string(floor) +
          " (budget p_bar too small)");
    }
  }
  return powers;
}

/// Continuum optimal power law, affine in speed:
/// P*(v) = p_bar + (mu s_h L^{beta-1} / C_h,ho) (v - E[V]); E[P*(V)] = p_bar.
inline PowerPolicy continuous_optimal_power(const CellGeometry& geom,
                                            const TrafficModel& traffic,
                                            const SpeedModel& speed, double p_bar) {
  if (!(p_bar > 0.0)) throw std::invalid_argument("continuous_optimal_power: p_bar must be positive");
  const HoConstants c = ho_constants(geom, traffic);
  if (!(c.c_e_ho * traffic.mu() * traffic.s_h() < c.c_h_ho)) {
    throw ConfigError("continuous_optimal_power: requires C_e,ho * mu * s_h < C_h,ho");
  }
  const double slope = traffic.mu() * traffic.s_h() *
                       std::pow(geom.half_length(), geom.pathloss_beta() - 1.0) /
                       c.c_h_ho;
  const double at_vmin = p_bar + slope * (speed.v_min() - speed.mean_speed());
  if (!(at_vmin > 0.0)) {
    throw InsufficientPowerBudget(
        "continuous_optimal_power: optimal law is non-positive at v_min (" +
        std::to_string(at_vmin) + "); raise p_bar");
  }
  return PowerPolicy::linear(p_bar, slope, speed.mean_speed());
}

/// Constants of the optimal-policy load factor.
struct RhoStarConstants {
  double c_rho_1 = 0.0;  // C_b,e - C_b,h C_e,ho / C_h,ho
  double c_rho_2 = 0.0;  // C_b,h (1 - mu s_h C_e,ho / C_h,ho)
};

inline RhoStarConstants rho_star_constants(const HoConstants& c, const TrafficModel& traffic) {
  RhoStarConstants r;
  r.c_rho_1 = c.c_b_e - c.c_b_h * c.c_e_ho / c.c_h_ho;
  r.c_rho_2 = c.c_b_h * (1.0 - traffic.mu() * traffic.s_h() * c.c_e_ho / c.c_h_ho);
  return r;
}

/// Load factor achieved by the affine optimal law, in closed form:
/// rho* = (lambda L^2 / K) (C_rho,1 E[1/V] + C_rho,2 / (p_bar L^{1-beta} C_h,ho - E[V] mu s_h)).
inline double rho_at_optimum(const CellGeometry& geom, const TrafficModel& traffic,
                             const SpeedModel& speed, double p_bar) {
  const HoConstants c = ho_constants(geom, traffic);
  const RhoStarConstants rc = rho_star_constants(c, traffic);
  const double L = geom.half_length();
  const double denom = p_bar * std::pow(L, 1.0 - geom.pathloss_beta()) * c.c_h_ho -
                       speed.mean_speed() * traffic.mu() * traffic.s_h();
  if (!(denom > 0.0)) {
    throw UnsupportableVelocity(
        "rho_at_optimum: p_bar L^{1-beta} C_h,ho - E[V] mu s_h <= 0; the speed profile "
        "is not supportable at this power budget",
        speed.mean_speed());
  }
  return traffic.lambda() * L * L / traffic.servers() *
         (rc.c_rho_1 * speed.mean_inverse_speed() + rc.c_rho_2 / denom);
}

/// Highest supportable speed for transmit power P: the speed at which the
/// bytes transferable across the smallest admissible cell (L = N d0) equal
/// the per-handover overhead s_h. Solves g(N d0) = s_h for
/// g(L) = C_h,ho P L^{1-beta} / (mu V). Returns +inf when s_h = 0.
inline double velocity_limit(const CellGeometry& geom, const TrafficModel& traffic,
                             double power) {
  if (!(power > 0.0)) throw std::invalid_argument("velocity_limit: power must be positive");
  if (traffic.s_h() == 0.0) return std::numeric_limits<double>::infinity();
  const HoConstants c = ho_constants(geom, traffic);
  const double l_min = geom.num_regions() * geom.lossless_d0();
  return c.c_h_ho * power * std::pow(l_min, 1.0 - geom.pathloss_beta()) /
         (traffic.mu() * traffic.s_h());
}

namespace detail {

struct GridBest {
  double rho = std::numeric_limits<double>::infinity();
  std::vector<double> powers;
};

/// rho for explicit class powers, returning +inf instead of throwing on
/// infeasible grid points (hot loop of the oracle).
inline double rho_classes_or_inf(const HoConstants& c, const CellGeometry& geom,
                                 const TrafficModel& traffic, const SpeedClasses& classes,
                                 std::span<const double> powers) {
  const double L = geom.half_length();
  const double lscale = std::pow(L, 1.0 - geom.pathloss_beta());
  const double mush = traffic.mu() * traffic.s_h();
  double sum = 0.0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!(powers[i] > 0.0)) return std::numeric_limits<double>::infinity();
    const double d_i = powers[i] * classes[i].cond_inv_speed * lscale;
    const double denom = d_i * c.c_h_ho - mush;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    sum += classes[i].prob * classes[i].cond_inv_speed *
           (c.c_b_e + c.c_b_h * (1.0 - d_i * c.c_e_ho) / denom);
  }
  return traffic.lambda() * L * L / traffic.servers() * sum;
}

}  // namespace detail

/// Exhaustive grid search on the power simplex {sum_i p_i P_i = p_bar},
/// minimizing the per-class load factor. Verification oracle for the
/// closed-form optimum; supports I <= 3.
///
/// I = 2 scans P_1 exhaustively at `resolution`. I = 3 refines hierarchically
/// to the same final resolution; the objective is strictly convex on the
/// feasible simplex (positive-definite Hessian), so coarse-to-fine reaches the
/// global grid cell. Ties break to the lowest-index grid point.
inline std::vector<double> oracle_minimize_discrete(const CellGeometry& geom,
                                                    const TrafficModel& traffic,
                                                    const SpeedClasses& classes,
                                                    double p_bar, double resolution) {
  const std::size_t I = classes.size();
  if (I > 3) {
    throw UnsupportedDimension("oracle_minimize_discrete: grid oracle supports I <= 3");
  }
  if (!(resolution > 0.0)) throw std::invalid_argument("oracle_minimize_discrete: resolution must be positive");
  if (I == 1) return {p_bar};

  const HoConstants c = ho_constants(geom, traffic);
  std::vector<double> floors(I);
  for (std::size_t i = 0; i < I; ++i) {
    floors[i] = detail::class_power_floor(c, traffic, geom, classes[i].cond_inv_speed);
  }

  if (I == 2) {
    const double p1 = classes[0].prob;
    const double p2 = classes[1].prob;
    const double lo = floors[0] * (1.0 + 1e-9);
    const double hi = (p_bar - p2 * floors[1]) / p1;
    if (!(hi > lo)) {
      throw InsufficientPowerBudget("oracle_minimize_discrete: empty feasible simplex");
    }
    detail::GridBest best;
    const auto steps = static_cast<std::size_t>((hi - lo) / resolution);
    std::vector<double> pw(2);
    for (std::size_t k = 0; k <= steps; ++k) {
      pw[0] = lo + static_cast<double>(k) * resolution;
      pw[1] = (p_bar - p1 * pw[0]) / p2;
      const double r = detail::rho_classes_or_inf(c, geom, traffic, classes, pw);
      if (r < best.rho) {
        best.rho = r;
        best.powers = pw;
      }
    }
    if (best.powers.empty()) {
      throw InsufficientPowerBudget("oracle_minimize_discrete: no feasible grid point");
    }
    return best.powers;
  }

  // I == 3: hierarchical refinement over (P_1, P_2).
  const double p1 = classes[0].prob;
  const double p2 = classes[1].prob;
  const double p3 = classes[2].prob;
  double lo1 = floors[0] * (1.0 + 1e-9);
  double hi1 = (p_bar - p2 * floors[1] - p3 * floors[2]) / p1;
  double lo2 = floors[1] * (1.0 + 1e-9);
  double hi2 = (p_bar - p1 * floors[0] - p3 * floors[2]) / p2;
  if (!(hi1 > lo1) || !(hi2 > lo2)) {
    throw InsufficientPowerBudget("oracle_minimize_discrete: empty feasible simplex");
  }
  const double span = std::max(hi1 - lo1, hi2 - lo2);
  double step = span / 64.0;
  if (step < resolution) step = resolution;
  detail::GridBest best;
  std::vector<double> pw(3);
  while (true) {
    for (double P1 = lo1; P1 <= hi1; P1 += step) {
      for (double P2 = lo2; P2 <= hi2; P2 += step) {
        pw[0] = P1;
        pw[1] = P2;
        pw[2] = (p_bar - p1 * P1 - p2 * P2) / p3;
        const double r = detail::rho_classes_or_inf(c, geom, traffic, classes, pw);
        if (r < best.rho) {
          best.rho = r;
          best.powers = pw;
        }
      }
    }
    if (best.powers.empty()) {
      throw InsufficientPowerBudget("oracle_minimize_discrete: no feasible grid point");
    }
    if (step <= resolution) break;
    // shrink around the incumbent; convexity keeps the optimum inside
    const double window = 3.0 * step;
    lo1 = std::max(floors[0] * (1.0 + 1e-9), best.powers[0] - window);
    hi1 = best.powers[0] + window;
    lo2 = std::max(floors[1] * (1.0 + 1e-9), best.powers[1] - window);
    hi2 = best.powers[1] + window;
    step = std::max(step / 8.0, resolution);
  }
  return best.powers;
}

}  // namespace smallcell
