#pragma once

#include <cmath>
#include <string>

#include "smallcell/analytic.hpp"
#include "smallcell/errors.hpp"
#include "smallcell/numerics.hpp"
#include "smallcell/power_opt.hpp"

namespace smallcell {

/// Power boost schedule P_bar = p_tilde * L^{beta+gamma} together with the
/// weight omega_p that prices total transmit power in the joint cost.
struct ScalingSpec {
  double p_tilde = 0.0;
  double gamma = 0.0;
  double omega_p = 0.0;

  void validate() const {
    if (!(p_tilde > 0.0)) throw ConfigError("ScalingSpec: p_tilde must be positive");
    if (!(omega_p >= 0.0)) throw ConfigError("ScalingSpec: omega_p must be >= 0");
  }
};

/// Joint cost of operating cells of half-length L under beta+ scaling and the
/// affine optimal power law:
///   cost(L) = rho*(L; p_tilde L^{beta+gamma}) + omega_p p_tilde L^{beta+gamma-1}.
/// The second term prices total power: cells per unit road scale as 1/L.
inline double joint_cost(double half_length, const CellGeometry& geom_template,
                         const TrafficModel& traffic, const SpeedModel& speed,
                         const ScalingSpec& scaling) {
  scaling.validate();
  const double l_min = geom_template.num_regions() * geom_template.lossless_d0();
  if (!(half_length > l_min)) {
    throw std::invalid_argument("joint_cost: requires L > N * d0 (= " +
                                std::to_string(l_min) + " m)");
  }
  const CellGeometry geom = geom_template.with_half_length(half_length);
  const double p_bar =
      scaling.p_tilde * std::pow(half_length, geom.pathloss_beta() + scaling.gamma);
  const double rho_star = rho_at_optimum(geom, traffic, speed, p_bar);
  return rho_star + scaling.omega_p * scaling.p_tilde *
                        std::pow(half_length, geom.pathloss_beta() + scaling.gamma - 1.0);
}

/// Closed-form optimal half-length for the special case beta = 2, gamma = 1,
/// C_rho,1 > 0 (nested-radical solution of d cost / dL = 0).
inline double optimal_cell_size_closed_form(const CellGeometry& geom_template,
                                            const TrafficModel& traffic,
                                            const SpeedModel& speed,
                                            const ScalingSpec& scaling) {
  scaling.validate();
  if (std::abs(geom_template.pathloss_beta() - 2.0) > 1e-12) {
    throw std::invalid_argument("optimal_cell_size_closed_form: requires beta = 2");
  }
  if (std::abs(scaling.gamma - 1.0) > 1e-12) {
    throw std::invalid_argument("optimal_cell_size_closed_form: requires gamma = 1");
  }
  const HoConstants c = ho_constants(geom_template, traffic);
  const RhoStarConstants rc = rho_star_constants(c, traffic);
  if (!(rc.c_rho_1 > 0.0)) {
    throw std::invalid_argument("optimal_cell_size_closed_form: requires C_rho,1 > 0");
  }
  const double mush_ev = traffic.mu() * traffic.s_h() * speed.mean_speed();
  const double inner = rc.c_rho_2 /
                       (rc.c_rho_1 * speed.mean_inverse_speed() +
                        scaling.omega_p * scaling.p_tilde * traffic.servers() / traffic.lambda());
  return std::sqrt(std::sqrt(mush_ev) / (scaling.p_tilde * c.c_h_ho) *
                   (std::sqrt(inner) + std::sqrt(mush_ev)));
}

struct CellSizeResult {
  double half_length = 0.0;
  double cost = 0.0;
  numerics::BracketEdge edge = numerics::BracketEdge::interior;
  bool at_boundary() const { return edge != numerics::BracketEdge::interior; }
};

/// Golden-section minimization of the joint cost over [bracket_lo, bracket_hi]
/// (defaults: [1.01 N d0, 50 N d0]). A boundary flag is reported instead of
/// asserting global optimality, since unimodality is not guaranteed for
/// general (beta, gamma).
inline CellSizeResult optimal_cell_size_numeric(const CellGeometry& geom_template,
                                                const TrafficModel& traffic,
                                                const SpeedModel& speed,
                                                const ScalingSpec& scaling,
                                                double bracket_lo = -1.0,
                                                double bracket_hi = -1.0) {
  scaling.validate();
  const double l_min = geom_template.num_regions() * geom_template.lossless_d0();
  if (bracket_lo <= 0.0) bracket_lo = 1.01 * l_min;
  if (bracket_hi <= 0.0) bracket_hi = 50.0 * l_min;
  if (!(bracket_lo > l_min) || !(bracket_hi > bracket_lo)) {
    throw std::invalid_argument("optimal_cell_size_numeric: bracket must lie inside (N*d0, inf)");
  }
  auto cost = [&](double L) {
    return joint_cost(L, geom_template, traffic, speed, scaling);
  };
  // Probe the endpoints early so infeasible brackets surface as the domain
  // errors they are rather than as golden-section failures.
  (void)cost(bracket_lo);
  (void)cost(bracket_hi);
  const auto res = numerics::golden_section_minimize(cost, bracket_lo, bracket_hi, 1e-6);
  CellSizeResult out;
  out.half_length = res.arg;
  out.cost = res.value;
  out.edge = res.edge;
  return out;
}

}  // namespace smallcell
