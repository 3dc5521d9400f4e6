#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

#include "smallcell/errors.hpp"

namespace smallcell {

/// Cell geometry of a linear small cell [-L, L] around its tower, partitioned
/// into 2N rate regions by coefficients 0 < phi_1 < ... < phi_N = 1 (mirrored
/// on the negative side, phi_{-n} = -phi_n). Distances below the lossless
/// radius d0 see no propagation loss; beyond it the loss is (d/d0)^{-beta}.
class CellGeometry {
 public:
  CellGeometry(double half_length_m, int num_regions, std::vector<double> phi,
               double lossless_d0_m, double pathloss_beta)
      : half_length_(half_length_m),
        num_regions_(num_regions),
        phi_(std::move(phi)),
        d0_(lossless_d0_m),
        beta_(pathloss_beta) {
    if (num_regions_ < 1) throw ConfigError("CellGeometry: num_regions must be >= 1");
    if (!(d0_ > 0.0)) throw ConfigError("CellGeometry: lossless_d0 must be positive");
    if (!(beta_ > 1.0)) throw ConfigError("CellGeometry: pathloss_beta must exceed 1");
    if (static_cast<int>(phi_.size()) != num_regions_) {
      throw ConfigError("CellGeometry: phi must have num_regions entries");
    }
    double prev = 0.0;
    for (double p : phi_) {
      if (!(p > prev)) throw ConfigError("CellGeometry: phi must be strictly increasing from 0");
      prev = p;
    }
    if (std::abs(phi_.back() - 1.0) > 1e-12) {
      throw ConfigError("CellGeometry: phi_N must equal 1 (outer edge is the cell boundary)");
    }
    phi_.back() = 1.0;
    if (!(half_length_ > num_regions_ * d0_)) {
      throw ConfigError("CellGeometry: requires half_length L > N * d0");
    }
    r0_ = std::pow(d0_, beta_);
    setup_fast_pathloss();
  }

  /// Equal-width partition phi_n = n/N.
  static CellGeometry uniform_partition(double half_length_m, int num_regions,
                                        double lossless_d0_m, double pathloss_beta) {
    std::vector<double> phi(static_cast<std::size_t>(num_regions));
    for (int n = 1; n <= num_regions; ++n) {
      phi[static_cast<std::size_t>(n - 1)] = static_cast<double>(n) / num_regions;
    }
    return CellGeometry(half_length_m, num_regions, std::move(phi), lossless_d0_m,
                        pathloss_beta);
  }

  CellGeometry with_half_length(double half_length_m) const {
    return CellGeometry(half_length_m, num_regions_, phi_, d0_, beta_);
  }

  double half_length() const noexcept { return half_length_; }
  int num_regions() const noexcept { return num_regions_; }
  const std::vector<double>& phi() const noexcept { return phi_; }
  double lossless_d0() const noexcept { return d0_; }
  double pathloss_beta() const noexcept { return beta_; }
  /// Cached d0^beta.
  double r0() const noexcept { return r0_; }

  /// phi_n with sign convention phi_{-n} = -phi_n; n in {-N..-1, 1..N}.
  double phi_signed(int n) const {
    check_region_index(n);
    const double p = phi_[static_cast<std::size_t>(std::abs(n) - 1)];
    return n > 0 ? p : -p;
  }

  void check_region_index(int n) const {
    if (n == 0 || std::abs(n) > num_regions_) {
      throw std::invalid_argument("region index must lie in {-N..-1, 1..N}");
    }
  }

  /// Propagation attenuation: 1 inside the lossless radius, (d/d0)^{-beta}
  /// beyond. Half-integer beta avoids pow() on the simulator hot path.
  double attenuation(double distance_m) const {
    if (distance_m <= d0_) return 1.0;
    const double x = distance_m / d0_;
    if (fast_half_steps_ >= 0) {
      double p = 1.0;
      double xp = x;
      int k = fast_half_steps_ >> 1;
      while (k > 0) {  // x^floor(beta) by repeated multiplication
        if (k & 1) p *= xp;
        xp *= xp;
        k >>= 1;
      }
      if (fast_half_steps_ & 1) p *= std::sqrt(x);
      return 1.0 / p;
    }
    return std::pow(x, -beta_);
  }

 private:
  void setup_fast_pathloss() {
    const double twice = 2.0 * beta_;
    const double rounded = std::round(twice);
    if (std::abs(twice - rounded) < 1e-12 && rounded > 0 && rounded < 64) {
      fast_half_steps_ = static_cast<int>(rounded);
    } else {
      fast_half_steps_ = -1;
    }
  }

  double half_length_;
  int num_regions_;
  std::vector<double> phi_;
  double d0_;
  double beta_;
  double r0_;
  int fast_half_steps_ = -1;  // 2*beta when beta is a half-integer, else -1
};

/// Low-SNR capacity proxy at distance d under transmit power P:
/// P inside the lossless radius, P * r0 * d^{-beta} beyond it.
/// Continuous at d = d0.
inline double capacity_rate(double distance_m, double power,
                            const CellGeometry& geom) {
  if (distance_m < 0.0) throw std::invalid_argument("capacity_rate: distance must be >= 0");
  if (!(power > 0.0)) throw std::invalid_argument("capacity_rate: power must be positive");
  return power * geom.attenuation(distance_m);
}

/// Region rates r_n = r0 * P * L^{-beta} * phi_n^{-beta}, n = 1..N.
/// Strictly decreasing; r_N equals the rate at the cell boundary.
inline std::vector<double> region_rates(const CellGeometry& geom, double power) {
  if (!(power > 0.0)) throw std::invalid_argument("region_rates: power must be positive");
  const double L = geom.half_length();
  std::vector<double> rates(geom.phi().size());
  const double base = geom.r0() * power * std::pow(L, -geom.pathloss_beta());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    rates[i] = base * std::pow(geom.phi()[i], -geom.pathloss_beta());
  }
  return rates;
}

}  // namespace smallcell
