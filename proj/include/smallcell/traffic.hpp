#pragma once

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "smallcell/errors.hpp"
#include "smallcell/geometry.hpp"

namespace smallcell {

/// Traffic offered to one cell: Poisson new arrivals at rate lambda*L into the
/// cell (lambda is per meter-second under the half-cell convention), job sizes
/// S ~ Exp(mu) bytes, s_h extra bytes per handover, K parallel servers, and an
/// arrival-position distribution pi over regions {-N..-1, 1..N}.
class TrafficModel {
 public:
  TrafficModel(double lambda_per_meter, double mu_per_byte, double handover_bytes,
               int servers, std::vector<double> pi)
      : lambda_(lambda_per_meter),
        mu_(mu_per_byte),
        s_h_(handover_bytes),
        servers_(servers),
        pi_(std::move(pi)) {
    if (!(lambda_ >= 0.0)) throw ConfigError("TrafficModel: lambda must be >= 0");
    if (!(mu_ > 0.0)) throw ConfigError("TrafficModel: mu must be positive");
    if (!(s_h_ >= 0.0)) throw ConfigError("TrafficModel: handover_bytes must be >= 0");
    if (servers_ < 1) throw ConfigError("TrafficModel: servers must be >= 1");
    if (pi_.empty() || pi_.size() % 2 != 0) {
      throw ConfigError("TrafficModel: pi must have 2N entries for regions -N..-1,1..N");
    }
    double sum = 0.0;
    for (double p : pi_) {
      if (!(p >= 0.0)) throw ConfigError("TrafficModel: pi entries must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ConfigError("TrafficModel: pi must sum to 1");
    }
    for (double& p : pi_) p /= sum;
  }

  /// Arrival-position distribution proportional to region length
  /// (the distribution induced by uniform arrival positions).
  static std::vector<double> uniform_position_pi(const CellGeometry& geom) {
    const int N = geom.num_regions();
    std::vector<double> pi(static_cast<std::size_t>(2 * N));
    for (int n = 1; n <= N; ++n) {
      const double lo = (n == 1) ? 0.0 : geom.phi()[static_cast<std::size_t>(n - 2)];
      const double len = geom.phi()[static_cast<std::size_t>(n - 1)] - lo;
      pi[pi_index(n, N)] = len / 2.0;
      pi[pi_index(-n, N)] = len / 2.0;
    }
    return pi;
  }

  double lambda() const noexcept { return lambda_; }
  double mu() const noexcept { return mu_; }
  double s_h() const noexcept { return s_h_; }
  int servers() const noexcept { return servers_; }

  int num_regions() const noexcept { return static_cast<int>(pi_.size()) / 2; }

  /// pi_n for n in {-N..-1, 1..N}.
  double pi_at(int n) const {
    const int N = num_regions();
    if (n == 0 || std::abs(n) > N) {
      throw std::invalid_argument("pi_at: region index must lie in {-N..-1, 1..N}");
    }
    return pi_[pi_index(n, N)];
  }

  const std::vector<double>& pi() const noexcept { return pi_; }

  /// Soft checks on the approximation regime (mu*s_h << 1 is assumed).
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (mu_ * s_h_ > 0.2) {
      w.push_back("mu*s_h = " + std::to_string(mu_ * s_h_) +
                  " is not small; the handover-byte linearization degrades");
    }
    return w;
  }

  static std::size_t pi_index(int n, int N) {
    // storage order: -N..-1 then 1..N
    return static_cast<std::size_t>(n < 0 ? n + N : N + n - 1);
  }

 private:
  double lambda_;
  double mu_;
  double s_h_;
  int servers_;
  std::vector<double> pi_;
};

}  // namespace smallcell
