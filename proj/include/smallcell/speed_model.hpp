#pragma once

#include <cmath>
#include <random>
#include <string>

#include "smallcell/errors.hpp"
#include "smallcell/numerics.hpp"

namespace smallcell {

/// Distribution of user speed V on a bounded support [v_min, v_max], m/s.
///
/// Two kinds:
///  - uniform_interval: V ~ U[v_min, v_max]; E[1/V] = ln(v_max/v_min)/(v_max-v_min)
///  - truncated_gaussian: V ~ N(mean, variance) conditioned on [v_min, v_max];
///    sampled by rejection, so draws never leave the support.
class SpeedModel {
 public:
  enum class Kind { uniform_interval, truncated_gaussian };

  static SpeedModel uniform_interval(double v_min, double v_max) {
    SpeedModel s(Kind::uniform_interval, v_min, v_max);
    s.mean_ = 0.5 * (v_min + v_max);
    s.mean_inverse_ = std::log(v_max / v_min) / (v_max - v_min);
    return s;
  }

  static SpeedModel truncated_gaussian(double v_min, double v_max, double mean,
                                       double variance) {
    if (!(variance > 0.0)) throw ConfigError("SpeedModel: variance must be positive");
    SpeedModel s(Kind::truncated_gaussian, v_min, v_max);
    s.g_mean_ = mean;
    s.g_sigma_ = std::sqrt(variance);
    const double a = (v_min - mean) / s.g_sigma_;
    const double b = (v_max - mean) / s.g_sigma_;
    s.trunc_mass_ = std_normal_cdf(b) - std_normal_cdf(a);
    if (!(s.trunc_mass_ > 1e-12)) {
      throw ConfigError("SpeedModel: truncated Gaussian has negligible mass on [v_min, v_max]");
    }
    s.mean_ = mean + s.g_sigma_ * (std_normal_pdf(a) - std_normal_pdf(b)) / s.trunc_mass_;
    s.mean_inverse_ = numerics::integrate(
        [&s](double v) { return s.pdf(v) / v; }, v_min, v_max, 1e-12);
    return s;
  }

  Kind kind() const noexcept { return kind_; }
  double v_min() const noexcept { return v_min_; }
  double v_max() const noexcept { return v_max_; }

  /// E[V]
  double mean_speed() const noexcept { return mean_; }
  /// E[1/V]; always exceeds 1/E[V] for non-degenerate V.
  double mean_inverse_speed() const noexcept { return mean_inverse_; }

  double pdf(double v) const {
    if (v < v_min_ || v > v_max_) return 0.0;
    if (kind_ == Kind::uniform_interval) return 1.0 / (v_max_ - v_min_);
    return std_normal_pdf((v - g_mean_) / g_sigma_) / (g_sigma_ * trunc_mass_);
  }

  /// P(V in [lo, hi]); [lo, hi] is intersected with the support.
  double interval_prob(double lo, double hi) const {
    lo = std::max(lo, v_min_);
    hi = std::min(hi, v_max_);
    if (!(lo < hi)) return 0.0;
    if (kind_ == Kind::uniform_interval) return (hi - lo) / (v_max_ - v_min_);
    return (std_normal_cdf((hi - g_mean_) / g_sigma_) -
            std_normal_cdf((lo - g_mean_) / g_sigma_)) /
           trunc_mass_;
  }

  /// E[1/V | V in [lo, hi]]
  double conditional_mean_inverse(double lo, double hi) const {
    lo = std::max(lo, v_min_);
    hi = std::min(hi, v_max_);
    if (!(lo < hi)) throw std::invalid_argument("conditional_mean_inverse: empty interval");
    if (kind_ == Kind::uniform_interval) return std::log(hi / lo) / (hi - lo);
    const double mass = interval_prob(lo, hi);
    if (!(mass > 0.0)) throw std::invalid_argument("conditional_mean_inverse: zero-probability interval");
    return numerics::integrate([this](double v) { return pdf(v) / v; }, lo, hi,
                               1e-12) /
           mass;
  }

  /// E[V | V in [lo, hi]]
  double conditional_mean(double lo, double hi) const {
    lo = std::max(lo, v_min_);
    hi = std::min(hi, v_max_);
    if (!(lo < hi)) throw std::invalid_argument("conditional_mean: empty interval");
    if (kind_ == Kind::uniform_interval) return 0.5 * (lo + hi);
    const double mass = interval_prob(lo, hi);
    return numerics::integrate([this](double v) { return pdf(v) * v; }, lo, hi,
                               1e-12) /
           mass;
  }

  double sample(std::mt19937_64& rng) const {
    if (kind_ == Kind::uniform_interval) {
      std::uniform_real_distribution<double> u(v_min_, v_max_);
      return u(rng);
    }
    std::normal_distribution<double> g(g_mean_, g_sigma_);
    for (int tries = 0; tries < 1000000; ++tries) {
      const double v = g(rng);
      if (v >= v_min_ && v <= v_max_) return v;
    }
    throw std::runtime_error("SpeedModel: rejection sampling failed to land in support");
  }

  static double std_normal_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
  }
  static double std_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
  }

 private:
  SpeedModel(Kind kind, double v_min, double v_max)
      : kind_(kind), v_min_(v_min), v_max_(v_max) {
    if (!(v_min > 0.0) || !(v_max > v_min) || !std::isfinite(v_max)) {
      throw ConfigError(
          "SpeedModel: requires 0 < v_min < v_max < inf (speeds must stay away from zero)");
    }
  }

  Kind kind_;
  double v_min_;
  double v_max_;
  double mean_ = 0.0;
  double mean_inverse_ = 0.0;
  // truncated-gaussian parameters
  double g_mean_ = 0.0;
  double g_sigma_ = 0.0;
  double trunc_mass_ = 1.0;
};

}  // namespace smallcell
