#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "smallcell/errors.hpp"
#include "smallcell/speed_model.hpp"

namespace smallcell {

struct SpeedClass {
  double v_lo = 0.0;
  double v_hi = 0.0;
  double prob = 0.0;            // P(V in class)
  double cond_inv_speed = 0.0;  // E[1/V | V in class]
};

/// Partition of the speed support into ordered, disjoint, covering intervals,
/// with per-class probability and conditional mean inverse speed.
class SpeedClasses {
 public:
  explicit SpeedClasses(std::vector<SpeedClass> classes)
      : classes_(std::move(classes)) {
    if (classes_.empty()) throw ConfigError("SpeedClasses: at least one class required");
    double psum = 0.0;
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      const auto& c = classes_[i];
      if (!(c.v_lo < c.v_hi)) throw ConfigError("SpeedClasses: intervals must be non-empty");
      if (i > 0 && std::abs(classes_[i - 1].v_hi - c.v_lo) > 1e-9) {
        throw ConfigError("SpeedClasses: intervals must be contiguous and ordered");
      }
      if (!(c.prob > 0.0)) throw ConfigError("SpeedClasses: class probabilities must be positive");
      if (i > 0 && !(c.cond_inv_speed < classes_[i - 1].cond_inv_speed)) {
        throw ConfigError("SpeedClasses: conditional inverse speeds must strictly decrease");
      }
      psum += c.prob;
    }
    if (std::abs(psum - 1.0) > 1e-9) throw ConfigError("SpeedClasses: probabilities must sum to 1");
  }

  /// I classes of equal speed width over the model's support.
  static SpeedClasses uniform_partition(const SpeedModel& speed, int count) {
    if (count < 1) throw ConfigError("SpeedClasses: class count must be >= 1");
    std::vector<double> cuts(static_cast<std::size_t>(count - 1));
    const double w = (speed.v_max() - speed.v_min()) / count;
    for (int i = 1; i < count; ++i) cuts[static_cast<std::size_t>(i - 1)] = speed.v_min() + i * w;
    return split_at(speed, cuts);
  }

  /// Classes delimited by interior cut points (ascending, strictly inside the
  /// support).
  static SpeedClasses split_at(const SpeedModel& speed, const std::vector<double>& cuts) {
    std::vector<double> edges;
    edges.push_back(speed.v_min());
    for (double c : cuts) edges.push_back(c);
    edges.push_back(speed.v_max());
    if (!std::is_sorted(edges.begin(), edges.end())) {
      throw ConfigError("SpeedClasses: cut points must be ascending and inside the support");
    }
    std::vector<SpeedClass> cls;
    cls.reserve(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      SpeedClass c;
      c.v_lo = edges[i];
      c.v_hi = edges[i + 1];
      c.prob = speed.interval_prob(c.v_lo, c.v_hi);
      if (!(c.prob > 0.0)) {
        throw ConfigError("SpeedClasses: class [" + std::to_string(c.v_lo) + ", " +
                          std::to_string(c.v_hi) + ") m/s has zero probability");
      }
      c.cond_inv_speed = speed.conditional_mean_inverse(c.v_lo, c.v_hi);
      cls.push_back(c);
    }
    return SpeedClasses(std::move(cls));
  }

  std::size_t size() const noexcept { return classes_.size(); }
  const SpeedClass& operator[](std::size_t i) const { return classes_[i]; }
  auto begin() const noexcept { return classes_.begin(); }
  auto end() const noexcept { return classes_.end(); }

  /// Index of the class containing speed v (edges belong to the lower class,
  /// v_min to class 0). Out-of-support speeds clamp to the nearest class.
  std::size_t class_of(double v) const {
    for (std::size_t i = 0; i + 1 < classes_.size(); ++i) {
      if (v <= classes_[i].v_hi) return i;
    }
    return classes_.size() - 1;
  }

  /// sum_i p_i * Upsilon_i; equals the mixture's E[1/V] by total expectation.
  double mixture_mean_inverse() const {
    double s = 0.0;
    for (const auto& c : classes_) s += c.prob * c.cond_inv_speed;
    return s;
  }

 private:
  std::vector<SpeedClass> classes_;
};

}  // namespace smallcell
