#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "smallcell/errors.hpp"
#include "smallcell/numerics.hpp"
#include "smallcell/speed_classes.hpp"
#include "smallcell/speed_model.hpp"

namespace smallcell {

/// Maps a user's speed (m/s) to its allocated transmit power (normalized).
///
/// Kinds:
///  - equal:      P(v) = p_bar
///  - discrete:   per-class powers over a SpeedClasses partition
///  - linear:     P(v) = p_bar + slope * (v - mean_speed)
///  - alpha_rule: P(v) = alpha * p_bar + p_bar * (1 - alpha) * v / mean_speed
///  - custom:     arbitrary callable (used for policy-family comparisons)
class PowerPolicy {
 public:
  enum class Kind { equal, discrete, linear, alpha_rule, custom };

  static PowerPolicy equal(double p_bar) {
    require_positive(p_bar, "p_bar");
    PowerPolicy p(Kind::equal);
    p.p_bar_ = p_bar;
    return p;
  }

  static PowerPolicy discrete(SpeedClasses classes, std::vector<double> powers) {
    if (classes.size() != powers.size()) {
      throw ConfigError("PowerPolicy: one power per speed class required");
    }
    double p_bar = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
      if (!(powers[i] > 0.0)) {
        throw ConfigError("PowerPolicy: power for class " + std::to_string(i) +
                          " must be positive");
      }
      p_bar += classes[i].prob * powers[i];
    }
    PowerPolicy p(Kind::discrete);
    p.classes_ = std::make_shared<SpeedClasses>(std::move(classes));
    p.powers_ = std::move(powers);
    p.p_bar_ = p_bar;
    return p;
  }

  static PowerPolicy linear(double p_bar, double slope, double mean_speed) {
    require_positive(p_bar, "p_bar");
    require_positive(mean_speed, "mean_speed");
    PowerPolicy p(Kind::linear);
    p.p_bar_ = p_bar;
    p.slope_ = slope;
    p.mean_speed_ = mean_speed;
    return p;
  }

  static PowerPolicy alpha_rule(double p_bar, double alpha, double mean_speed) {
    require_positive(p_bar, "p_bar");
    require_positive(mean_speed, "mean_speed");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("PowerPolicy: alpha must lie in [0, 1]");
    PowerPolicy p(Kind::alpha_rule);
    p.p_bar_ = p_bar;
    p.alpha_ = alpha;
    p.mean_speed_ = mean_speed;
    return p;
  }

  static PowerPolicy custom(std::string label, std::function<double(double)> fn) {
    PowerPolicy p(Kind::custom);
    p.label_ = std::move(label);
    p.custom_ = std::move(fn);
    return p;
  }

  double evaluate(double v) const {
    switch (kind_) {
      case Kind::equal:
        return p_bar_;
      case Kind::discrete:
        return powers_[classes_->class_of(v)];
      case Kind::linear:
        return p_bar_ + slope_ * (v - mean_speed_);
      case Kind::alpha_rule:
        return alpha_ * p_bar_ + p_bar_ * (1.0 - alpha_) * (v / mean_speed_);
      case Kind::custom:
        return custom_(v);
    }
    return p_bar_;
  }

  /// E[P(V)] under the given speed model. Exact for equal/discrete/affine
  /// kinds; quadrature for custom.
  double average_power(const SpeedModel& speed) const {
    switch (kind_) {
      case Kind::equal:
        return p_bar_;
      case Kind::discrete: {
        double s = 0.0;
        for (std::size_t i = 0; i < classes_->size(); ++i) {
          s += (*classes_)[i].prob * powers_[i];
        }
        return s;
      }
      case Kind::linear:
        return p_bar_ + slope_ * (speed.mean_speed() - mean_speed_);
      case Kind::alpha_rule:
        return alpha_ * p_bar_ +
               p_bar_ * (1.0 - alpha_) * speed.mean_speed() / mean_speed_;
      case Kind::custom:
        return numerics::integrate(
            [this, &speed](double v) { return custom_(v) * speed.pdf(v); },
            speed.v_min(), speed.v_max(), 1e-12);
    }
    return p_bar_;
  }

  /// Throws if the policy allocates non-positive power anywhere on the support.
  void check_positive(const SpeedModel& speed) const {
    const int probes = 257;
    for (int i = 0; i < probes; ++i) {
      const double v = speed.v_min() +
                       (speed.v_max() - speed.v_min()) * i / (probes - 1);
      if (!(evaluate(v) > 0.0)) {
        throw ConfigError("PowerPolicy: non-positive power at speed " +
                          std::to_string(v) + " m/s");
      }
    }
  }

  /// check_positive plus the average-power budget constraint.
  void validate(const SpeedModel& speed, double p_bar_budget) const {
    check_positive(speed);
    if (average_power(speed) > p_bar_budget + 1e-12) {
      throw ConfigError("PowerPolicy: average power exceeds the budget");
    }
  }

  Kind kind() const noexcept { return kind_; }
  double p_bar() const noexcept { return p_bar_; }
  double alpha() const noexcept { return alpha_; }
  double slope() const noexcept { return slope_; }
  double mean_speed() const noexcept { return mean_speed_; }
  const std::string& label() const noexcept { return label_; }
  const SpeedClasses& classes() const { return *classes_; }
  const std::vector<double>& powers() const noexcept { return powers_; }

 private:
  explicit PowerPolicy(Kind k) : kind_(k) {}

  static void require_positive(double x, const char* name) {
    if (!(x > 0.0)) throw ConfigError(std::string("PowerPolicy: ") + name + " must be positive");
  }

  Kind kind_;
  double p_bar_ = 0.0;
  double alpha_ = 1.0;
  double slope_ = 0.0;
  double mean_speed_ = 0.0;
  std::shared_ptr<const SpeedClasses> classes_;
  std::vector<double> powers_;
  std::function<double(double)> custom_;
  std::string label_;
};

}  // namespace smallcell
