#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"
#include "smallcell/speed_classes.hpp"
#include "smallcell/speed_model.hpp"
#include "smallcell/units.hpp"

using namespace smallcell;
using Catch::Approx;

TEST_CASE("uniform speed moments match closed forms") {
  const SpeedModel s = SpeedModel::uniform_interval(kmph_to_mps(20), kmph_to_mps(100));
  CHECK(s.mean_speed() == Approx(16.6666666666667).epsilon(1e-12));
  CHECK(s.mean_inverse_speed() == Approx(0.0724247060595345).epsilon(1e-12));

  // E[1/V] against an independent quadrature of the density
  const double quad = test_helpers::simpson(
      [&](double v) { return s.pdf(v) / v; }, s.v_min(), s.v_max());
  CHECK(s.mean_inverse_speed() == Approx(quad).epsilon(1e-10));
}

TEST_CASE("truncated gaussian moments") {
  const SpeedModel s = SpeedModel::truncated_gaussian(
      kmph_to_mps(40), kmph_to_mps(100), kmph_to_mps(70), kmph2_to_mps2(10));
  CHECK(s.mean_speed() == Approx(19.4444444444444).epsilon(1e-10));
  CHECK(s.mean_inverse_speed() == Approx(0.051534176938657).epsilon(1e-9));
  CHECK(test_helpers::simpson([&](double v) { return s.pdf(v); }, s.v_min(), s.v_max()) ==
        Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Jensen: E[1/V] exceeds 1/E[V] for both kinds") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(5.0, 40.0);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng);
    const double b = a + u(rng);
    const SpeedModel uni = SpeedModel::uniform_interval(a, b);
    CHECK(uni.mean_inverse_speed() > 1.0 / uni.mean_speed());
    const SpeedModel tg =
        SpeedModel::truncated_gaussian(a, b, 0.5 * (a + b), 0.05 * (b - a) * (b - a));
    CHECK(tg.mean_inverse_speed() > 1.0 / tg.mean_speed());
  }
}

TEST_CASE("truncated gaussian sampling stays inside the support") {
  const SpeedModel s = SpeedModel::truncated_gaussian(11.0, 13.0, 12.0, 4.0);
  std::mt19937_64 rng(42);
  for (int i = 0; i < 20000; ++i) {
    const double v = s.sample(rng);
    REQUIRE(v >= 11.0);
    REQUIRE(v <= 13.0);
  }
}

TEST_CASE("speed model rejects degenerate supports") {
  CHECK_THROWS_AS(SpeedModel::uniform_interval(0.0, 10.0), ConfigError);
  CHECK_THROWS_AS(SpeedModel::uniform_interval(-1.0, 10.0), ConfigError);
  CHECK_THROWS_AS(SpeedModel::uniform_interval(10.0, 10.0), ConfigError);
  CHECK_THROWS_AS(SpeedModel::truncated_gaussian(5.0, 10.0, 7.0, 0.0), ConfigError);
}

TEST_CASE("class partition: probabilities, coverage and the total-expectation law") {
  for (int kind = 0; kind < 2; ++kind) {
    const SpeedModel s =
        kind == 0 ? SpeedModel::uniform_interval(kmph_to_mps(20), kmph_to_mps(100))
                  : SpeedModel::truncated_gaussian(kmph_to_mps(20), kmph_to_mps(100),
                                                   kmph_to_mps(55), kmph2_to_mps2(160));
    const SpeedClasses cls = SpeedClasses::uniform_partition(s, 7);
    REQUIRE(cls.size() == 7);
    double psum = 0.0;
    for (const auto& c : cls) psum += c.prob;
    CHECK(psum == Approx(1.0).epsilon(1e-12));
    // sum_i p_i Upsilon_i = E[1/V]
    CHECK(cls.mixture_mean_inverse() == Approx(s.mean_inverse_speed()).epsilon(1e-9));
    // Upsilon_i strictly decreasing
    for (std::size_t i = 1; i < cls.size(); ++i) {
      CHECK(cls[i].cond_inv_speed < cls[i - 1].cond_inv_speed);
    }
  }
}

TEST_CASE("class lookup maps speeds to their interval") {
  const SpeedModel s = SpeedModel::uniform_interval(10.0, 30.0);
  const SpeedClasses cls = SpeedClasses::uniform_partition(s, 4);
  CHECK(cls.class_of(10.0) == 0);
  CHECK(cls.class_of(14.9) == 0);
  CHECK(cls.class_of(15.1) == 1);
  CHECK(cls.class_of(30.0) == 3);
  CHECK(cls.class_of(35.0) == 3);  // clamps outside the support
}
