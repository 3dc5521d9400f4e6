#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "smallcell/geometry.hpp"
#include "smallcell/traffic.hpp"

using namespace smallcell;
using Catch::Approx;

TEST_CASE("capacity rate: branches and continuity at d0") {
  const CellGeometry g = CellGeometry::uniform_partition(100.0, 2, 10.0, 2.0);
  CHECK(capacity_rate(10.0, 1.0, g) == 1.0);
  CHECK(capacity_rate(10.0 - 1e-9, 1.0, g) == 1.0);
  CHECK(capacity_rate(10.0 + 1e-9, 1.0, g) == Approx(1.0).epsilon(1e-8));
  CHECK(capacity_rate(20.0, 1.0, g) == Approx(0.25).epsilon(1e-14));
  CHECK(capacity_rate(0.0, 0.3, g) == Approx(0.3));
}

TEST_CASE("capacity rate: hand-evaluated spot value") {
  // P (d/d0)^{-beta} at d=35, P=0.7, d0=10, beta=2.5
  const CellGeometry g = CellGeometry::uniform_partition(70.0, 5, 10.0, 2.5);
  CHECK(capacity_rate(35.0, 0.7, g) == Approx(0.0305441419328485).epsilon(1e-13));
}

TEST_CASE("capacity rate rejects bad arguments") {
  const CellGeometry g = CellGeometry::uniform_partition(100.0, 2, 10.0, 2.0);
  CHECK_THROWS_AS(capacity_rate(-1.0, 1.0, g), std::invalid_argument);
  CHECK_THROWS_AS(capacity_rate(5.0, 0.0, g), std::invalid_argument);
  CHECK_THROWS_AS(capacity_rate(5.0, -2.0, g), std::invalid_argument);
}

TEST_CASE("region rates") {
  SECTION("single region gives the edge rate") {
    const CellGeometry g = CellGeometry::uniform_partition(50.0, 1, 10.0, 2.2);
    const auto r = region_rates(g, 0.9);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == Approx(capacity_rate(50.0, 0.9, g)).epsilon(1e-13));
  }
  SECTION("two-region hand evaluation") {
    const CellGeometry g(100.0, 2, {0.5, 1.0}, 10.0, 2.0);
    const auto r = region_rates(g, 1.0);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == Approx(0.04).epsilon(1e-13));
    CHECK(r[1] == Approx(0.01).epsilon(1e-13));
  }
  SECTION("linear in power, strictly decreasing in n") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
      const auto cfg = test_helpers::sample_valid_config(rng);
      const auto r1 = region_rates(cfg.geom, cfg.p_bar);
      const auto r2 = region_rates(cfg.geom, 2.0 * cfg.p_bar);
      for (std::size_t k = 0; k < r1.size(); ++k) {
        CHECK(r2[k] == Approx(2.0 * r1[k]).epsilon(1e-12));
        if (k > 0) CHECK(r1[k] < r1[k - 1]);
      }
      CHECK(r1.back() == Approx(capacity_rate(cfg.geom.half_length(), cfg.p_bar, cfg.geom))
                             .epsilon(1e-12));
    }
  }
}

TEST_CASE("geometry invariants are enforced") {
  CHECK_THROWS_AS(CellGeometry::uniform_partition(40.0, 5, 10.0, 2.5), ConfigError);  // L <= N d0
  CHECK_THROWS_AS(CellGeometry::uniform_partition(100.0, 5, 10.0, 1.0), ConfigError); // beta <= 1
  CHECK_THROWS_AS(CellGeometry(100.0, 2, {0.6, 0.5}, 10.0, 2.0), ConfigError);        // not increasing
  CHECK_THROWS_AS(CellGeometry(100.0, 2, {0.5, 0.9}, 10.0, 2.0), ConfigError);        // phi_N != 1
  CHECK_THROWS_AS(CellGeometry::uniform_partition(100.0, 2, 0.0, 2.0), ConfigError);  // d0 <= 0
  const CellGeometry g = CellGeometry::uniform_partition(70.0, 5, 10.0, 2.5);
  CHECK(g.r0() == Approx(std::pow(10.0, 2.5)).epsilon(1e-14));
  CHECK(g.phi_signed(-3) == Approx(-0.6));
  CHECK_THROWS_AS(g.phi_signed(0), std::invalid_argument);
  CHECK_THROWS_AS(g.phi_signed(6), std::invalid_argument);
}

TEST_CASE("fast attenuation path agrees with pow for half-integer beta") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ud(10.0, 500.0);
  for (double beta : {2.0, 2.5, 3.0, 3.5, 2.37}) {
    const CellGeometry g = CellGeometry::uniform_partition(200.0, 4, 10.0, beta);
    for (int i = 0; i < 200; ++i) {
      const double d = ud(rng);
      const double want = d <= 10.0 ? 1.0 : std::pow(d / 10.0, -beta);
      CHECK(g.attenuation(d) == Approx(want).epsilon(1e-13));
    }
  }
}

TEST_CASE("traffic model validation and position distribution") {
  const CellGeometry g = CellGeometry::uniform_partition(70.0, 5, 10.0, 2.5);
  const auto pi = TrafficModel::uniform_position_pi(g);
  REQUIRE(pi.size() == 10);
  for (double p : pi) CHECK(p == Approx(0.1).epsilon(1e-12));

  const TrafficModel t(0.01, 0.2, 0.4, 60, pi);
  CHECK(t.pi_at(-5) == Approx(0.1));
  CHECK(t.pi_at(5) == Approx(0.1));
  CHECK_THROWS_AS(t.pi_at(0), std::invalid_argument);
  CHECK(t.warnings().empty());

  const TrafficModel smelly(0.01, 0.9, 0.4, 60, pi);  // mu*s_h = 0.36
  CHECK(smelly.warnings().size() == 1);

  std::vector<double> bad = pi;
  bad[0] = 0.5;  // sums to 1.4
  CHECK_THROWS_AS(TrafficModel(0.01, 0.2, 0.4, 60, bad), ConfigError);
  CHECK_THROWS_AS(TrafficModel(-0.01, 0.2, 0.4, 60, pi), ConfigError);
  CHECK_THROWS_AS(TrafficModel(0.01, 0.0, 0.4, 60, pi), ConfigError);
  CHECK_THROWS_AS(TrafficModel(0.01, 0.2, 0.4, 0, pi), ConfigError);
}
