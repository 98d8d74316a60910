// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "mmhsim/environment.hpp"

using namespace mmhsim;

TEST_CASE("los_probability is exactly 1 up to 27 m") {
  for (double d : {0.5, 1.0, 5.0, 10.0, 26.9, 27.0})
    REQUIRE(los_probability(d) == 1.0);
}

TEST_CASE("los_probability at 71 m matches the scalar oracle") {
  // Independent evaluation of [min(27/d,1)(1-e^{-d/71}) + e^{-d/71}]^2 at d=71.
  REQUIRE(los_probability(71.0) == Catch::Approx(0.36998426117227319).epsilon(1e-12));
}

TEST_CASE("los_probability decreases monotonically beyond 27 m") {
  double prev = los_probability(27.0);
  for (double d = 28.0; d <= 500.0; d += 1.0) {
    const double p = los_probability(d);
    REQUIRE(p <= prev);
    prev = p;
  }
}

TEST_CASE("los and nlos probabilities sum to one") {
  for (double d : {1.0, 27.0, 50.0, 71.0, 200.0, 450.0})
    REQUIRE(los_probability(d) + nlos_probability(d) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("los_probability rejects non-positive distances") {
  REQUIRE_THROWS_AS(los_probability(0.0), std::domain_error);
  REQUIRE_THROWS_AS(los_probability(-3.0), std::domain_error);
}

TEST_CASE("deploy_bs draws a conditioned Poisson count with uniform positions") {
  const Rect extent{0.0, 0.0, 100.0, 100.0};
  RngStream rng(42, "deploy");
  double total = 0.0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const Zone zone = deploy_bs(extent, 5e-4, rng);
    REQUIRE(zone.num_bs() >= 1);
    for (const auto& bs : zone.bs_list) {
      REQUIRE(extent.contains(bs.position));
      REQUIRE(bs.id >= 0);
      REQUIRE(bs.id < zone.num_bs());
    }
    total += zone.num_bs();
  }
  // E[X | X >= 1] = lambda / (1 - e^-lambda) = 5.0339 for lambda = 5.
  const double mean = total / trials;
  REQUIRE(mean == Catch::Approx(5.03391827453).margin(0.06));
}

TEST_CASE("deploy_bs mean scales with density") {
  const Rect extent{0.0, 0.0, 100.0, 100.0};
  RngStream rng(7, "deploy");
  double total = 0.0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) total += deploy_bs(extent, 1e-3, rng).num_bs();
  REQUIRE(total / trials == Catch::Approx(10.0004540199).margin(0.1));
}

TEST_CASE("deploy_bs is deterministic under a fixed seed") {
  const Rect extent{0.0, 0.0, 50.0, 80.0};
  RngStream a(123, "deploy");
  RngStream b(123, "deploy");
  const Zone za = deploy_bs(extent, 2e-3, a);
  const Zone zb = deploy_bs(extent, 2e-3, b);
  REQUIRE(za.num_bs() == zb.num_bs());
  for (int j = 0; j < za.num_bs(); ++j) {
    REQUIRE(za.bs_list[j].position.x == zb.bs_list[j].position.x);
    REQUIRE(za.bs_list[j].position.y == zb.bs_list[j].position.y);
  }
}

TEST_CASE("deploy_bs rejects invalid configuration") {
  RngStream rng(1, "deploy");
  REQUIRE_THROWS_AS(deploy_bs({0, 0, 100, 100}, 0.0, rng), ConfigError);
  REQUIRE_THROWS_AS(deploy_bs({0, 0, 100, 100}, -1e-3, rng), ConfigError);
  REQUIRE_THROWS_AS(deploy_bs({0, 0, 0, 100}, 1e-3, rng), ConfigError);
}

TEST_CASE("build_trajectory resamples by arclength") {
  SECTION("straight 100 m path at 2 m spacing has 51 points") {
    const Trajectory t = build_trajectory({{0, 50}, {100, 50}}, 2.0);
    REQUIRE(t.size() == 51);
    REQUIRE(t.points.front().x == Catch::Approx(0.0));
    REQUIRE(t.points.back().x == Catch::Approx(100.0));
  }
  SECTION("straight 100 m path at 10 m spacing has 11 points") {
    REQUIRE(build_trajectory({{0, 0}, {100, 0}}, 10.0).size() == 11);
  }
  SECTION("a 2 m pair at 2 m spacing keeps both endpoints") {
    const Trajectory t = build_trajectory({{0, 0}, {2, 0}}, 2.0);
    REQUIRE(t.size() == 2);
    REQUIRE(t.points[1].x == Catch::Approx(2.0));
  }
  SECTION("consecutive points are exactly spacing apart along the path") {
    const Trajectory t = build_trajectory({{0, 0}, {30, 0}, {30, 40}}, 2.0);
    REQUIRE(t.size() == 36);
    for (int i = 1; i < t.size(); ++i) {
      // Straight segments here, so arclength spacing equals Euclidean except
      // at the corner point.
      const double step = distance(t.points[i - 1], t.points[i]);
      REQUIRE(step <= 2.0 + 1e-9);
    }
    REQUIRE(t.points.back().x == Catch::Approx(30.0));
    REQUIRE(t.points.back().y == Catch::Approx(40.0));
  }
}

TEST_CASE("build_trajectory rejects invalid configuration") {
  REQUIRE_THROWS_AS(build_trajectory({{0, 0}, {10, 0}}, 0.0), ConfigError);
  REQUIRE_THROWS_AS(build_trajectory({{0, 0}, {10, 0}}, -2.0), ConfigError);
  REQUIRE_THROWS_AS(build_trajectory({{0, 0}, {1, 0}}, 5.0), ConfigError);
  REQUIRE_THROWS_AS(build_trajectory({{0, 0}}, 1.0), ConfigError);
}

TEST_CASE("draw_link_states marks close links LoS") {
  // 3D distance stays under 27 m everywhere on this short trajectory.
  Zone zone;
  zone.extent = {0, 0, 20, 20};
  zone.bs_list = {{0, {10.0, 10.0}, 6.0}};
  const Trajectory traj = build_trajectory({{8, 10}, {12, 10}}, 2.0);
  RngStream rng(9, "blockage");
  const LinkStateTable table = draw_link_states(zone, traj, rng);
  for (int i = 0; i < traj.size(); ++i) {
    REQUIRE(table.at(0, i).los);
    REQUIRE(table.at(0, i).distance_3d > 0.0);
  }
}

TEST_CASE("draw_link_states marks hopeless links NLoS") {
  // p_LoS at 1e8 m is ~7e-14: not a single LoS draw in 10^4 trials.
  Zone zone;
  zone.extent = {0, 0, 2e8, 10};
  zone.bs_list = {{0, {1e8, 0.0}, 6.0}};
  const Trajectory traj = build_trajectory({{0, 0}, {8, 0}}, 2.0);
  RngStream rng(11, "blockage");
  for (int t = 0; t < 2000; ++t) {
    const LinkStateTable table = draw_link_states(zone, traj, rng);
    for (int i = 0; i < traj.size(); ++i) REQUIRE_FALSE(table.at(0, i).los);
  }
}

TEST_CASE("empirical LoS fraction at 71 m matches the Monte Carlo oracle") {
  // Horizontal offset chosen so the 3D distance (BS 6 m, UE 1.5 m) is 71 m.
  const double horiz = std::sqrt(71.0 * 71.0 - 4.5 * 4.5);
  Zone zone;
  zone.extent = {0, 0, 200, 200};
  zone.bs_list = {{0, {0.0, 0.0}, 6.0}};
  Trajectory traj;
  traj.spacing = 2.0;
  traj.points = {{horiz, 0.0}};
  RngStream rng(5, "blockage");
  int los_count = 0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    const LinkStateTable table = draw_link_states(zone, traj, rng);
    REQUIRE(table.at(0, 0).distance_3d == Catch::Approx(71.0).margin(1e-9));
    los_count += table.at(0, 0).los ? 1 : 0;
  }
  REQUIRE(static_cast<double>(los_count) / trials ==
          Catch::Approx(0.36998426117227319).margin(0.01));
}

TEST_CASE("draw_link_states is bitwise deterministic under a fixed seed") {
  Zone zone;
  zone.extent = {0, 0, 100, 100};
  zone.bs_list = {{0, {20, 30}, 6.0}, {1, {70, 60}, 6.0}};
  const Trajectory traj = build_trajectory({{0, 50}, {100, 50}}, 2.0);
  RngStream a(77, "blockage", {3});
  RngStream b(77, "blockage", {3});
  const LinkStateTable ta = draw_link_states(zone, traj, a);
  const LinkStateTable tb = draw_link_states(zone, traj, b);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < traj.size(); ++i) {
      REQUIRE(ta.at(j, i).los == tb.at(j, i).los);
      REQUIRE(ta.at(j, i).distance_3d == tb.at(j, i).distance_3d);
    }
}
