// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "mmhsim/skeleton.hpp"

using namespace mmhsim;
using Catch::Approx;

namespace {

PathCluster single_subpath_cluster(int index, std::complex<double> gain,
                                   double aoa_az, double aoa_el, double aod_az,
                                   double aod_el) {
  PathCluster c;
  c.cluster_index = index;
  c.center_aoa_az = aoa_az;
  c.center_aoa_el = aoa_el;
  c.center_aod_az = aod_az;
  c.center_aod_el = aod_el;
  c.subpaths = {make_subpath(gain, aoa_az, aoa_el, aod_az, aod_el)};
  return c;
}

LinkState dummy_link() {
  LinkState l;
  l.bs_id = 0;
  l.distance_3d = 20.0;
  return l;
}

// Converts direction cosines (a, b) with a^2+b^2 <= 1 back to (az, el).
std::pair<double, double> angles_from_cosines(double a, double b) {
  const double r = std::hypot(a, b);
  return {std::asin(std::min(r, 1.0)), std::atan2(b, a)};
}

PathSkeleton skeleton_of(const std::vector<PathCluster>& clusters, int max_paths = 8) {
  return extract_skeleton(clusters, dummy_link(), max_paths);
}

}  // namespace

TEST_CASE("extract_skeleton keeps the strongest clusters") {
  SECTION("single cluster keeps its center angles") {
    const auto clusters = std::vector<PathCluster>{
        single_subpath_cluster(0, {0.5, 0.0}, 0.3, 0.1, -0.4, 0.05)};
    const PathSkeleton ps = skeleton_of(clusters);
    REQUIRE(ps.size() == 1);
    REQUIRE(ps.paths[0].aoa_az == Approx(0.3));
    REQUIRE(ps.paths[0].aod_az == Approx(-0.4));
    REQUIRE(ps.paths[0].gain == Approx(0.5));
  }
  SECTION("top-k by dominant gain") {
    const auto clusters = std::vector<PathCluster>{
        single_subpath_cluster(0, {3.0, 0.0}, 0.1, 0.0, 0.1, 0.0),
        single_subpath_cluster(1, {1.0, 0.0}, 0.2, 0.0, 0.2, 0.0),
        single_subpath_cluster(2, {2.0, 0.0}, 0.3, 0.0, 0.3, 0.0)};
    const PathSkeleton ps = extract_skeleton(clusters, dummy_link(), 2);
    REQUIRE(ps.size() == 2);
    REQUIRE(ps.paths[0].gain == Approx(3.0));
    REQUIRE(ps.paths[1].gain == Approx(2.0));
  }
  SECTION("size never exceeds the cluster count") {
    const auto clusters = std::vector<PathCluster>{
        single_subpath_cluster(0, {1.0, 0.0}, 0.0, 0.0, 0.0, 0.0)};
    REQUIRE(extract_skeleton(clusters, dummy_link(), 10).size() == 1);
  }
  SECTION("empty cluster list gives an empty skeleton") {
    REQUIRE(skeleton_of({}).empty());
  }
}

TEST_CASE("nearest codeword selection: kernel route equals direct route") {
  const Codebook cb = Codebook::angle_grid(4, 4, 2);
  RngStream rng(5, "angles");
  for (int t = 0; t < 200; ++t) {
    const double az = rng.uniform(-M_PI, M_PI);
    const double el = rng.uniform(-M_PI / 2.0, M_PI / 2.0);
    REQUIRE(nearest_codeword(cb, az, el) == nearest_codeword_direct(cb, az, el));
  }
}

TEST_CASE("codebook codewords have unit norm") {
  for (const Codebook& cb : {Codebook::angle_grid(4, 2, 2), Codebook::dft(4, 4)})
    for (int i = 0; i < cb.count(); ++i)
      REQUIRE(cb.codewords.col(i).norm() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matched rank-1 channel: restricted equals exhaustive search") {
  const Codebook f_book = Codebook::angle_grid(4, 4, 2);
  const Codebook w_book = Codebook::angle_grid(2, 2, 2);
  // Pick on-grid angles (cell centers of the codebook grids).
  const double f_az = -M_PI / 2.0 + 2.5 * (M_PI / 8.0);
  const double f_el = -M_PI / 2.0 + 5.5 * (M_PI / 8.0);
  const double w_az = -M_PI / 2.0 + 1.5 * (M_PI / 4.0);
  const double w_el = -M_PI / 2.0 + 2.5 * (M_PI / 4.0);

  const auto cluster = single_subpath_cluster(0, {1.0, 0.0}, w_az, w_el, f_az, f_el);
  ArrayConfig arrays{4, 4, 2, 2};
  const Eigen::MatrixXcd h = channel_from_clusters({cluster}, arrays);
  const PathSkeleton ps = skeleton_of({cluster});

  const BeamSearchResult exhaustive = beam_search(h, f_book, w_book);
  const BeamSearchResult restricted = beam_search(h, f_book, w_book, ps);
  REQUIRE(restricted.w_index == exhaustive.w_index);
  REQUIRE(restricted.f_index == exhaustive.f_index);
  REQUIRE(restricted.gain == Approx(exhaustive.gain).epsilon(1e-12));
}

TEST_CASE("full skeletons on orthogonal codebooks: restricted equals exhaustive") {
  // On-grid single-subpath clusters with critically-sampled DFT codebooks:
  // cross-codeword terms vanish, so the restricted candidate set provably
  // contains the exhaustive argmax.
  ArrayConfig arrays{4, 4, 4, 4};
  const Codebook f_book = Codebook::dft(arrays.bs_rows, arrays.bs_cols);
  const Codebook w_book = Codebook::dft(arrays.ue_rows, arrays.ue_cols);

  RngStream rng(11, "dft-draws");
  for (int trial = 0; trial < 200; ++trial) {
    const int p = 1 + rng.uniform_int(4);
    std::vector<PathCluster> clusters;
    for (int k = 0; k < p; ++k) {
      // Physical grid points only (a^2 + b^2 <= 1).
      double fa, fb, wa, wb;
      do {
        const auto& d = f_book.directions[rng.uniform_int(f_book.count())];
        fa = d.first;
        fb = d.second;
      } while (fa * fa + fb * fb > 1.0);
      do {
        const auto& d = w_book.directions[rng.uniform_int(w_book.count())];
        wa = d.first;
        wb = d.second;
      } while (wa * wa + wb * wb > 1.0);
      const auto [f_az, f_el] = angles_from_cosines(fa, fb);
      const auto [w_az, w_el] = angles_from_cosines(wa, wb);
      clusters.push_back(single_subpath_cluster(
          k, rng.complex_normal(1.0), w_az, w_el, f_az, f_el));
    }
    const Eigen::MatrixXcd h = channel_from_clusters(clusters, arrays);
    const PathSkeleton ps = skeleton_of(clusters);

    const BeamSearchResult exhaustive = beam_search(h, f_book, w_book);
    const BeamSearchResult restricted = beam_search(h, f_book, w_book, ps);
    REQUIRE(restricted.gain ==
            Approx(exhaustive.gain).epsilon(1e-10).margin(1e-18));
  }
}

TEST_CASE("restricted gain never exceeds the exhaustive gain") {
  ArrayConfig arrays{4, 4, 2, 2};
  const Codebook f_book = Codebook::angle_grid(arrays.bs_rows, arrays.bs_cols, 2);
  const Codebook w_book = Codebook::angle_grid(arrays.ue_rows, arrays.ue_cols, 2);
  RadioConfig cfg;
  BaseStation bs{0, {0.0, 0.0}, 6.0};
  LinkState link = dummy_link();

  double total_gap_db = 0.0;
  int gap_count = 0;
  RngStream rng(13, "channel-draws");
  for (int trial = 0; trial < 200; ++trial) {
    const auto clusters = generate_clusters(bs, {15.0, 10.0}, 1.5, link, cfg, rng);
    const Eigen::MatrixXcd h = channel_from_clusters(clusters, arrays);
    const BeamSearchResult exhaustive = beam_search(h, f_book, w_book);

    const PathSkeleton full = skeleton_of(clusters);
    const BeamSearchResult restricted = beam_search(h, f_book, w_book, full);
    REQUIRE(restricted.gain <= exhaustive.gain * (1.0 + 1e-12));

    // Truncation gap statistic (logged, not asserted exact).
    const PathSkeleton strongest = extract_skeleton(clusters, link, 1);
    const BeamSearchResult truncated = beam_search(h, f_book, w_book, strongest);
    REQUIRE(truncated.gain <= exhaustive.gain * (1.0 + 1e-12));
    if (truncated.gain > 0.0 && exhaustive.gain > 0.0) {
      total_gap_db += 10.0 * std::log10(exhaustive.gain / truncated.gain);
      ++gap_count;
    }
  }
  WARN("mean strongest-cluster truncation gap: "
       << total_gap_db / std::max(gap_count, 1) << " dB over " << gap_count
       << " draws");
}

TEST_CASE("restricted search on clusters matches the matrix route") {
  ArrayConfig arrays{4, 4, 2, 2};
  const Codebook f_book = Codebook::angle_grid(arrays.bs_rows, arrays.bs_cols, 2);
  const Codebook w_book = Codebook::angle_grid(arrays.ue_rows, arrays.ue_cols, 2);
  RadioConfig cfg;
  BaseStation bs{0, {0.0, 0.0}, 6.0};

  RngStream rng(17, "channel-draws");
  for (int trial = 0; trial < 50; ++trial) {
    const auto clusters = generate_clusters(bs, {25.0, -5.0}, 1.5, dummy_link(), cfg, rng);
    const PathSkeleton ps = skeleton_of(clusters);
    const RestrictedSearchPlan plan = plan_restricted_search(ps, f_book, w_book);

    const Eigen::MatrixXcd h = channel_from_clusters(clusters, arrays);
    const BeamSearchResult via_matrix = beam_search(h, f_book, w_book, ps);
    const BeamSearchResult via_clusters =
        run_restricted_search(clusters, f_book, w_book, plan, arrays);
    REQUIRE(via_clusters.w_index == via_matrix.w_index);
    REQUIRE(via_clusters.f_index == via_matrix.f_index);
    REQUIRE(via_clusters.gain ==
            Approx(via_matrix.gain).epsilon(1e-10).margin(1e-24));
  }
}

TEST_CASE("beam search on an empty skeleton signals blockage") {
  const Codebook f_book = Codebook::angle_grid(2, 2, 2);
  const Codebook w_book = Codebook::angle_grid(2, 2, 2);
  const Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(4, 4);
  REQUIRE_THROWS_AS(beam_search(h, f_book, w_book, PathSkeleton{}),
                    BlockedSkeletonError);
}

TEST_CASE("skeleton_distance is a pseudometric") {
  RngStream rng(23, "skeletons");
  auto random_skeleton = [&rng](int n) {
    PathSkeleton ps;
    for (int i = 0; i < n; ++i)
      ps.paths.push_back({rng.uniform(-M_PI, M_PI), rng.uniform(-1.0, 1.0),
                          rng.uniform(-M_PI, M_PI), rng.uniform(-1.0, 1.0),
                          std::exp(rng.uniform(-12.0, -2.0))});
    return ps;
  };

  SECTION("identity and empty cases") {
    REQUIRE(skeleton_distance({}, {}) == 0.0);
    for (int t = 0; t < 50; ++t) {
      const PathSkeleton a = random_skeleton(1 + rng.uniform_int(4));
      REQUIRE(skeleton_distance(a, a) == Approx(0.0).margin(1e-12));
    }
  }
  SECTION("symmetry, including unequal sizes") {
    for (int t = 0; t < 100; ++t) {
      const PathSkeleton a = random_skeleton(1 + rng.uniform_int(4));
      const PathSkeleton b = random_skeleton(1 + rng.uniform_int(4));
      REQUIRE(skeleton_distance(a, b) ==
              Approx(skeleton_distance(b, a)).epsilon(1e-12));
      REQUIRE(skeleton_distance(a, b) >= 0.0);
    }
  }
  SECTION("single-coordinate difference with zero gain weight") {
    PathSkeleton a, b;
    a.paths.push_back({0.5, 0.2, -0.3, 0.1, 1e-4});
    b.paths.push_back({0.6, 0.2, -0.3, 0.1, 5e-3});
    REQUIRE(skeleton_distance(a, b, 0.0) == Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("optimize_threshold") {
  SECTION("recovers the maximizer of a smooth surrogate") {
    const ThresholdEvaluator surrogate = [](double x) {
      return ThresholdObjective{-(x - 3.0) * (x - 3.0), 0.0};
    };
    const ThresholdResult r = optimize_threshold(surrogate, 6.0, 0.2, 1e-4);
    REQUIRE(r.t_d == Approx(3.0).margin(1e-4));
  }
  SECTION("random unimodal surrogates land within tolerance") {
    RngStream rng(31, "surrogates");
    for (int t = 0; t < 20; ++t) {
      const double peak = rng.uniform(0.5, 9.5);
      const ThresholdEvaluator surrogate = [peak](double x) {
        return ThresholdObjective{-(x - peak) * (x - peak), 0.0};
      };
      const ThresholdResult r = optimize_threshold(surrogate, 10.0, 0.2, 1e-5);
      REQUIRE(r.t_d == Approx(peak).margin(1e-5));
    }
  }
  SECTION("all-infeasible evaluators raise an error") {
    const ThresholdEvaluator infeasible = [](double) {
      return ThresholdObjective{1.0, 0.5};
    };
    REQUIRE_THROWS_AS(optimize_threshold(infeasible, 5.0, 0.0, 1e-3),
                      InfeasibleThresholdError);
  }
  SECTION("feasibility boundary is honored") {
    // Feasible only for x >= 4; rate decreasing in x, so the optimum sits
    // near the boundary.
    const ThresholdEvaluator e = [](double x) {
      return ThresholdObjective{-x, x < 4.0 ? 1.0 : 0.0};
    };
    const ThresholdResult r = optimize_threshold(e, 10.0, 0.2, 1e-4);
    REQUIRE(r.prob_exceed <= 0.2);
    REQUIRE(r.t_d >= 4.0);
    REQUIRE(r.t_d == Approx(4.0).margin(1e-3));
  }
}

TEST_CASE("skeleton database protocol") {
  auto make_skeleton = [](int grid) {
    PathSkeleton ps;
    ps.grid_id = grid;
    ps.paths.push_back({0.1 * grid, 0.0, 0.2, 0.0, 1e-4});
    return ps;
  };

  SECTION("entry at the aging threshold migrates on the next tick") {
    SkeletonDatabase db(3, 5.0);
    int rebuilds = 0;
    const auto rebuild = [&](int grid) {
      ++rebuilds;
      return std::optional<PathSkeleton>(make_skeleton(grid));
    };
    db.query(7, rebuild);
    for (int t = 0; t < 3; ++t) db.tick();
    REQUIRE(db.normal_list().at(7).aging_counter == 3);
    REQUIRE(db.watch_list().empty());
    db.tick();
    REQUIRE_FALSE(db.normal_list().contains(7));
    REQUIRE(db.watch_list().contains(7));
  }
  SECTION("a fresh entry with T_Aging = 5 survives five ticks, moves on the sixth") {
    SkeletonDatabase db(5, 5.0);
    db.query(1, [&](int grid) { return std::optional<PathSkeleton>(make_skeleton(grid)); });
    for (int t = 0; t < 5; ++t) {
      db.tick();
      REQUIRE(db.normal_list().contains(1));
    }
    db.tick();
    REQUIRE_FALSE(db.normal_list().contains(1));
    REQUIRE(db.watch_list().contains(1));
  }
  SECTION("ticking an empty database is a no-op") {
    SkeletonDatabase db(2, 5.0);
    db.tick();
    REQUIRE(db.normal_list().empty());
    REQUIRE(db.watch_list().empty());
  }
  SECTION("hits do not rebuild; misses rebuild exactly once") {
    SkeletonDatabase db(10, 5.0);
    int rebuilds = 0;
    const auto rebuild = [&](int grid) {
      ++rebuilds;
      return std::optional<PathSkeleton>(make_skeleton(grid));
    };
    const auto first = db.query(4, rebuild);
    REQUIRE(first.rebuilt);
    REQUIRE(first.skeleton != nullptr);
    const auto second = db.query(4, rebuild);
    REQUIRE_FALSE(second.rebuilt);
    REQUIRE(second.skeleton == first.skeleton);
    REQUIRE(rebuilds == 1);
  }
  SECTION("watch-listed grids rebuild and leave the watch list") {
    SkeletonDatabase db(1, 5.0);
    db.add_to_watch(9);
    const auto result = db.query(9, [&](int grid) {
      return std::optional<PathSkeleton>(make_skeleton(grid));
    });
    REQUIRE(result.rebuilt);
    REQUIRE_FALSE(db.watch_list().contains(9));
    REQUIRE(db.normal_list().at(9).aging_counter == 0);
  }
  SECTION("a failed rebuild signals unavailability and stays watched") {
    SkeletonDatabase db(1, 5.0);
    const auto result = db.query(2, [](int) { return std::optional<PathSkeleton>(); });
    REQUIRE(result.rebuilt);
    REQUIRE(result.skeleton == nullptr);
    REQUIRE(db.watch_list().contains(2));
  }
  SECTION("normal and watch lists stay disjoint under random operations") {
    SkeletonDatabase db(2, 5.0);
    RngStream rng(41, "db-ops");
    for (int op = 0; op < 2000; ++op) {
      const int grid = rng.uniform_int(12);
      switch (rng.uniform_int(3)) {
        case 0:
          db.query(grid, [&](int g) {
            return rng.bernoulli(0.8) ? std::optional<PathSkeleton>(make_skeleton(g))
                                      : std::optional<PathSkeleton>();
          });
          break;
        case 1: {
          const std::size_t before = db.normal_list().size();
          db.tick();
          REQUIRE(db.normal_list().size() <= before);
          break;
        }
        default:
          db.add_to_watch(grid);
      }
      for (const auto& [g, entry] : db.normal_list()) {
        REQUIRE_FALSE(db.watch_list().contains(g));
        REQUIRE(entry.aging_counter <= db.t_aging());
      }
    }
  }
}

TEST_CASE("database snapshot round-trips") {
  SkeletonDatabase db(4, 5.0);
  db.query(3, [](int g) {
    PathSkeleton ps;
    ps.bs_id = 1;
    ps.paths.push_back({0.4, -0.1, 1.2, 0.3, 2.5e-5});
    ps.paths.push_back({-1.4, 0.2, 0.6, -0.2, 1.5e-5});
    return std::optional<PathSkeleton>(ps);
  });
  db.tick();
  db.add_to_watch(8);

  const nlohmann::json snap = database_snapshot(db);
  const SkeletonDatabase restored = database_from_snapshot(snap);
  REQUIRE(restored.t_aging() == db.t_aging());
  REQUIRE(restored.watch_list() == db.watch_list());
  REQUIRE(restored.normal_list().size() == db.normal_list().size());
  const auto& a = db.normal_list().at(3);
  const auto& b = restored.normal_list().at(3);
  REQUIRE(a.aging_counter == b.aging_counter);
  REQUIRE(a.skeleton->paths.size() == b.skeleton->paths.size());
  for (std::size_t i = 0; i < a.skeleton->paths.size(); ++i) {
    REQUIRE(a.skeleton->paths[i].aod_az == b.skeleton->paths[i].aod_az);
    REQUIRE(a.skeleton->paths[i].gain == b.skeleton->paths[i].gain);
  }
  // Byte-identical re-serialization.
  REQUIRE(database_snapshot(restored).dump() == snap.dump());
}
