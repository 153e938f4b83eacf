#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ftdnav/ftd_map.hpp"
#include "oracles.hpp"

using namespace ftdnav;

namespace {
const HeightBand kBand{0.05, 0.4};
}

TEST_CASE("build_ftd: tree counts and emptiness") {
  const FtdMap empty = build_ftd(PointCloud{}, std::vector<PointCloud>(30));
  CHECK(empty.horizon() == 30);  // 31 trees total with the static one
  CHECK(empty.static_size() == 0);
  for (int k = 0; k < 30; ++k) CHECK(empty.dynamic_size(k) == 0);
  CHECK_FALSE(empty.nearest_at_step(0, 0, 0, kBand).has_value());
  CHECK_THROWS_AS(empty.nearest_at_step(30, 0, 0, kBand), std::out_of_range);
  CHECK_THROWS_AS(empty.nearest_at_step(-1, 0, 0, kBand), std::out_of_range);
}

TEST_CASE("build_ftd: membership preserved per tree") {
  const PointCloud stat = oracle::random_cloud(200, 0.0, 5.0, 42);
  std::vector<PointCloud> dyn;
  for (std::uint32_t k = 0; k < 5; ++k) {
    dyn.push_back(oracle::random_cloud(40, 0.0, 5.0, 100 + k));
  }
  const FtdMap map = build_ftd(stat, dyn);
  CHECK(map.static_size() == 200);
  for (int k = 0; k < 5; ++k) CHECK(map.dynamic_size(k) == 40);
}

TEST_CASE("static-only map answers identically for every step") {
  PointCloud stat;
  stat.points = {{1.0, 0.0, 0.2}, {2.0, 2.0, 0.2}, {0.5, -1.0, 0.3}};
  const FtdMap map = build_ftd(stat, std::vector<PointCloud>(30));
  const auto first = map.nearest_at_step(0, 0.3, 0.1, kBand);
  REQUIRE(first.has_value());
  for (int k = 1; k < 30; ++k) {
    const auto hit = map.nearest_at_step(k, 0.3, 0.1, kBand);
    REQUIRE(hit.has_value());
    CHECK(hit->index == first->index);
    CHECK(hit->dist_sq == first->dist_sq);
    CHECK_FALSE(hit->dynamic);
  }
}

TEST_CASE("moving dynamic cloud shifts the answer across steps") {
  // One obstacle point moving +x at 1 m/s, dt = 0.1.
  std::vector<PointCloud> dyn(30);
  for (int k = 0; k < 30; ++k) {
    dyn[k].points.push_back({1.0 + 0.1 * k, 1.0, 0.2});
  }
  const FtdMap map = build_ftd(PointCloud{}, dyn);
  const auto at0 = map.nearest_at_step(0, 0.0, 1.0, kBand);
  const auto at5 = map.nearest_at_step(5, 0.0, 1.0, kBand);
  REQUIRE(at0.has_value());
  REQUIRE(at5.has_value());
  CHECK(std::sqrt(at0->dist_sq) == doctest::Approx(1.0));
  CHECK(std::sqrt(at5->dist_sq) == doctest::Approx(1.5));
  CHECK(at5->dynamic);
}

TEST_CASE("collides_at_step: boundary counts, beyond does not") {
  PointCloud stat;
  stat.points = {{1.0, 0.0, 0.2}};
  const FtdMap map = build_ftd(stat, std::vector<PointCloud>(1));

  const auto boundary = map.collides_at_step(0, 0.0, 0.0, kBand, 1.0);
  REQUIRE(boundary.has_value());  // dist == delta means contact
  CHECK(boundary->dist_sq == doctest::Approx(1.0));

  CHECK_FALSE(map.collides_at_step(0, 0.0, 0.0, kBand, 0.49).has_value());
}

TEST_CASE("queries match a band-filtered linear scan on random maps") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> unif(0.0, 5.0);
  const PointCloud stat = oracle::random_cloud(400, 0.0, 5.0, 51);
  std::vector<PointCloud> dyn;
  for (std::uint32_t k = 0; k < 10; ++k) {
    dyn.push_back(oracle::random_cloud(60, 0.0, 5.0, 500 + k));
  }
  const FtdMap map = build_ftd(stat, dyn);
  const HeightBand band{0.5, 2.5};

  for (int trial = 0; trial < 200; ++trial) {
    const int k = static_cast<int>(rng() % 10);
    const double qx = unif(rng), qy = unif(rng);

    PointCloud merged = stat;
    for (const Point3& p : dyn[static_cast<std::size_t>(k)].points) {
      merged.points.push_back(p);
    }
    const auto want = oracle::nearest_planar_scan(merged, qx, qy, band.z_min,
                                                  band.z_max);
    const auto got = map.nearest_at_step(k, qx, qy, band);
    REQUIRE(want.has_value() == got.has_value());
    if (got) {
      CHECK(got->dist_sq == want->dist_sq);
      // Collision query consistency at an arbitrary delta.
      const double delta = 0.2 + 0.4 * unif(rng);
      const bool collide = map.collides_at_step(k, qx, qy, band, delta).has_value();
      CHECK(collide == (got->dist_sq <= delta * delta));
    }
  }
}

TEST_CASE("static beats dynamic on exact ties") {
  PointCloud stat;
  stat.points = {{1.0, 0.0, 0.2}};
  std::vector<PointCloud> dyn(1);
  dyn[0].points.push_back({-1.0, 0.0, 0.2});  // same planar distance from origin
  const FtdMap map = build_ftd(stat, dyn);
  const auto hit = map.nearest_at_step(0, 0.0, 0.0, kBand);
  REQUIRE(hit.has_value());
  CHECK_FALSE(hit->dynamic);
}
