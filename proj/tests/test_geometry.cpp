#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ftdnav/geometry.hpp"
#include "oracles.hpp"

using namespace ftdnav;

TEST_CASE("voxel_downsample: empty cloud stays empty") {
  PointCloud empty;
  CHECK(voxel_downsample(empty, 0.1).points.empty());
}

TEST_CASE("voxel_downsample: points sharing a voxel collapse to its center") {
  PointCloud cloud;
  cloud.points = {{0.01, 0.02, 0.00}, {0.05, 0.03, 0.04}};
  const PointCloud out = voxel_downsample(cloud, 0.1);
  REQUIRE(out.size() == 1);
  CHECK(out.points[0].x == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(out.points[0].y == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(out.points[0].z == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("voxel_downsample: output size equals distinct voxel count") {
  const PointCloud cloud = oracle::random_cloud(1000, 0.0, 5.0, 42);
  const PointCloud out = voxel_downsample(cloud, 0.1);
  CHECK(out.size() == oracle::distinct_voxel_count(cloud, 0.1));
}

TEST_CASE("voxel_downsample: idempotent at the same resolution") {
  const PointCloud cloud = oracle::random_cloud(500, -3.0, 3.0, 7);
  const PointCloud once = voxel_downsample(cloud, 0.1);
  const PointCloud twice = voxel_downsample(once, 0.1);
  REQUIRE(twice.size() == once.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice.points[i].x == once.points[i].x);
    CHECK(twice.points[i].y == once.points[i].y);
    CHECK(twice.points[i].z == once.points[i].z);
  }
}

TEST_CASE("voxel_downsample: boundary point belongs to the higher voxel") {
  PointCloud cloud;
  cloud.points = {{0.1, 0.0, 0.0}};
  const PointCloud out = voxel_downsample(cloud, 0.1);
  REQUIRE(out.size() == 1);
  // floor(0.1 / 0.1) lands in voxel 1 (fp division of 0.1/0.1 is exactly 1).
  CHECK(out.points[0].x == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("crop_planar keeps the square window inclusively") {
  PointCloud cloud;
  cloud.points = {{2.5, 0.0, 1.0}, {2.5001, 0.0, 1.0}, {-2.5, -2.5, 0.0},
                  {0.0, 3.0, 0.0}, {1.0, 1.0, 9.0}};
  const PointCloud out = crop_planar(cloud, 0.0, 0.0, 2.5);
  REQUIRE(out.size() == 3);
  CHECK(out.points[0].x == 2.5);
  CHECK(out.points[1].x == -2.5);
  CHECK(out.points[2].z == 9.0);  // z is not cropped
}
