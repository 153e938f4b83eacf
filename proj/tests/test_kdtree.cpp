#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "ftdnav/kdtree.hpp"
#include "oracles.hpp"

using namespace ftdnav;

namespace {
PointCloud make_cloud(std::initializer_list<Point3> pts) {
  PointCloud c;
  c.points = pts;
  return c;
}
}  // namespace

TEST_CASE("kdtree_build: size and membership") {
  const PointCloud cloud = oracle::random_cloud(17, -1.0, 1.0, 3);
  KdTree tree(cloud);
  CHECK(tree.size() == 17);
}

TEST_CASE("kdtree_build: duplicate points both retrievable") {
  KdTree tree(make_cloud({{1, 1, 1}, {1, 1, 1}}));
  CHECK(tree.size() == 2);
  const auto hits = tree.points_within(Point3{1, 1, 1}, 0.0);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].index == 0);
  CHECK(hits[1].index == 1);
}

TEST_CASE("kdtree_build: stored multiset equals input multiset") {
  const PointCloud cloud = oracle::random_cloud(500, 0.0, 5.0, 11);
  KdTree tree(cloud);
  auto stored = tree.points_in_input_order();
  REQUIRE(stored.size() == cloud.size());
  auto key = [](const Point3& p) { return std::tuple{p.x, p.y, p.z}; };
  std::vector<Point3> a = stored, b = cloud.points;
  auto lt = [&](const Point3& u, const Point3& v) { return key(u) < key(v); };
  std::sort(a.begin(), a.end(), lt);
  std::sort(b.begin(), b.end(), lt);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(key(a[i]) == key(b[i]));
  }
}

TEST_CASE("kdtree_nearest: basic answers") {
  KdTree tree(make_cloud({{1, 1, 1}}));
  auto hit = tree.nearest(Point3{0, 0, 0});
  REQUIRE(hit.has_value());
  CHECK(hit->dist_sq == doctest::Approx(3.0).epsilon(1e-15));

  auto self = tree.nearest(Point3{1, 1, 1});
  REQUIRE(self.has_value());
  CHECK(self->dist_sq == 0.0);
  CHECK(self->index == 0);

  KdTree empty;
  CHECK_FALSE(empty.nearest(Point3{0, 0, 0}).has_value());
}

TEST_CASE("kdtree_nearest: matches linear scan with index tie-break") {
  const PointCloud cloud = oracle::random_cloud(1000, 0.0, 5.0, 21);
  KdTree tree(cloud);
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> dist(-0.5, 5.5);
  for (int t = 0; t < 100; ++t) {
    const Point3 q{dist(rng), dist(rng), dist(rng)};
    const auto got = tree.nearest(q);
    const auto want = oracle::nearest_scan(cloud, q);
    REQUIRE(got.has_value());
    CHECK(got->index == want->index);
    CHECK(got->dist_sq == want->dist_sq);
  }
}

TEST_CASE("kdtree_points_within: exact set, sorted, boundary included") {
  KdTree tree(make_cloud({{0, 0, 0}, {2, 0, 0}, {0, 3, 0}}));

  auto zero = tree.points_within(Point3{0, 0, 0}, 0.0);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].index == 0);

  auto none = tree.points_within(Point3{10, 10, 10}, 1.0);
  CHECK(none.empty());

  auto boundary = tree.points_within(Point3{0, 0, 0}, 2.0);
  REQUIRE(boundary.size() == 2);
  CHECK(boundary[0].index == 0);
  CHECK(boundary[1].index == 1);  // dist exactly 2
}

TEST_CASE("kdtree_points_within: matches linear scan on random instances") {
  const PointCloud cloud = oracle::random_cloud(800, 0.0, 5.0, 31);
  KdTree tree(cloud);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 5.0);
  std::uniform_real_distribution<double> rad(0.0, 2.0);
  for (int t = 0; t < 60; ++t) {
    const Point3 q{dist(rng), dist(rng), dist(rng)};
    const double r = rad(rng);
    const auto got = tree.points_within(q, r);
    const auto want = oracle::radius_scan(cloud, q, r);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].index == want[i].index);
      CHECK(got[i].dist_sq == want[i].dist_sq);
    }
  }
}

TEST_CASE("kdtree_points_within: huge radius returns all points") {
  const PointCloud cloud = oracle::random_cloud(200, -1.0, 1.0, 17);
  KdTree tree(cloud);
  CHECK(tree.points_within(Point3{0, 0, 0}, 1e9).size() == 200);
}

TEST_CASE("nearest_planar: band filtering and planar metric match scan") {
  const PointCloud cloud = oracle::random_cloud(600, 0.0, 5.0, 57);
  KdTree tree(cloud);
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> dist(0.0, 5.0);
  for (int t = 0; t < 80; ++t) {
    const double qx = dist(rng), qy = dist(rng);
    const double z0 = dist(rng) * 0.8;
    const double z1 = z0 + 0.7;
    const auto got = tree.nearest_planar(qx, qy, z0, z1);
    const auto want = oracle::nearest_planar_scan(cloud, qx, qy, z0, z1);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->index == want->index);
      CHECK(got->dist_sq == want->dist_sq);
    }
  }
}

TEST_CASE("nearest_planar: empty band yields no result") {
  const PointCloud cloud = oracle::random_cloud(100, 0.0, 1.0, 2);
  KdTree tree(cloud);
  CHECK_FALSE(tree.nearest_planar(0.5, 0.5, 5.0, 6.0).has_value());
}
