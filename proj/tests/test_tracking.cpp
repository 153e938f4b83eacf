#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ftdnav/tracking.hpp"

using namespace ftdnav;

namespace {

ObstacleTrack fresh_track(const Eigen::Vector3d& pos, const Eigen::Vector3d& vel,
                          const Eigen::Matrix2d& cov, int meas_count = 2) {
  ObstacleTrack t;
  t.position = pos;
  t.velocity = vel;
  for (int a = 0; a < 3; ++a) t.covariance[a] = cov;
  t.measurement_count = meas_count;  // >= 2 selects the regular update path
  return t;
}

}  // namespace

TEST_CASE("kf_predict: constant velocity motion") {
  const Eigen::Matrix2d P = Eigen::Matrix2d::Identity();
  auto t = fresh_track({0, 0, 0}, {1, 0, 0}, P);
  const auto out = kf_predict(t, 0.1, 0.0);
  CHECK(out.position.x() == doctest::Approx(0.1));
  CHECK(out.position.y() == doctest::Approx(0.0));
  CHECK(out.velocity.x() == doctest::Approx(1.0));

  const auto still = kf_predict(fresh_track({2, 3, 4}, {0, 0, 0}, P), 0.5, 0.0);
  CHECK(still.position.x() == doctest::Approx(2.0));
  CHECK(still.position.y() == doctest::Approx(3.0));
  CHECK(still.position.z() == doctest::Approx(4.0));
}

TEST_CASE("kf_predict: covariance propagation F P F^T with zero process noise") {
  const Eigen::Matrix2d P = Eigen::Matrix2d::Identity();
  const auto out = kf_predict(fresh_track({0, 0, 0}, {0, 0, 0}, P), 0.1, 0.0);
  CHECK(out.covariance[0](0, 0) == doctest::Approx(1.01));
  CHECK(out.covariance[0](0, 1) == doctest::Approx(0.1));
  CHECK(out.covariance[0](1, 0) == doctest::Approx(0.1));
  CHECK(out.covariance[0](1, 1) == doctest::Approx(1.0));
}

TEST_CASE("kf_update: analytic limits and scalar gain") {
  const Eigen::Matrix2d P = Eigen::Matrix2d::Identity();

  // Vanishing measurement noise pulls the posterior onto the measurement.
  auto a = kf_update(fresh_track({0, 0, 0}, {0, 0, 0}, P), {1.0, 2.0, 3.0},
                     1e-6, 1.0);
  CHECK(std::abs(a.position.x() - 1.0) < 1e-6);
  CHECK(std::abs(a.position.y() - 2.0) < 1e-6);
  CHECK(std::abs(a.position.z() - 3.0) < 1e-6);

  // Vanishing prior covariance ignores the measurement.
  auto b = kf_update(fresh_track({0, 0, 0}, {0, 0, 0},
                                 Eigen::Matrix2d::Identity() * 1e-14),
                     {1.0, 1.0, 1.0}, 1.0, 1.0);
  CHECK(std::abs(b.position.x()) < 1e-6);

  // P_pos = 1, R = 1: gain 1/2, posterior is the midpoint.
  auto c = kf_update(fresh_track({0, 0, 0}, {0, 0, 0}, P), {1.0, 0.0, 0.0},
                     1.0, 1.0);
  CHECK(c.position.x() == doctest::Approx(0.5));
}

TEST_CASE("noise-free constant velocity target is recovered exactly") {
  const Eigen::Vector3d v{1.0, 0.0, 0.0};
  ObstacleTrack t;
  t.position = Eigen::Vector3d::Zero();
  Eigen::Matrix2d P0 = Eigen::Matrix2d::Zero();
  P0(0, 0) = 1.0;
  P0(1, 1) = 4.0;
  for (int a = 0; a < 3; ++a) t.covariance[a] = P0;
  t.measurement_count = 1;  // first measurement at t=0 already absorbed
  t.last_measurement = t.position;
  t.last_measurement_time = 0.0;

  const double dt = 0.1;
  for (int k = 1; k <= 10; ++k) {
    t = kf_predict(t, dt, 2.0);
    const Eigen::Vector3d z = v * (dt * k);
    t = kf_update(t, {z.x(), z.y(), z.z()}, 0.05, dt * k);
  }
  CHECK((t.velocity - v).norm() < 1e-6);

  // Predicted position five steps ahead.
  ObstacleTrack future = t;
  for (int k = 0; k < 5; ++k) future = kf_predict(future, dt, 2.0);
  const Eigen::Vector3d expected = v * (dt * 15);
  CHECK((future.position - expected).norm() < 1e-6);
}

TEST_CASE("covariance stays symmetric PSD through random sequences") {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  ObstacleTrack t;
  Eigen::Matrix2d P0 = Eigen::Matrix2d::Zero();
  P0(0, 0) = 1.0;
  P0(1, 1) = 4.0;
  for (int a = 0; a < 3; ++a) t.covariance[a] = P0;
  t.measurement_count = 2;
  double now = 0.0;
  for (int step = 0; step < 200; ++step) {
    const double dt = 0.02 + 0.1 * std::abs(unif(rng));
    now += dt;
    t = kf_predict(t, dt, 2.0);
    if (step % 3 != 0) {
      t = kf_update(t, {unif(rng), unif(rng), unif(rng)}, 0.05, now);
    }
    for (int a = 0; a < 3; ++a) {
      const Eigen::Matrix2d& P = t.covariance[a];
      CHECK(std::abs(P(0, 1) - P(1, 0)) < 1e-9);
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(P);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
    }
  }
}

TEST_CASE("predict_obstacle_clouds: rigid translation and count preservation") {
  ObstacleTrack a = fresh_track({0, 0, 0}, {1, 0, 0}, Eigen::Matrix2d::Identity());
  for (int i = 0; i < 12; ++i) a.member_cloud.points.push_back({0.1 * i, 0.0, 0.2});
  ObstacleTrack b = fresh_track({3, 3, 0}, {0, -0.5, 0}, Eigen::Matrix2d::Identity());
  for (int i = 0; i < 7; ++i) b.member_cloud.points.push_back({3.0, 3.0 + 0.1 * i, 0.2});

  const auto clouds = predict_obstacle_clouds({a, b}, 30, 0.1);
  REQUIRE(clouds.size() == 30);
  for (const PointCloud& c : clouds) CHECK(c.size() == 19);

  // Step 0 is the union of the current member clouds.
  CHECK(clouds[0].points[0].x == doctest::Approx(0.0));
  // Step 5 of track a: shifted +0.5 in x.
  CHECK(clouds[5].points[0].x == doctest::Approx(0.5));
  CHECK(clouds[5].points[0].y == doctest::Approx(0.0));
  // Track b moves -y at 0.5 m/s.
  CHECK(clouds[5].points[12].y == doctest::Approx(3.0 - 0.25));
}

TEST_CASE("two-point initialization recovers velocity on the second update") {
  TrackingParams params;
  TrackManager manager(params);

  PointCloud frame;
  for (int i = 0; i < 5; ++i) frame.points.push_back({0.05 * i, 0.0, 0.3});
  DynamicDetection det;
  det.indices = {0, 1, 2, 3, 4};
  det.centroid = {0.1, 0.0, 0.3};

  manager.update(frame, {det}, 0.0);
  REQUIRE(manager.tracks().size() == 1);
  CHECK(manager.tracks()[0].velocity.norm() == 0.0);

  // Same shape moved 0.06 m in +x after 0.03 s: v = 2 m/s.
  PointCloud frame2 = frame;
  for (Point3& p : frame2.points) p.x += 0.06;
  DynamicDetection det2 = det;
  det2.centroid = {0.16, 0.0, 0.3};
  manager.update(frame2, {det2}, 0.03);
  REQUIRE(manager.tracks().size() == 1);
  CHECK(manager.tracks()[0].velocity.x() == doctest::Approx(2.0));
  CHECK(manager.tracks()[0].position.x() == doctest::Approx(0.16));
}
