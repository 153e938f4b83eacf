#include "ftdnav/robot.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ftdnav {

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  else if (w > std::numbers::pi) w -= two_pi;
  return w;
}

RobotState dynamics_step(const RobotState& x, const ControlInput& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dynamics_step: dt must be > 0");
  RobotState next;
  next.x = x.x + std::cos(x.theta) * u.v * dt;
  next.y = x.y + std::sin(x.theta) * u.v * dt;
  next.theta = wrap_angle(x.theta + u.omega * dt);
  return next;
}

void dynamics_jacobians(const RobotState& x, const ControlInput& u, double dt,
                        Eigen::Matrix3d& A, Eigen::Matrix<double, 3, 2>& B) {
  A.setIdentity();
  A(0, 2) = -std::sin(x.theta) * u.v * dt;
  A(1, 2) = std::cos(x.theta) * u.v * dt;
  B.setZero();
  B(0, 0) = std::cos(x.theta) * dt;
  B(1, 0) = std::sin(x.theta) * dt;
  B(2, 1) = dt;
}

double barrier_value(double px, double py, const Point3& risk, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("barrier_value: delta must be > 0");
  return planar_dist_sq(risk, px, py) - delta * delta;
}

}  // namespace ftdnav
