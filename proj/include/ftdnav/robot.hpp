#pragma once

#include <Eigen/Dense>

#include "ftdnav/geometry.hpp"

namespace ftdnav {

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

/// Planar differential-drive pose.
struct RobotState {
  double x{0.0};
  double y{0.0};
  double theta{0.0};
};

struct ControlInput {
  double v{0.0};      // linear velocity, m/s
  double omega{0.0};  // angular velocity, rad/s
};

/// One explicit-Euler step of the unicycle model:
/// x' = x + [v cos(theta), v sin(theta), omega] * dt, heading re-wrapped.
RobotState dynamics_step(const RobotState& x, const ControlInput& u, double dt);

/// Jacobians of dynamics_step: A = d(next)/d(state), B = d(next)/d(input).
void dynamics_jacobians(const RobotState& x, const ControlInput& u, double dt,
                        Eigen::Matrix3d& A, Eigen::Matrix<double, 3, 2>& B);

/// Planar squared distance to a risk point minus delta^2: negative inside
/// the buffer, zero on its boundary.
double barrier_value(double px, double py, const Point3& risk, double delta);

}  // namespace ftdnav
