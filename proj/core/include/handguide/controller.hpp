#pragma once

#include "handguide/model.hpp"

namespace handguide {

struct MotionLimits {
  Eigen::VectorXd max_velocity;      // rad/s
  Eigen::VectorXd max_acceleration;  // rad/s^2

  static MotionLimits FromModel(const RobotModel& model, double max_acceleration = 2.0);
  void validate() const;
};

struct ControllerState {
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
  Eigen::VectorXd target;

  static ControllerState AtRest(const Eigen::VectorXd& q) {
    return {q, Eigen::VectorXd::Zero(q.size()), q};
  }
};

/// One tick of per-joint online trapezoidal interpolation toward the target.
/// Velocity changes by at most max_acceleration * dt per tick and never exceeds
/// max_velocity; with a fixed target each joint stops on it exactly.
ControllerState controller_tick(const ControllerState& state, const MotionLimits& limits, double dt);

}  // namespace handguide
