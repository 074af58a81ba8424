#include "handguide/controller.hpp"

#include <algorithm>
#include <cmath>

#include "handguide/error.hpp"

namespace handguide {

MotionLimits MotionLimits::FromModel(const RobotModel& model, double max_acceleration) {
  MotionLimits limits;
  const auto n = static_cast<Eigen::Index>(model.joint_count());
  limits.max_velocity.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    limits.max_velocity[i] = model.joints()[static_cast<std::size_t>(i)].limits.velocity;
  }
  limits.max_acceleration = Eigen::VectorXd::Constant(n, max_acceleration);
  limits.validate();
  return limits;
}

void MotionLimits::validate() const {
  if (max_velocity.size() != max_acceleration.size()) throw DimensionError("motion limit sizes differ");
  if (max_velocity.size() > 0 && !(max_velocity.minCoeff() > 0.0 && max_acceleration.minCoeff() > 0.0)) {
    throw ValidationError("motion limits must be positive");
  }
}

namespace {

// Largest speed from which braking at `accel` in steps of dt (velocity applied
// after each update) covers exactly `distance`.
double braking_speed(double distance, double accel, double dt) {
  const double unit = accel * dt * dt;
  const double d = distance / unit;
  const double n = std::floor((-1.0 + std::sqrt(1.0 + 8.0 * d)) / 2.0);
  const double f = std::clamp((d - n * (n + 1.0) / 2.0) / (n + 1.0), 0.0, 1.0);
  return (n + f) * accel * dt;
}

}  // namespace

ControllerState controller_tick(const ControllerState& state, const MotionLimits& limits, double dt) {
  if (!(dt > 0.0)) throw ValidationError("controller dt must be positive");
  const Eigen::Index n = state.position.size();
  if (state.velocity.size() != n || state.target.size() != n || limits.max_velocity.size() != n) {
    throw DimensionError("controller state and limits differ in size");
  }
  ControllerState next = state;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double vmax = limits.max_velocity[i];
    const double amax = limits.max_acceleration[i];
    const double error = state.target[i] - state.position[i];
    const double v = state.velocity[i];
    const double reachable = std::min(vmax, braking_speed(std::abs(error), amax, dt));
    const double desired = std::copysign(reachable, error);
    double v_next = std::clamp(desired, v - amax * dt, v + amax * dt);
    v_next = std::clamp(v_next, -vmax, vmax);
    next.velocity[i] = v_next;
    next.position[i] = state.position[i] + v_next * dt;
    if (v_next == desired && reachable * dt >= std::abs(error)) {
      // Final step lands on the target.
      next.position[i] = state.target[i];
    }
  }
  return next;
}

}  // namespace handguide
