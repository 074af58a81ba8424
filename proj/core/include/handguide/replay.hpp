#pragma once

#include <iosfwd>
#include <vector>

#include "handguide/controller.hpp"
#include "handguide/guidance.hpp"

namespace handguide {

struct ReplayOptions {
  GuidanceConfig guidance;
  double dt = 0.004;            // controller tick, s (250 Hz)
  double settle_time = 2.0;     // s of ticking after the last sample
  double max_acceleration = 2.0;
  RigidTransform base;          // robot base in the hand-sample frame
  std::optional<Configuration> initial_q;
};

struct JointRecord {
  double t = 0.0;
  Eigen::VectorXd q;
};

/// Feeds samples through the guidance session and the controller; one record per
/// controller tick, starting at the first sample's timestamp.
std::vector<JointRecord> replay(const RobotModel& model, const std::vector<HandSample>& samples,
                                const ReplayOptions& options = {});

/// Line-delimited {"t": ..., "q": [...]} records.
void write_joint_trajectory(std::ostream& out, const std::vector<JointRecord>& records);

}  // namespace handguide
