#include "handguide/replay.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "handguide/error.hpp"

namespace handguide {

std::vector<JointRecord> replay(const RobotModel& model, const std::vector<HandSample>& samples,
                                const ReplayOptions& options) {
  options.guidance.validate();
  if (!(options.dt > 0.0)) throw ValidationError("replay dt must be positive");
  std::vector<JointRecord> records;
  if (samples.empty()) return records;

  const Configuration q0 = options.initial_q.value_or(model.zero_configuration());
  if (static_cast<std::size_t>(q0.size()) != model.joint_count()) {
    throw DimensionError("initial configuration does not match the joint count");
  }
  const MotionLimits limits = MotionLimits::FromModel(model, options.max_acceleration);
  GuidanceState guidance = GuidanceState::Start(q0);
  ControllerState controller = ControllerState::AtRest(q0);

  const double t0 = samples.front().t;
  long tick = 0;
  auto now = [&] { return t0 + static_cast<double>(tick) * options.dt; };
  auto advance_to = [&](double t) {
    while (now() + options.dt <= t + 1e-12) {
      controller = controller_tick(controller, limits, options.dt);
      ++tick;
      records.push_back({now(), controller.position});
    }
  };

  records.push_back({now(), controller.position});
  for (const auto& sample : samples) {
    advance_to(sample.t);
    auto step = session_step(guidance, model, sample, options.guidance, options.base);
    guidance = std::move(step.state);
    if (step.update) controller.target = guidance.q;
  }
  advance_to(samples.back().t + options.settle_time);
  return records;
}

void write_joint_trajectory(std::ostream& out, const std::vector<JointRecord>& records) {
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "{\"t\":%.6f,\"q\":[", r.t);
    out << buf;
    for (Eigen::Index i = 0; i < r.q.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.9g", i ? "," : "", r.q[i]);
      out << buf;
    }
    out << "]}\n";
  }
}

}  // namespace handguide
