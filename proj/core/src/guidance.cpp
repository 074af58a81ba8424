#include "handguide/guidance.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

#include "handguide/error.hpp"

namespace handguide {

void GuidanceConfig::validate() const {
  if (!(sensitivity > 0.0)) throw ValidationError("sensitivity must be positive");
  if (!(residual_tol > 0.0)) throw ValidationError("residual_tol must be positive");
  if (!(axis_tol > 0.0)) throw ValidationError("axis_tol must be positive");
  if (!(max_step_angle > 0.0)) throw ValidationError("max_step_angle must be positive");
  if (!(zone_margin >= 0.0)) throw ValidationError("zone_margin must be non-negative");
}

double signed_angle_about_axis(const Vec3& r, const Vec3& t, const Vec3& a, double axis_tol) {
  if (r.norm() <= axis_tol) throw ValidationError("radius vector is degenerate (point on the axis)");
  const double angle = std::atan2(r.cross(t).dot(a), r.dot(t));
  // atan2 yields [-pi, pi]; fold -pi onto pi.
  return angle == -M_PI ? M_PI : angle;
}

JointStep joint_step(const Vec3& p, const Vec3& a, double joint_angle, const JointLimits& limits,
                     const Vec3& hand_prev, const Vec3& hand_cur, const GuidanceConfig& config) {
  JointStep step;
  const Vec3 r = project_onto_plane(hand_prev - p, a);
  if (r.norm() <= config.axis_tol) {
    step.hand_rotated = hand_prev;
    step.residual = hand_cur - hand_prev;
    return step;
  }
  const Vec3 t = r + project_onto_plane(hand_cur - hand_prev, a);
  double desired = signed_angle_about_axis(r, t, a, config.axis_tol);
  desired = std::clamp(desired, -config.max_step_angle, config.max_step_angle);

  const double next = joint_angle + desired;
  if (limits.contains(next)) {
    step.applied = desired;
  } else if (config.limit_policy == LimitPolicy::Clamp) {
    step.applied = std::clamp(next, limits.lower, limits.upper) - joint_angle;
  } else {
    step.applied = 0.0;
  }

  if (step.applied == 0.0) {
    step.hand_rotated = hand_prev;
  } else {
    step.hand_rotated = p + Eigen::AngleAxisd(step.applied, a) * (hand_prev - p);
  }
  step.residual = hand_cur - step.hand_rotated;
  return step;
}

GuidanceUpdate decompose(const RobotModel& model, const Configuration& q, const Vec3& hand_prev,
                         const Vec3& hand_cur, std::size_t start_joint, const GuidanceConfig& config,
                         const RigidTransform& base) {
  if (static_cast<std::size_t>(q.size()) != model.joint_count()) {
    throw DimensionError("configuration size does not match joint count");
  }
  if (start_joint >= model.joint_count()) throw DimensionError("start joint out of range");

  GuidanceUpdate update;
  update.dq = Eigen::VectorXd::Zero(q.size());
  update.residual = hand_cur - hand_prev;
  if (update.residual.norm() < config.residual_tol) return update;

  // Joint k's frame depends only on q[0..k-1], which are untouched while walking base-ward.
  const auto poses = forward_kinematics(model, q, base);
  Vec3 prev = hand_prev;
  for (std::size_t k = start_joint + 1; k-- > 0;) {
    const auto& joint = model.joints()[k];
    const RigidTransform frame = poses[k] * joint.origin;
    const Vec3 axis = (frame.rotation() * joint.axis).normalized();
    const auto idx = static_cast<Eigen::Index>(k);
    const JointStep step =
        joint_step(frame.translation(), axis, q[idx], joint.limits, prev, hand_cur, config);
    update.dq[idx] = step.applied;
    update.residual = step.residual;
    update.joints_used.push_back(k);
    prev = step.hand_rotated;
    if (update.residual.norm() < config.residual_tol) break;
  }
  return update;
}

SessionStepResult session_step(const GuidanceState& state, const RobotModel& model,
                               const HandSample& sample, const GuidanceConfig& config,
                               const RigidTransform& base) {
  if (state.last_t && !(sample.t > *state.last_t)) {
    throw StreamError("hand sample at t=" + std::to_string(sample.t) +
                      " does not follow t=" + std::to_string(*state.last_t));
  }
  SessionStepResult out{state, std::nullopt};
  out.state.last_t = sample.t;
  if (!sample.tracked || !sample.position.allFinite()) {
    out.state.mode = Idle{};
    return out;
  }
  const auto poses = forward_kinematics(model, state.q, base);
  const auto zone = active_zone(model, poses, sample.position, config.zone_margin);
  if (!zone) {
    out.state.mode = Idle{};
    return out;
  }
  const auto* engaged = std::get_if<Engaged>(&state.mode);
  if (engaged == nullptr || engaged->zone != *zone) {
    out.state.mode = Engaged{*zone, sample.position};
    return out;
  }
  const Vec3 target = scaled_target(engaged->last_position, sample.position, config.sensitivity);
  GuidanceUpdate update =
      decompose(model, state.q, engaged->last_position, target, *zone, config, base);
  for (Eigen::Index i = 0; i < update.dq.size(); ++i) {
    if (update.dq[i] == 0.0) continue;
    const auto& limits = model.joints()[static_cast<std::size_t>(i)].limits;
    out.state.q[i] = std::clamp(state.q[i] + update.dq[i], limits.lower, limits.upper);
    update.dq[i] = out.state.q[i] - state.q[i];
  }
  out.state.mode = Engaged{*zone, sample.position};
  out.update = std::move(update);
  return out;
}

std::vector<HandSample> read_hand_trajectory(std::istream& in) {
  std::vector<HandSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    try {
      HandSample s;
      s.t = rec.at("t").get<double>();
      s.position = {rec.at("x").get<double>(), rec.at("y").get<double>(), rec.at("z").get<double>()};
      s.tracked = rec.value("tracked", true);
      samples.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad hand sample record: ") + e.what(), line_no);
    }
  }
  return samples;
}

std::vector<HandSample> read_hand_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trajectory '" + path + "'");
  return read_hand_trajectory(in);
}

void write_hand_trajectory(std::ostream& out, const std::vector<HandSample>& samples) {
  for (const auto& s : samples) {
    nlohmann::json rec{{"t", s.t},
                       {"x", s.position.x()},
                       {"y", s.position.y()},
                       {"z", s.position.z()},
                       {"tracked", s.tracked}};
    out << rec.dump() << '\n';
  }
}

}  // namespace handguide
