#pragma once

#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "handguide/model.hpp"

namespace handguide {

enum class LimitPolicy { Reject, Clamp };

struct GuidanceConfig {
  double sensitivity = 1.0;     // scale applied to raw hand displacement
  double residual_tol = 1e-4;   // m; propagation stops below this
  double axis_tol = 1e-6;       // m; hand closer than this to an axis skips the joint
  double max_step_angle = 0.1;  // rad per frame
  LimitPolicy limit_policy = LimitPolicy::Reject;
  double zone_margin = 0.05;    // m

  /// Throws ValidationError on non-positive tolerances or sensitivity.
  void validate() const;
};

struct HandSample {
  double t = 0.0;  // s
  Vec3 position = Vec3::Zero();
  bool tracked = true;
};

struct Idle {};
struct Engaged {
  std::size_t zone = 0;
  Vec3 last_position = Vec3::Zero();
};

struct GuidanceState {
  std::variant<Idle, Engaged> mode;
  Configuration q;
  std::optional<double> last_t;

  static GuidanceState Start(Configuration q0) { return {Idle{}, std::move(q0), std::nullopt}; }
  std::optional<std::size_t> engaged_zone() const {
    if (const auto* e = std::get_if<Engaged>(&mode)) return e->zone;
    return std::nullopt;
  }
};

struct GuidanceUpdate {
  Eigen::VectorXd dq;
  Vec3 residual = Vec3::Zero();
  std::vector<std::size_t> joints_used;
};

/// v with its component along the unit normal n removed.
inline Vec3 project_onto_plane(const Vec3& v, const Vec3& n) { return v - v.dot(n) * n; }

/// Angle in (-pi, pi] that rotates r onto the direction of t about a.
/// r and t must lie in the plane normal to a; throws ValidationError if |r| <= axis_tol.
double signed_angle_about_axis(const Vec3& r, const Vec3& t, const Vec3& a, double axis_tol = 1e-6);

struct JointStep {
  double applied = 0.0;  // rad
  Vec3 hand_rotated = Vec3::Zero();
  Vec3 residual = Vec3::Zero();
};

/// One joint's share of a hand displacement: rotate the previous hand position
/// about the joint axis toward the current one, subject to the per-frame cap and
/// the joint limits.
JointStep joint_step(const Vec3& joint_origin, const Vec3& axis, double joint_angle,
                     const JointLimits& limits, const Vec3& hand_prev, const Vec3& hand_cur,
                     const GuidanceConfig& config);

/// hand_prev + sensitivity * (hand_raw - hand_prev).
inline Vec3 scaled_target(const Vec3& hand_prev, const Vec3& hand_raw, double sensitivity) {
  return hand_prev + sensitivity * (hand_raw - hand_prev);
}

/// Distributes the displacement hand_prev -> hand_cur over joints start_joint, ..., 0.
/// hand_cur must already be sensitivity-scaled.
GuidanceUpdate decompose(const RobotModel& model, const Configuration& q, const Vec3& hand_prev,
                         const Vec3& hand_cur, std::size_t start_joint, const GuidanceConfig& config,
                         const RigidTransform& base = RigidTransform::Identity());

struct SessionStepResult {
  GuidanceState state;
  std::optional<GuidanceUpdate> update;
};

/// Advances a guidance session by one hand sample. The first sample inside a zone
/// only engages it; motion is commanded from the second sample on.
SessionStepResult session_step(const GuidanceState& state, const RobotModel& model,
                               const HandSample& sample, const GuidanceConfig& config,
                               const RigidTransform& base = RigidTransform::Identity());

/// Line-delimited {"t","x","y","z","tracked"} records; blank lines are skipped.
std::vector<HandSample> read_hand_trajectory(std::istream& in);
std::vector<HandSample> read_hand_trajectory_file(const std::string& path);
void write_hand_trajectory(std::ostream& out, const std::vector<HandSample>& samples);

}  // namespace handguide
