#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "handguide/controller.hpp"
#include "handguide/error.hpp"
#include "handguide/guidance.hpp"
#include "handguide/registration.hpp"

namespace handguide {

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Request is well-formed but the session is not ready for it.
class StateError : public Error {
 public:
  using Error::Error;
};

struct StateMessage {
  double t = 0.0;
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  std::optional<std::size_t> active_zone;
  double residual = 0.0;  // m, magnitude of the last unachieved displacement
  double sensitivity = 1.0;
};

enum class HandFrame { World, Base };

struct SessionOptions {
  GuidanceConfig guidance;
  double controller_dt = 0.004;  // s
  double max_acceleration = 2.0;
  PipelineParams pipeline;
};

/// Registry of guidance sessions. Every public call is atomic per session.
class SessionManager {
 public:
  explicit SessionManager(SessionOptions options = {});

  std::string create_session(std::string_view model_document);
  /// Replaces the model and resets guidance and controller state.
  void upload_model(const std::string& id, std::string_view model_document);
  std::string model_document(const std::string& id) const;
  std::size_t joint_count(const std::string& id) const;

  void set_base_pose(const std::string& id, const RigidTransform& pose);
  std::optional<RigidTransform> base_pose(const std::string& id) const;

  /// Semi-automatic referencing: registers the robot at its current configuration
  /// into the scene and adopts the result as the base pose.
  RegistrationResult register_base(const std::string& id, const RigidTransform& seed_pose,
                                   const PointCloud& scene, Method method, const Preset& preset);

  StateMessage stream_hand(const std::string& id, const HandSample& sample, HandFrame frame = HandFrame::World);
  GuidanceConfig set_sensitivity(const std::string& id, double sensitivity);
  GuidanceConfig config(const std::string& id) const;
  StateMessage state(const std::string& id) const;

  /// Blocks until the session's state version exceeds `seen` or the timeout elapses.
  /// Returns the current version and a snapshot.
  std::pair<std::uint64_t, StateMessage> wait_for_update(const std::string& id, std::uint64_t seen,
                                                         std::chrono::milliseconds timeout) const;
  std::size_t session_count() const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;

  SessionOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

nlohmann::json to_json(const StateMessage& msg);
nlohmann::json to_json(const GuidanceConfig& config);
nlohmann::json to_json(const RegistrationResult& result);
nlohmann::json to_json(const RigidTransform& transform);
/// Accepts {"rotation": [9], "translation": [3]} or {"xyz": [3], "rpy": [3]}.
RigidTransform transform_from(const nlohmann::json& j);
/// {"t", "x", "y", "z", "tracked"} or {"t", "position": [3], "tracked"}; optional "frame": "world" | "base".
std::pair<HandSample, HandFrame> hand_sample_from(const nlohmann::json& j);

}  // namespace handguide
