#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "handguide/service.hpp"

namespace httplib {
class Server;
}

namespace handguide {

/// HTTP front end for a SessionManager.
///
///   POST /sessions                      robot description -> {"id", "joint_count"}
///   PUT  /sessions/{id}/model           replace the robot description
///   GET  /sessions/{id}/model           robot description
///   PUT  /sessions/{id}/base_pose       transform -> {"base_pose"}
///   POST /sessions/{id}/register        multipart (seed_pose, method, preset, cloud | scene_spec)
///                                       or JSON with the same fields -> RegistrationResult
///   PUT  /sessions/{id}/sensitivity     {"sensitivity"} -> guidance config
///   GET  /sessions/{id}/state           StateMessage
///   POST /sessions/{id}/hand            HandSample -> StateMessage
///   POST /sessions/{id}/stream          line-delimited HandSamples -> line-delimited StateMessages
///   GET  /sessions/{id}/events          server-sent StateMessages on every change
class HttpService {
 public:
  explicit HttpService(SessionManager& sessions);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns false if the bind fails.
  bool bind(const std::string& host, int port);
  int port() const { return port_; }
  /// Serves until stop() is called.
  void listen();
  void stop();

 private:
  void install_routes();

  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
  std::atomic<bool> running_{false};
  int port_ = -1;
};

}  // namespace handguide
