#include "handguide/service.hpp"

#include <chrono>

namespace handguide {

struct SessionManager::Session {
  mutable std::mutex mutex;
  mutable std::condition_variable changed;
  std::uint64_t version = 0;

  std::string id;
  std::shared_ptr<const RobotModel> model;
  std::string model_document;
  std::optional<RigidTransform> base_pose;
  GuidanceConfig config;
  GuidanceState guidance;
  MotionLimits limits;
  ControllerState controller;
  std::optional<double> controller_time;
  std::optional<std::size_t> active_zone;
  double residual = 0.0;

  void reset(std::shared_ptr<const RobotModel> m, std::string doc, double max_acceleration) {
    model = std::move(m);
    model_document = std::move(doc);
    const Configuration q0 = model->zero_configuration();
    guidance = GuidanceState::Start(q0);
    limits = MotionLimits::FromModel(*model, max_acceleration);
    controller = ControllerState::AtRest(q0);
    controller_time.reset();
    active_zone.reset();
    residual = 0.0;
  }

  StateMessage snapshot() const {
    StateMessage msg;
    msg.t = controller_time.value_or(0.0);
    msg.q = controller.position;
    msg.qdot = controller.velocity;
    msg.active_zone = active_zone;
    msg.residual = residual;
    msg.sensitivity = config.sensitivity;
    return msg;
  }

  void bump() {
    ++version;
    changed.notify_all();
  }
};

SessionManager::SessionManager(SessionOptions options) : options_(std::move(options)) {
  options_.guidance.validate();
  if (!(options_.controller_dt > 0.0)) throw ValidationError("controller dt must be positive");
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

std::string SessionManager::create_session(std::string_view model_document) {
  auto model = std::make_shared<const RobotModel>(load_model(model_document));
  auto session = std::make_shared<Session>();
  session->config = options_.guidance;
  session->reset(std::move(model), std::string(model_document), options_.max_acceleration);
  std::lock_guard lock(mutex_);
  session->id = "s" + std::to_string(next_id_++);
  sessions_.emplace(session->id, session);
  return session->id;
}

void SessionManager::upload_model(const std::string& id, std::string_view model_document) {
  auto model = std::make_shared<const RobotModel>(load_model(model_document));
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  s->reset(std::move(model), std::string(model_document), options_.max_acceleration);
  s->bump();
}

std::string SessionManager::model_document(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->model_document;
}

std::size_t SessionManager::joint_count(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->model->joint_count();
}

void SessionManager::set_base_pose(const std::string& id, const RigidTransform& pose) {
  if (pose.orthonormality_error() > 1e-6) throw ValidationError("base pose rotation is not orthonormal");
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  s->base_pose = pose;
  s->guidance.mode = Idle{};
  s->bump();
}

std::optional<RigidTransform> SessionManager::base_pose(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->base_pose;
}

RegistrationResult SessionManager::register_base(const std::string& id, const RigidTransform& seed_pose,
                                                 const PointCloud& scene, Method method, const Preset& preset) {
  if (scene.empty()) throw ValidationError("scene cloud is empty");
  const auto s = find(id);
  std::shared_ptr<const RobotModel> model;
  Configuration q;
  {
    std::lock_guard lock(s->mutex);
    model = s->model;
    q = s->controller.position;
  }
  // Registration runs outside the session lock; the robot is assumed static meanwhile.
  const PipelineResult res = register_pipeline(scene, *model, q, seed_pose, method, preset, options_.pipeline);
  std::lock_guard lock(s->mutex);
  if (s->model == model) {
    s->base_pose = res.registration.transform;
    s->guidance.mode = Idle{};
    s->bump();
  }
  return res.registration;
}

StateMessage SessionManager::stream_hand(const std::string& id, const HandSample& sample, HandFrame frame) {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (!s->base_pose) throw StateError("base pose is not set; place or register the robot first");
  if (s->guidance.last_t && !(sample.t > *s->guidance.last_t)) {
    throw StreamError("out-of-order hand sample: t=" + std::to_string(sample.t) +
                      " after t=" + std::to_string(*s->guidance.last_t));
  }
  // Guidance runs in the base frame; world-frame samples are mapped through the base pose.
  HandSample local = sample;
  if (frame == HandFrame::World) local.position = s->base_pose->inverse() * sample.position;

  if (!s->controller_time) s->controller_time = sample.t;
  const double dt = options_.controller_dt;
  while (*s->controller_time + dt <= sample.t + 1e-12) {
    s->controller = controller_tick(s->controller, s->limits, dt);
    *s->controller_time += dt;
  }

  auto step = session_step(s->guidance, *s->model, local, s->config);
  s->guidance = std::move(step.state);
  s->active_zone = s->guidance.engaged_zone();
  if (step.update) {
    s->controller.target = s->guidance.q;
    s->residual = step.update->residual.norm();
  }
  s->bump();
  return s->snapshot();
}

GuidanceConfig SessionManager::set_sensitivity(const std::string& id, double sensitivity) {
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    throw ValidationError("sensitivity must be a positive number");
  }
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  s->config.sensitivity = sensitivity;
  s->bump();
  return s->config;
}

GuidanceConfig SessionManager::config(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->config;
}

StateMessage SessionManager::state(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->snapshot();
}

std::pair<std::uint64_t, StateMessage> SessionManager::wait_for_update(const std::string& id, std::uint64_t seen,
                                                                        std::chrono::milliseconds timeout) const {
  const auto s = find(id);
  std::unique_lock lock(s->mutex);
  s->changed.wait_for(lock, timeout, [&] { return s->version > seen; });
  return {s->version, s->snapshot()};
}

std::size_t SessionManager::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

nlohmann::json to_json(const StateMessage& msg) {
  return {{"t", msg.t},
          {"q", to_vector(msg.q)},
          {"qdot", to_vector(msg.qdot)},
          {"active_zone", msg.active_zone ? nlohmann::json(*msg.active_zone) : nlohmann::json(nullptr)},
          {"residual", msg.residual},
          {"sensitivity", msg.sensitivity}};
}

nlohmann::json to_json(const GuidanceConfig& c) {
  return {{"sensitivity", c.sensitivity},
          {"residual_tol", c.residual_tol},
          {"axis_tol", c.axis_tol},
          {"max_step_angle", c.max_step_angle},
          {"limit_policy", c.limit_policy == LimitPolicy::Clamp ? "clamp" : "reject"},
          {"zone_margin", c.zone_margin}};
}

nlohmann::json to_json(const RigidTransform& t) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(t.rotation()(r, c));
  }
  return {{"rotation", rot}, {"translation", {t.translation().x(), t.translation().y(), t.translation().z()}}};
}

nlohmann::json to_json(const RegistrationResult& r) {
  nlohmann::json j{{"transform", to_json(r.transform)},
                   {"rms", r.rms},
                   {"converged", r.converged},
                   {"iterations", r.iterations}};
  j["lcp"] = r.lcp ? nlohmann::json(*r.lcp) : nlohmann::json(nullptr);
  return j;
}

RigidTransform transform_from(const nlohmann::json& j) { return transform_from_json(j.dump()); }

std::pair<HandSample, HandFrame> hand_sample_from(const nlohmann::json& j) {
  try {
    HandSample s;
    s.t = j.at("t").get<double>();
    if (j.contains("position")) {
      const auto p = j.at("position").get<std::vector<double>>();
      if (p.size() != 3) throw ValidationError("position needs 3 entries");
      s.position = {p[0], p[1], p[2]};
    } else {
      s.position = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
    }
    s.tracked = j.value("tracked", true);
    HandFrame frame = HandFrame::World;
    const std::string f = j.value("frame", std::string("world"));
    if (f == "base") {
      frame = HandFrame::Base;
    } else if (f != "world") {
      throw ValidationError("frame must be 'world' or 'base'");
    }
    return {s, frame};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad hand sample: ") + e.what());
  }
}

}  // namespace handguide
