#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "handguide/scene.hpp"
#include "handguide/service.hpp"

using namespace handguide;

namespace {

const std::string kData = HANDGUIDE_DATA_DIR;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SessionOptions wide_steps() {
  SessionOptions o;
  o.guidance.max_step_angle = 0.5;
  return o;
}

}  // namespace

TEST(Service, CreateSessions) {
  SessionManager m;
  const std::string a = m.create_session(slurp(kData + "/robots/kr5_like.json"));
  const std::string b = m.create_session(slurp(kData + "/robots/kr5_like.json"));
  EXPECT_NE(a, b);
  EXPECT_EQ(m.session_count(), 2u);
  EXPECT_EQ(m.joint_count(a), 6u);
  const StateMessage s = m.state(a);
  EXPECT_EQ(s.q, Eigen::VectorXd::Zero(6));
  EXPECT_EQ(s.qdot.size(), 6);
  EXPECT_FALSE(s.active_zone.has_value());
  EXPECT_FALSE(m.base_pose(a).has_value());
  EXPECT_EQ(m.model_document(a), slurp(kData + "/robots/kr5_like.json"));
}

TEST(Service, ErrorsByKind) {
  SessionManager m;
  try {
    m.create_session("{\n  \"name\": \"x\",\n  \"links\": [,\n}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(m.state("nope"), NotFoundError);
  EXPECT_THROW(m.set_sensitivity("nope", 1.0), NotFoundError);
  const std::string id = m.create_session(slurp(kData + "/robots/planar2.json"));
  EXPECT_THROW(m.stream_hand(id, {0.0, Vec3(2, 0, 0), true}), StateError);
  EXPECT_THROW(m.set_sensitivity(id, 0.0), ValidationError);
  EXPECT_THROW(m.set_sensitivity(id, -1.0), ValidationError);
  RigidTransform bad = RigidTransform::FromMatrix(Eigen::Matrix4d::Identity() * 2.0);
  EXPECT_THROW(m.set_base_pose(id, bad), ValidationError);
  m.set_base_pose(id, RigidTransform::Identity());
  m.stream_hand(id, {1.0, Vec3(2, 0, 0), true});
  EXPECT_THROW(m.stream_hand(id, {1.0, Vec3(2, 0, 0), true}), StreamError);
}

TEST(Service, OutsideZonesAndEntryFrame) {
  SessionManager m(wide_steps());
  const std::string id = m.create_session(slurp(kData + "/robots/planar2.json"));
  m.set_base_pose(id, RigidTransform::Identity());
  EXPECT_EQ(m.base_pose(id)->matrix(), Eigen::Matrix4d::Identity());
  StateMessage s = m.stream_hand(id, {0.0, Vec3(5, 5, 5), true});
  EXPECT_FALSE(s.active_zone.has_value());
  EXPECT_EQ(s.q, Eigen::VectorXd::Zero(2));
  s = m.stream_hand(id, {0.1, Vec3(2, 0, 0), true});
  EXPECT_EQ(s.active_zone, std::optional<std::size_t>(1));
  EXPECT_EQ(s.q, Eigen::VectorXd::Zero(2));
}

TEST(Service, TwoSampleSequenceMovesTowardDecomposition) {
  SessionManager m(wide_steps());
  const std::string id = m.create_session(slurp(kData + "/robots/planar2.json"));
  m.set_base_pose(id, RigidTransform::Identity());
  m.stream_hand(id, {0.0, Vec3(2, 0, 0), true});
  StateMessage s = m.stream_hand(id, {0.0333333333, Vec3(2, 0.2, 0), true});
  EXPECT_NEAR(s.residual, 0.019708, 5e-7);
  s = m.stream_hand(id, {0.2, Vec3(2, 0.2, 0), false});
  EXPECT_GT(s.qdot[1], 0.0);
  EXPECT_GT(s.q[1], 0.0);
  // Untracked samples let the controller settle without new targets.
  s = m.stream_hand(id, {3.0, Vec3(2, 0.2, 0), false});
  EXPECT_NEAR(s.q[0], 0.000971, 5e-7);
  EXPECT_NEAR(s.q[1], 0.197396, 5e-7);
  EXPECT_EQ(s.qdot, Eigen::VectorXd::Zero(2));
}

TEST(Service, WorldAndBaseFrames) {
  const RigidTransform base = RigidTransform::FromXyzRpy({1, 2, 0.5}, {0, 0, 1.0});
  SessionManager world_mgr(wide_steps());
  SessionManager base_mgr(wide_steps());
  const std::string w = world_mgr.create_session(slurp(kData + "/robots/planar2.json"));
  const std::string b = base_mgr.create_session(slurp(kData + "/robots/planar2.json"));
  world_mgr.set_base_pose(w, base);
  base_mgr.set_base_pose(b, base);
  const Vec3 p0(2, 0, 0);
  const Vec3 p1(2, 0.1, 0);
  world_mgr.stream_hand(w, {0.0, base * p0, true}, HandFrame::World);
  base_mgr.stream_hand(b, {0.0, p0, true}, HandFrame::Base);
  world_mgr.stream_hand(w, {0.1, base * p1, true}, HandFrame::World);
  base_mgr.stream_hand(b, {0.1, p1, true}, HandFrame::Base);
  const StateMessage sw = world_mgr.stream_hand(w, {2.0, base * p1, false});
  const StateMessage sb = base_mgr.stream_hand(b, {2.0, p1, false}, HandFrame::Base);
  EXPECT_NEAR(sw.q[1], std::atan2(0.1, 1.0), 1e-9);
  EXPECT_LT((sw.q - sb.q).norm(), 1e-9);
}

TEST(Service, SensitivityDoublesSingleJointStep) {
  for (const double s : {1.0, 2.0}) {
    SessionManager m(wide_steps());
    const std::string id = m.create_session(slurp(kData + "/robots/planar2.json"));
    m.set_base_pose(id, RigidTransform::Identity());
    const GuidanceConfig echoed = m.set_sensitivity(id, s);
    EXPECT_EQ(echoed.sensitivity, s);
    EXPECT_EQ(m.config(id).sensitivity, s);
    m.stream_hand(id, {0.0, Vec3(2, 0, 0), true});
    m.stream_hand(id, {0.1, Vec3(2, 0.1, 0), true});
    const StateMessage st = m.stream_hand(id, {2.0, Vec3(2, 0.1, 0), false});
    EXPECT_EQ(st.sensitivity, s);
    EXPECT_NEAR(st.q[1], std::atan2(0.1 * s, 1.0), 1e-9);
  }
}

TEST(Service, UploadModelResetsState) {
  SessionManager m(wide_steps());
  const std::string id = m.create_session(slurp(kData + "/robots/planar2.json"));
  m.set_base_pose(id, RigidTransform::Identity());
  m.stream_hand(id, {0.0, Vec3(2, 0, 0), true});
  m.stream_hand(id, {0.1, Vec3(2, 0.1, 0), true});
  m.upload_model(id, slurp(kData + "/robots/kr5_like.json"));
  EXPECT_EQ(m.joint_count(id), 6u);
  EXPECT_EQ(m.state(id).q, Eigen::VectorXd::Zero(6));
}

TEST(Service, SemiAutomaticRegistrationSetsBasePose) {
  SessionOptions o;
  o.pipeline.model_seed = 31;
  SessionManager m(o);
  const std::string model_doc = slurp(kData + "/robots/kr5_like.json");
  const std::string id = m.create_session(model_doc);
  const RobotModel model = load_model(model_doc);
  SceneSpec spec;
  spec.base_pose = RigidTransform::FromXyzRpy({0.3, 0.1, 0}, {0, 0, 0.4});
  spec.q = model.zero_configuration();
  spec.seed = 31;
  const Scene scene = synth_scene(model, spec);
  const RegistrationResult r = m.register_base(id, spec.base_pose, scene.cloud, Method::Icp, preset_small());
  EXPECT_LT(r.rms, 1e-3);
  const PoseError e = pose_error(*m.base_pose(id), scene.ground_truth);
  EXPECT_LT(e.translation, 1e-3);
  EXPECT_LT(e.rotation, 0.1 * M_PI / 180.0);
  try {
    m.register_base(id, RigidTransform::Translation({10, 0, 0}), scene.cloud, Method::Icp, preset_small());
    FAIL();
  } catch (const RegistrationError& err) {
    EXPECT_EQ(err.stage(), "crop");
  }
  EXPECT_THROW(m.register_base(id, spec.base_pose, PointCloud{}, Method::Icp, preset_small()), ValidationError);
}

TEST(Service, ConcurrentReadersSeeWholeSnapshots) {
  SessionManager m(wide_steps());
  const std::string id = m.create_session(slurp(kData + "/robots/planar2.json"));
  m.set_base_pose(id, RigidTransform::Identity());
  const StateMessage initial = m.state(id);

  std::vector<StateMessage> written;
  std::atomic<bool> done{false};
  std::vector<std::vector<StateMessage>> seen(3);
  std::vector<std::thread> readers;
  for (auto& bucket : seen) {
    readers.emplace_back([&, b = &bucket] {
      while (!done && b->size() < 5000) {
        b->push_back(m.state(id));
        std::this_thread::yield();
      }
    });
  }
  for (int i = 0; i < 400; ++i) {
    const double y = 0.2 * std::sin(i * 0.05);
    written.push_back(m.stream_hand(id, {0.01 * i, Vec3(2, y, 0), true}));
  }
  done = true;
  for (auto& t : readers) t.join();

  const auto same = [](const StateMessage& a, const StateMessage& b) {
    return a.t == b.t && a.q == b.q && a.qdot == b.qdot && a.active_zone == b.active_zone &&
           a.residual == b.residual;
  };
  std::size_t checked = 0;
  for (const auto& bucket : seen) {
    for (const auto& s : bucket) {
      bool found = same(s, initial);
      for (std::size_t i = 0; i < written.size() && !found; ++i) found = same(s, written[i]);
      EXPECT_TRUE(found) << "torn snapshot at t=" << s.t;
      if (++checked > 3000) break;
    }
  }
  EXPECT_EQ(m.state(id).q, m.state(id).q);
}

TEST(Service, WaitForUpdate) {
  SessionManager m;
  const std::string id = m.create_session(slurp(kData + "/robots/planar2.json"));
  const auto [v0, s0] = m.wait_for_update(id, 1000, std::chrono::milliseconds(10));
  std::thread t([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    m.set_sensitivity(id, 1.5);
  });
  const auto [v1, s1] = m.wait_for_update(id, v0, std::chrono::seconds(5));
  t.join();
  EXPECT_GT(v1, v0);
  EXPECT_EQ(s1.sensitivity, 1.5);
}

TEST(ServiceJson, HandSampleAndTransformParsing) {
  auto [s, f] = hand_sample_from(nlohmann::json::parse(R"({"t": 1.5, "x": 1, "y": 2, "z": 3})"));
  EXPECT_EQ(s.t, 1.5);
  EXPECT_EQ(s.position, Vec3(1, 2, 3));
  EXPECT_TRUE(s.tracked);
  EXPECT_EQ(f, HandFrame::World);
  std::tie(s, f) = hand_sample_from(
      nlohmann::json::parse(R"({"t": 2, "position": [4, 5, 6], "tracked": false, "frame": "base"})"));
  EXPECT_EQ(s.position, Vec3(4, 5, 6));
  EXPECT_FALSE(s.tracked);
  EXPECT_EQ(f, HandFrame::Base);
  EXPECT_THROW(hand_sample_from(nlohmann::json::parse(R"({"x": 1})")), ValidationError);
  EXPECT_THROW(hand_sample_from(nlohmann::json::parse(R"({"t": 0, "position": [1, 2]})")), ValidationError);
  EXPECT_THROW(hand_sample_from(nlohmann::json::parse(R"({"t": 0, "x": 0, "y": 0, "z": 0, "frame": "hmd"})")),
               ValidationError);

  const RigidTransform t = RigidTransform::FromXyzRpy({1, 2, 3}, {0.1, 0.2, 0.3});
  EXPECT_LT((transform_from(to_json(t)).matrix() - t.matrix()).norm(), 1e-15);
  const nlohmann::json msg = to_json(StateMessage{0.5, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2), 1, 0.01, 2});
  EXPECT_EQ(msg["active_zone"], 1);
  EXPECT_EQ(msg["q"].size(), 2u);
  EXPECT_EQ(msg["sensitivity"], 2.0);
  EXPECT_TRUE(to_json(StateMessage{}).at("active_zone").is_null());
}
