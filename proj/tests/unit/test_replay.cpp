#include <gtest/gtest.h>

#include <sstream>

#include "handguide/error.hpp"
#include "handguide/replay.hpp"

using namespace handguide;

namespace {
const std::string kData = HANDGUIDE_DATA_DIR;
}

TEST(Replay, EmptyInputGivesEmptyOutput) {
  const RobotModel model = load_model_file(kData + "/robots/planar2.json");
  EXPECT_TRUE(replay(model, {}).empty());
}

TEST(Replay, UntrackedSamplesKeepQConstant) {
  const RobotModel model = load_model_file(kData + "/robots/planar2.json");
  std::vector<HandSample> samples;
  for (int i = 0; i < 30; ++i) samples.push_back({i / 30.0, Vec3(2.0, 0.01 * i, 0), false});
  ReplayOptions o;
  o.initial_q = (Configuration(2) << 0.1, -0.2).finished();
  const auto records = replay(model, samples, o);
  ASSERT_FALSE(records.empty());
  for (const auto& r : records) EXPECT_EQ(r.q, *o.initial_q);
}

TEST(Replay, TwoSampleFileSettlesOnDecomposition) {
  const RobotModel model = load_model_file(kData + "/robots/planar2.json");
  const auto samples = read_hand_trajectory_file(kData + "/trajectories/planar2_two_sample.jsonl");
  ASSERT_EQ(samples.size(), 2u);
  ReplayOptions o;
  o.guidance.max_step_angle = 0.5;
  const auto records = replay(model, samples, o);
  ASSERT_FALSE(records.empty());
  const Eigen::VectorXd& q = records.back().q;
  EXPECT_NEAR(q[0], 0.000971, 5e-7);
  EXPECT_NEAR(q[1], 0.197396, 5e-7);
  // Monotone approach from rest.
  for (std::size_t i = 1; i < records.size(); ++i) {
    EXPECT_GE(records[i].q[1], records[i - 1].q[1] - 1e-12);
    EXPECT_NEAR(records[i].t - records[i - 1].t, o.dt, 1e-9);
  }
  EXPECT_NEAR(records.back().t, samples.back().t + o.settle_time, o.dt);
}

TEST(Replay, DeterministicOutputText) {
  const RobotModel model = load_model_file(kData + "/robots/kr5_like.json");
  const auto samples = read_hand_trajectory_file(kData + "/trajectories/kr5_forearm_sweep.jsonl");
  std::ostringstream a;
  std::ostringstream b;
  write_joint_trajectory(a, replay(model, samples));
  write_joint_trajectory(b, replay(model, samples));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, 17), "{\"t\":0.000000,\"q\"");
}

TEST(Replay, Validation) {
  const RobotModel model = load_model_file(kData + "/robots/planar2.json");
  ReplayOptions o;
  o.dt = 0.0;
  EXPECT_THROW(replay(model, {{0.0, Vec3::Zero(), true}}, o), ValidationError);
  o.dt = 0.004;
  o.initial_q = Configuration::Zero(3);
  EXPECT_THROW(replay(model, {{0.0, Vec3::Zero(), true}}, o), DimensionError);
  const std::vector<HandSample> backwards{{1.0, Vec3(2, 0, 0), true}, {0.5, Vec3(2, 0.1, 0), true}};
  EXPECT_THROW(replay(model, backwards), StreamError);
}
