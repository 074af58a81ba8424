#include <benchmark/benchmark.h>

#include "handguide/controller.hpp"
#include "handguide/guidance.hpp"

using namespace handguide;

namespace {

RobotModel chain(std::size_t n) {
  std::vector<LinkSpec> links{{"l0", CollisionShape{Box{{0.05, 0.05, 0.05}}, {}}, std::nullopt}};
  std::vector<JointSpec> joints;
  for (std::size_t k = 0; k < n; ++k) {
    links.push_back({"l" + std::to_string(k + 1),
                     CollisionShape{Box{{0.15, 0.05, 0.05}}, RigidTransform::Translation({0.15, 0, 0})},
                     std::nullopt});
    JointSpec j;
    j.name = "j" + std::to_string(k);
    j.parent = links[k].name;
    j.child = links[k + 1].name;
    j.origin = RigidTransform::FromXyzRpy({k ? 0.3 : 0.05, 0, 0}, {0.3 * static_cast<double>(k), 0.2, 0});
    j.axis = k % 2 ? Vec3::UnitY() : Vec3::UnitZ();
    joints.push_back(j);
  }
  return RobotModel("chain", std::move(links), std::move(joints));
}

void BM_Decompose(benchmark::State& state) {
  const RobotModel m = chain(static_cast<std::size_t>(state.range(0)));
  const Configuration q = Configuration::Constant(static_cast<Eigen::Index>(m.joint_count()), 0.2);
  const auto poses = forward_kinematics(m, q);
  const Vec3 prev = poses.back() * Vec3(0.15, 0, 0);
  const Vec3 cur = prev + Vec3(0.01, 0.02, -0.01);
  GuidanceConfig c;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decompose(m, q, prev, cur, m.joint_count() - 1, c));
  }
}
BENCHMARK(BM_Decompose)->Arg(2)->Arg(6)->Arg(8);

void BM_SessionStepAndTick(benchmark::State& state) {
  const RobotModel m = chain(8);
  const MotionLimits limits = MotionLimits::FromModel(m);
  GuidanceState st = GuidanceState::Start(m.zero_configuration());
  ControllerState ctl = ControllerState::AtRest(m.zero_configuration());
  GuidanceConfig c;
  double t = 0.0;
  const Vec3 anchor = forward_kinematics(m, st.q).back() * Vec3(0.15, 0, 0);
  for (auto _ : state) {
    t += 1.0 / 30.0;
    const Vec3 hand = anchor + 0.02 * Vec3(std::sin(t), std::cos(t), 0);
    auto r = session_step(st, m, {t, hand, true}, c);
    st = std::move(r.state);
    ctl.target = st.q;
    ctl = controller_tick(ctl, limits, 0.004);
    benchmark::DoNotOptimize(ctl);
  }
}
BENCHMARK(BM_SessionStepAndTick);

void BM_ControllerTick(benchmark::State& state) {
  const Eigen::Index n = 8;
  const MotionLimits limits{Eigen::VectorXd::Constant(n, 1.0), Eigen::VectorXd::Constant(n, 2.0)};
  ControllerState s = ControllerState::AtRest(Eigen::VectorXd::Zero(n));
  s.target = Eigen::VectorXd::Constant(n, 100.0);
  for (auto _ : state) {
    s = controller_tick(s, limits, 0.004);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_ControllerTick);

}  // namespace
