#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "handguide/error.hpp"
#include "handguide/model.hpp"

using namespace handguide;

namespace {

const std::string kData = HANDGUIDE_DATA_DIR;

const char* kOneJoint = R"({
  "name": "one",
  "links": [
    {"name": "base", "collision": {"type": "box", "half_extents": [0.1, 0.1, 0.1]}},
    {"name": "arm", "collision": {"type": "box", "half_extents": [1, 1, 1]}}
  ],
  "joints": [
    {"name": "j", "parent": "base", "child": "arm", "axis": [0, 0, 1]}
  ]
})";

// 4x4 homogeneous matrices from Rodrigues' formula, independent of RigidTransform.
Mat4 homogeneous_rotation(Vec3 axis, double angle) {
  axis.normalize();
  Mat3 k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = Mat3::Identity() + std::sin(angle) * k + (1 - std::cos(angle)) * k * k;
  return m;
}

Mat4 homogeneous_origin(const Vec3& xyz, const Vec3& rpy) {
  Mat4 m = homogeneous_rotation(Vec3::UnitZ(), rpy.z()) * homogeneous_rotation(Vec3::UnitY(), rpy.y()) *
           homogeneous_rotation(Vec3::UnitX(), rpy.x());
  m.topRightCorner<3, 1>() = xyz;
  return m;
}

std::vector<Mat4> oracle_fk(const RobotModel& model, const Configuration& q) {
  std::vector<Mat4> out{Mat4::Identity()};
  for (std::size_t i = 0; i < model.joint_count(); ++i) {
    const auto& j = model.joints()[i];
    const Mat4 origin = homogeneous_origin(j.origin.translation(), j.origin.rpy());
    out.push_back(out.back() * origin * homogeneous_rotation(j.axis, q[static_cast<Eigen::Index>(i)]));
  }
  return out;
}

Configuration random_q(const RobotModel& model, std::mt19937_64& rng) {
  Configuration q(model.joint_count());
  for (std::size_t i = 0; i < model.joint_count(); ++i) {
    const auto& lim = model.joints()[i].limits;
    q[static_cast<Eigen::Index>(i)] = std::uniform_real_distribution<double>(lim.lower, lim.upper)(rng);
  }
  return q;
}

}  // namespace

TEST(LoadModel, MinimalDocumentDefaultsLimits) {
  const RobotModel m = load_model(kOneJoint);
  ASSERT_EQ(m.joint_count(), 1u);
  EXPECT_EQ(m.link_count(), 2u);
  EXPECT_DOUBLE_EQ(m.joints()[0].limits.lower, -M_PI);
  EXPECT_DOUBLE_EQ(m.joints()[0].limits.upper, M_PI);
  EXPECT_EQ(m.base_frame(), "base");
}

TEST(LoadModel, ZeroAxisIsRejected) {
  std::string doc = kOneJoint;
  doc.replace(doc.find("[0, 0, 1]"), 9, "[0, 0, 0]");
  EXPECT_THROW(load_model(doc), ValidationError);
}

TEST(LoadModel, MalformedDocumentReportsLine) {
  const std::string doc = "{\n  \"name\": \"x\",\n  \"links\": [,\n]\n}";
  try {
    load_model(doc);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadModel, RejectsBranches) {
  const char* doc = R"({"name": "tree", "links": [{"name": "a"}, {"name": "b"}, {"name": "c"}],
    "joints": [{"name": "j1", "parent": "a", "child": "b"}, {"name": "j2", "parent": "a", "child": "c"}]})";
  EXPECT_THROW(load_model(doc), ValidationError);
}

TEST(LoadModel, RejectsUnknownParentAndBadLimits) {
  const char* unknown = R"({"name": "x", "links": [{"name": "a"}, {"name": "b"}],
    "joints": [{"name": "j", "parent": "zz", "child": "b"}]})";
  EXPECT_THROW(load_model(unknown), ValidationError);
  const char* limits = R"({"name": "x", "links": [{"name": "a"}, {"name": "b"}],
    "joints": [{"name": "j", "parent": "a", "child": "b", "limits": {"lower": 1, "upper": 0}}]})";
  EXPECT_THROW(load_model(limits), ValidationError);
  const char* prismatic = R"({"name": "x", "links": [{"name": "a"}, {"name": "b"}],
    "joints": [{"name": "j", "type": "prismatic", "parent": "a", "child": "b"}]})";
  EXPECT_THROW(load_model(prismatic), ValidationError);
}

TEST(LoadModel, ValidationErrorNamesOffender) {
  const char* doc = R"({"name": "x", "links": [{"name": "a"}, {"name": "b", "collision": {"type": "box", "half_extents": [1, -1, 1]}}],
    "joints": [{"name": "j", "parent": "a", "child": "b"}]})";
  try {
    load_model(doc);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
}

TEST(LoadModel, JointOrderIsChainOrder) {
  const char* doc = R"({"name": "x", "links": [{"name": "c"}, {"name": "a"}, {"name": "b"}],
    "joints": [{"name": "j2", "parent": "b", "child": "c"}, {"name": "j1", "parent": "a", "child": "b"}]})";
  const RobotModel m = load_model(doc);
  EXPECT_EQ(m.joints()[0].name, "j1");
  EXPECT_EQ(m.joints()[1].name, "j2");
  EXPECT_EQ(m.base_frame(), "a");
  EXPECT_EQ(m.zone_link(1).name, "c");
}

TEST(LoadModel, BundledArmsRoundTrip) {
  const RobotModel kr5 = load_model_file(kData + "/robots/kr5_like.json");
  EXPECT_EQ(kr5.joint_count(), 6u);
  EXPECT_EQ(kr5.link_count(), 7u);
  const RobotModel arm7 = load_model_file(kData + "/robots/arm7.json");
  EXPECT_EQ(arm7.joint_count(), 7u);
  for (const RobotModel* m : {&kr5, &arm7}) {
    const std::string text = model_to_json(*m);
    const RobotModel back = load_model(text);
    EXPECT_EQ(model_to_json(back), text);
    ASSERT_EQ(back.joint_count(), m->joint_count());
    for (std::size_t i = 0; i < m->joint_count(); ++i) {
      EXPECT_LT((back.joints()[i].origin.matrix() - m->joints()[i].origin.matrix()).norm(), 1e-12);
      EXPECT_LT((back.joints()[i].axis - m->joints()[i].axis).norm(), 1e-15);
    }
  }
}

TEST(LoadModel, MissingFileIsAnError) { EXPECT_THROW(load_model_file("/nonexistent/robot.json"), Error); }

TEST(ForwardKinematics, ZeroConfigurationComposesOrigins) {
  const RobotModel m = load_model_file(kData + "/robots/kr5_like.json");
  const auto poses = forward_kinematics(m, m.zero_configuration());
  ASSERT_EQ(poses.size(), m.link_count());
  RigidTransform acc;
  for (std::size_t i = 0; i < m.joint_count(); ++i) {
    acc = acc * m.joints()[i].origin;
    EXPECT_LT((poses[i + 1].matrix() - acc.matrix()).norm(), 1e-12);
  }
}

TEST(ForwardKinematics, SingleZJointQuarterTurn) {
  const RobotModel m = load_model(kOneJoint);
  Configuration q(1);
  q << M_PI / 2;
  const auto poses = forward_kinematics(m, q);
  EXPECT_LT((poses[1] * Vec3::UnitX() - Vec3::UnitY()).norm(), 1e-12);
}

TEST(ForwardKinematics, MatchesHomogeneousOracle) {
  std::mt19937_64 rng(5);
  for (const char* file : {"/robots/kr5_like.json", "/robots/arm7.json"}) {
    const RobotModel m = load_model_file(kData + file);
    for (int trial = 0; trial < 100; ++trial) {
      const Configuration q = random_q(m, rng);
      const auto poses = forward_kinematics(m, q);
      const auto oracle = oracle_fk(m, q);
      for (std::size_t i = 0; i < poses.size(); ++i) {
        EXPECT_LT((poses[i].matrix() - oracle[i]).norm(), 1e-9);
      }
      for (std::size_t k = 0; k < m.joint_count(); ++k) {
        const JointFrame f = joint_world_frame(m, q, k);
        const auto& j = m.joints()[k];
        const Mat4 frame = oracle[k] * homogeneous_origin(j.origin.translation(), j.origin.rpy());
        EXPECT_LT((f.origin - frame.topRightCorner<3, 1>()).norm(), 1e-9);
        EXPECT_LT((f.axis - frame.topLeftCorner<3, 3>() * j.axis).norm(), 1e-9);
        EXPECT_NEAR(f.axis.norm(), 1.0, 1e-12);
      }
    }
  }
}

TEST(ForwardKinematics, SplitChainComposes) {
  const RobotModel m = load_model_file(kData + "/robots/arm7.json");
  std::mt19937_64 rng(8);
  const Configuration q = random_q(m, rng);
  const auto full = forward_kinematics(m, q);
  for (std::size_t split = 1; split < m.joint_count(); ++split) {
    // Second sub-chain rooted at link `split`, built as its own model.
    std::vector<LinkSpec> links(m.links().begin() + static_cast<long>(split), m.links().end());
    std::vector<JointSpec> joints(m.joints().begin() + static_cast<long>(split), m.joints().end());
    const RobotModel tail("tail", links, joints);
    const Configuration qt = q.tail(static_cast<Eigen::Index>(tail.joint_count()));
    const auto tail_poses = forward_kinematics(tail, qt, full[split]);
    for (std::size_t i = 0; i < tail_poses.size(); ++i) {
      EXPECT_LT((tail_poses[i].matrix() - full[split + i].matrix()).norm(), 1e-9);
    }
  }
}

TEST(ForwardKinematics, OrthonormalityDoesNotDrift) {
  const RobotModel m = load_model_file(kData + "/robots/arm7.json");
  std::mt19937_64 rng(13);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const auto poses = forward_kinematics(m, random_q(m, rng));
    worst = std::max(worst, poses.back().orthonormality_error());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(ForwardKinematics, DimensionMismatch) {
  const RobotModel m = load_model(kOneJoint);
  EXPECT_THROW(forward_kinematics(m, Configuration::Zero(2)), DimensionError);
  EXPECT_THROW(joint_world_frame(m, Configuration::Zero(1), 1), DimensionError);
}

TEST(JointWorldFrame, BaseJointAndRotatedChildAxis) {
  const char* doc = R"({"name": "x", "links": [{"name": "a"}, {"name": "b"}, {"name": "c"}],
    "joints": [{"name": "j1", "parent": "a", "child": "b", "axis": [0, 0, 1]},
               {"name": "j2", "parent": "b", "child": "c", "axis": [1, 0, 0], "origin": {"xyz": [0.5, 0, 0]}}]})";
  const RobotModel m = load_model(doc);
  Configuration q(2);
  q << M_PI / 2, 0.3;
  EXPECT_LT(joint_world_frame(m, q, 0).origin.norm(), 1e-15);
  const JointFrame f = joint_world_frame(m, q, 1);
  EXPECT_LT((f.axis - Vec3::UnitY()).norm(), 1e-12);
  EXPECT_LT((f.origin - Vec3(0, 0.5, 0)).norm(), 1e-12);
}

TEST(Zones, ContainmentExamples) {
  const RobotModel m = load_model(kOneJoint);
  const Configuration q = m.zero_configuration();
  EXPECT_TRUE(zone_contains(m, q, 0, Vec3::Zero(), 0.0));
  EXPECT_FALSE(zone_contains(m, q, 0, Vec3(10, 0, 0), 0.05));
  // Unit half-extent box: a point exactly margin beyond the +x face.
  EXPECT_TRUE(zone_contains(m, q, 0, Vec3(1.25, 0.3, -0.2), 0.25));
  EXPECT_FALSE(zone_contains(m, q, 0, Vec3(1.2500001, 0.3, -0.2), 0.25));
  // Corner distance is Euclidean.
  EXPECT_TRUE(zone_contains(m, q, 0, Vec3(1.1, 1.1, 0), 0.1 * std::sqrt(2.0) + 1e-12));
  EXPECT_FALSE(zone_contains(m, q, 0, Vec3(1.1, 1.1, 0), 0.1 * std::sqrt(2.0) - 1e-9));
}

TEST(Zones, MostDistalWins) {
  const RobotModel m = load_model_file(kData + "/robots/planar2.json");
  const Configuration q = m.zero_configuration();
  EXPECT_FALSE(active_zone(m, q, Vec3(0, 5, 0), 0.05).has_value());
  EXPECT_EQ(active_zone(m, q, Vec3(0.5, 0, 0), 0.05), std::optional<std::size_t>(0));
  EXPECT_EQ(active_zone(m, q, Vec3(2.0, 0, 0), 0.05), std::optional<std::size_t>(1));
  // x = 0.98 lies in both the link1 box (to x = 1.0) and the link2 box (from x = 0.95).
  EXPECT_TRUE(zone_contains(m, q, 0, Vec3(0.98, 0, 0), 0.0));
  EXPECT_TRUE(zone_contains(m, q, 1, Vec3(0.98, 0, 0), 0.0));
  EXPECT_EQ(active_zone(m, q, Vec3(0.98, 0, 0), 0.0), std::optional<std::size_t>(1));
}

TEST(Zones, MonotoneInMarginAndConsistent) {
  const RobotModel m = load_model_file(kData + "/robots/kr5_like.json");
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 2000; ++i) {
    const Configuration q = random_q(m, rng);
    const Vec3 p(u(rng), u(rng), u(rng) + 0.8);
    const double m1 = std::uniform_real_distribution<double>(0, 0.2)(rng);
    for (std::size_t k = 0; k < m.joint_count(); ++k) {
      if (zone_contains(m, q, k, p, m1)) {
        EXPECT_TRUE(zone_contains(m, q, k, p, m1 + 0.01));
      }
    }
    const auto z = active_zone(m, q, p, m1);
    if (z) {
      EXPECT_TRUE(zone_contains(m, q, *z, p, m1));
      for (std::size_t k = *z + 1; k < m.joint_count(); ++k) EXPECT_FALSE(zone_contains(m, q, k, p, m1));
    } else {
      for (std::size_t k = 0; k < m.joint_count(); ++k) EXPECT_FALSE(zone_contains(m, q, k, p, m1));
    }
  }
}

TEST(Shapes, CylinderDistanceClosedForm) {
  const Cylinder c{0.5, 2.0};
  EXPECT_DOUBLE_EQ(shape_distance(c, Vec3(0.1, 0.1, 0.3)), 0.0);
  EXPECT_NEAR(shape_distance(c, Vec3(1.5, 0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(shape_distance(c, Vec3(0, 0, 1.7)), 0.7, 1e-12);
  EXPECT_NEAR(shape_distance(c, Vec3(0.8, 0, 1.4)), std::hypot(0.3, 0.4), 1e-12);
  EXPECT_NEAR(shape_volume(c), M_PI * 0.25 * 2.0, 1e-12);
}

TEST(Shapes, HullOfCubeMatchesBox) {
  std::vector<Vec3> verts;
  for (int i = 0; i < 8; ++i) verts.emplace_back(i & 1 ? 1 : -1, i & 2 ? 1 : -1, i & 4 ? 1 : -1);
  const ConvexHull hull(verts);
  EXPECT_EQ(hull.facets().size(), 6u);
  EXPECT_EQ(hull.triangles().size(), 12u);
  EXPECT_NEAR(hull.volume(), 8.0, 1e-12);
  const Box box{Vec3(1, 1, 1)};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    EXPECT_NEAR(hull.distance(p), shape_distance(box, p), 1e-12);
  }
}

TEST(Shapes, HullRejectsDegenerateInput) {
  EXPECT_THROW(ConvexHull({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}), ValidationError);
  EXPECT_THROW(ConvexHull({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)}), ValidationError);
}

TEST(Shapes, HullInteriorPointsOfTetrahedron) {
  const ConvexHull tet({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(0.1, 0.1, 0.1)});
  EXPECT_EQ(tet.facets().size(), 4u);
  EXPECT_NEAR(tet.volume(), 1.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(tet.distance(Vec3(0.2, 0.2, 0.2)), 0.0);
  EXPECT_NEAR(tet.distance(Vec3(-1, 0.2, 0.2)), 1.0, 1e-12);
  EXPECT_NEAR(tet.distance(Vec3(1, 1, 1)), (Vec3(1, 1, 1) - Vec3(1, 1, 1) / 3.0).norm(), 1e-12);
}
