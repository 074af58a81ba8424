#pragma once

#include <cstdint>
#include <string>

#include "handguide/cloud.hpp"
#include "handguide/model.hpp"
#include "handguide/registration.hpp"

namespace handguide {

struct ClutterSpec {
  bool floor = false;
  bool adjacent_table = false;
  double table_gap = 0.0;  // m between the table and the robot base; 0 = touching
};

struct SceneSpec {
  RigidTransform base_pose;  // ground truth
  Configuration q;
  ClutterSpec clutter;
  double noise_sigma = 0.0;  // m, per-vertex Gaussian
  Preset preset = preset_small();
  std::uint64_t seed = 0;
};

struct Scene {
  TriangleMesh mesh;
  PointCloud cloud;
  RigidTransform ground_truth;
  std::size_t robot_triangles = 0;  // mesh.triangles[0, robot_triangles) belong to the robot
};

/// Tessellates the posed robot primitives plus clutter at the preset density,
/// perturbs vertices, and samples the preset's point count. The robot surface is
/// sampled with `seed`, so a clutter-free noiseless scene reproduces
/// sample_mesh(robot_surface(model, q, density), samples, seed) under the base pose.
Scene synth_scene(const RobotModel& model, const SceneSpec& spec);

/// Horizontal reach of the base link's collision primitive about the base z axis.
double base_footprint_radius(const RobotModel& model);

/// JSON document mirroring SceneSpec: {"base_pose": {"xyz","rpy"}, "q": [...],
/// "clutter": {"floor", "adjacent_table", "table_gap"}, "noise_sigma", "preset", "seed"}.
SceneSpec scene_spec_from_json(const std::string& text, const RobotModel& model);
std::string scene_spec_to_json(const SceneSpec& spec);

}  // namespace handguide
