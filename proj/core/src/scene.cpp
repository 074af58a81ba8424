#include "handguide/scene.hpp"

#include <nlohmann/json.hpp>

#include <random>

#include "handguide/error.hpp"
#include "handguide/surface.hpp"

namespace handguide {

double base_footprint_radius(const RobotModel& model) {
  const auto& base = model.links().front();
  if (!base.collision) return 0.0;
  const TriangleMesh mesh = tessellate_shape(base.collision->geometry, 0);
  double r = 0.0;
  for (const auto& v : mesh.vertices) {
    const Vec3 p = base.collision->origin * v;
    r = std::max(r, std::hypot(p.x(), p.y()));
  }
  return r;
}

Scene synth_scene(const RobotModel& model, const SceneSpec& spec) {
  if (!(spec.noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be non-negative");
  if (!(spec.clutter.table_gap >= 0.0)) throw ValidationError("table_gap must be non-negative");
  Scene scene;
  scene.ground_truth = spec.base_pose;
  const double density = spec.preset.triangles_per_m3;
  scene.mesh = robot_surface(model, spec.q, density, spec.base_pose);
  scene.robot_triangles = scene.mesh.triangles.size();

  auto add_box = [&](const Vec3& half, const Vec3& center) {
    const Box box{half};
    TriangleMesh part = tessellate_shape(box, triangle_budget(box, density));
    part.transform(spec.base_pose * RigidTransform::Translation(center));
    scene.mesh.append(part);
  };
  if (spec.clutter.floor) add_box({1.5, 1.5, 0.01}, {0.0, 0.0, -0.01});
  if (spec.clutter.adjacent_table) {
    const Vec3 half{0.6, 0.4, 0.4};
    const double y = base_footprint_radius(model) + spec.clutter.table_gap + half.y();
    add_box(half, {0.0, y, half.z()});
  }

  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 noise_rng(spec.seed ^ 0x5deece66dULL);
    std::normal_distribution<double> gauss(0.0, spec.noise_sigma);
    for (auto& v : scene.mesh.vertices) v += Vec3(gauss(noise_rng), gauss(noise_rng), gauss(noise_rng));
  }
  scene.cloud = sample_mesh(scene.mesh, spec.preset.samples, spec.seed);
  return scene;
}

SceneSpec scene_spec_from_json(const std::string& text, const RobotModel& model) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
  SceneSpec spec;
  spec.q = model.zero_configuration();
  try {
    if (j.contains("base_pose")) spec.base_pose = transform_from_json(j["base_pose"].dump());
    if (j.contains("q")) {
      const auto q = j["q"].get<std::vector<double>>();
      if (q.size() != model.joint_count()) throw DimensionError("scene q does not match the joint count");
      spec.q = Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
    }
    if (j.contains("clutter")) {
      const auto& c = j["clutter"];
      spec.clutter.floor = c.value("floor", false);
      spec.clutter.adjacent_table = c.value("adjacent_table", false);
      spec.clutter.table_gap = c.value("table_gap", 0.0);
    }
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.preset = parse_preset(j.value("preset", std::string("small")));
    spec.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad scene spec: ") + e.what());
  }
  if (!(spec.noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be non-negative");
  return spec;
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  const Vec3 t = spec.base_pose.translation();
  const Vec3 rpy = spec.base_pose.rpy();
  nlohmann::json j;
  j["base_pose"] = {{"xyz", {t.x(), t.y(), t.z()}}, {"rpy", {rpy.x(), rpy.y(), rpy.z()}}};
  j["q"] = std::vector<double>(spec.q.data(), spec.q.data() + spec.q.size());
  j["clutter"] = {{"floor", spec.clutter.floor},
                  {"adjacent_table", spec.clutter.adjacent_table},
                  {"table_gap", spec.clutter.table_gap}};
  j["noise_sigma"] = spec.noise_sigma;
  j["preset"] = spec.preset.name;
  j["seed"] = spec.seed;
  return j.dump(2);
}

}  // namespace handguide
