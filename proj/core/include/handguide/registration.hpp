#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "handguide/cloud.hpp"
#include "handguide/model.hpp"

namespace handguide {

struct IcpParams {
  int max_iterations = 60;
  double max_correspondence_distance = 0.25;  // m
  double translation_epsilon = 1e-6;          // m
  double rotation_epsilon = 1e-6;             // rad
};

struct CongruentParams {
  double overlap_estimate = 0.5;
  double delta = 0.01;                 // m, LCP tolerance
  std::size_t sample_size = 500;
  std::size_t num_bases = 200;
  double coplanarity_tolerance = 0.01;  // m
  /// Tolerance for matching pair lengths and diagonal crossings in the target
  /// sample; 0 selects max(delta, median nearest-neighbor spacing of that sample).
  double congruence_tolerance = 0.0;
  std::size_t max_candidates_per_base = 2000;
  std::uint64_t seed = 0;
};

struct RegistrationResult {
  RigidTransform transform;  // model base -> world
  double rms = 0.0;          // m
  bool converged = false;
  int iterations = 0;        // ICP iterations or bases tried
  std::optional<double> lcp;
  std::vector<double> objective;  // ICP truncated mean squared distance per iteration
};

/// Least-squares rigid fit of source onto target (paired). Throws ValidationError
/// for fewer than three pairs or collinear/coincident sources.
RigidTransform estimate_rigid(std::span<const Vec3> source, std::span<const Vec3> target);

/// Point-to-point ICP from `init`. Throws RegistrationError when no correspondence
/// lies within range at the initial pose.
RegistrationResult icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                       const IcpParams& params = {});

/// Crossing of the diagonals (a, b) and (c, d): point a + r1 (b - a) ~ c + r2 (d - c).
struct BaseInvariants {
  double r1 = 0.0;
  double r2 = 0.0;
  double gap = 0.0;  // distance between the two lines at the crossing
};
BaseInvariants base_invariants(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Global registration with coplanar 4-point congruent sets, scored by the
/// largest-common-pointset fraction.
RegistrationResult congruent_set_register(const PointCloud& source, const PointCloud& target,
                                          const CongruentParams& params = {});

/// sqrt(mean over transformed model points of squared distance to the nearest scene point).
double rms_closest(const PointCloud& model_cloud, const PointCloud& scene_cloud,
                   const RigidTransform& transform);

enum class Method { Icp, Congruent };
std::string to_string(Method m);
Method parse_method(const std::string& s);

struct Preset {
  std::string name;
  std::size_t samples;           // points per sampled mesh
  double triangles_per_m3;       // scene tessellation density
};
Preset preset_big();
Preset preset_small();
Preset parse_preset(const std::string& s);

struct PipelineParams {
  double crop_radius = 2.5;  // m
  OutlierParams outliers;
  MlsParams mls;
  IcpParams icp;
  CongruentParams congruent;
  std::uint64_t model_seed = 7;  // sampling seed for the model cloud
};

struct PipelineResult {
  RegistrationResult registration;
  std::size_t cropped_points = 0;
  std::size_t filtered_points = 0;
  std::size_t model_points = 0;
};

/// Crop around the seed, filter, smooth, and register the robot surface at q.
/// Errors are RegistrationError tagged with the failing stage.
PipelineResult register_pipeline(const PointCloud& scene, const RobotModel& model, const Configuration& q,
                                 const RigidTransform& seed_pose, Method method, const Preset& preset,
                                 const PipelineParams& params = {});

/// Structured text form: {"rotation": [9 row-major], "translation": [3], "rms": ...}.
std::string transform_to_json(const RigidTransform& t);
RigidTransform transform_from_json(const std::string& text);

}  // namespace handguide
