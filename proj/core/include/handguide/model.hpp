#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "handguide/geometry.hpp"

namespace handguide {

struct Box {
  Vec3 half_extents;
};

/// Cylinder centered on its frame origin with its axis along local z.
struct Cylinder {
  double radius = 0.0;
  double length = 0.0;
};

/// Convex hull of a vertex set. Facets are derived at construction.
class ConvexHull {
 public:
  explicit ConvexHull(std::vector<Vec3> vertices);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  /// Facet polygons as counter-clockwise (outward normal) vertex index loops.
  const std::vector<std::vector<int>>& facets() const { return facets_; }
  /// Outward unit normals and offsets: n.x <= d for interior points.
  const std::vector<std::pair<Vec3, double>>& planes() const { return planes_; }
  /// Fan triangulation of the facets.
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }

  double distance(const Vec3& local_point) const;
  double volume() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::vector<int>> facets_;
  std::vector<std::pair<Vec3, double>> planes_;
  std::vector<std::array<int, 3>> triangles_;
};

using ShapeGeometry = std::variant<Box, Cylinder, ConvexHull>;

struct CollisionShape {
  ShapeGeometry geometry;
  RigidTransform origin;  // shape frame relative to the link frame
};

/// Euclidean distance from a point (shape frame) to a primitive; 0 inside.
double shape_distance(const ShapeGeometry& shape, const Vec3& local_point);
double shape_volume(const ShapeGeometry& shape);
Vec3 shape_centroid(const ShapeGeometry& shape);

struct LinkSpec {
  std::string name;
  std::optional<CollisionShape> collision;
  std::optional<std::string> visual;
};

struct JointLimits {
  double lower = -M_PI;
  double upper = M_PI;
  double velocity = 1.0;  // rad/s

  bool contains(double angle) const { return angle >= lower && angle <= upper; }
};

struct JointSpec {
  std::string name;
  std::string parent;
  std::string child;
  RigidTransform origin;
  Vec3 axis = Vec3::UnitX();
  JointLimits limits;
};

using Configuration = Eigen::VectorXd;

/// Serial chain of revolute joints. links()[0] is the base link and
/// links()[k + 1] is the child of joints()[k].
class RobotModel {
 public:
  RobotModel(std::string name, std::vector<LinkSpec> links, std::vector<JointSpec> joints);

  const std::string& name() const { return name_; }
  const std::vector<LinkSpec>& links() const { return links_; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const std::string& base_frame() const { return links_.front().name; }
  std::size_t joint_count() const { return joints_.size(); }
  std::size_t link_count() const { return links_.size(); }

  /// The link whose collision primitive is joint k's guidance zone.
  const LinkSpec& zone_link(std::size_t k) const { return links_.at(k + 1); }

  Configuration zero_configuration() const { return Configuration::Zero(joint_count()); }
  bool within_limits(const Configuration& q) const;

 private:
  std::string name_;
  std::vector<LinkSpec> links_;
  std::vector<JointSpec> joints_;
};

/// Parses and validates a robot description (JSON). Throws ParseError or ValidationError.
RobotModel load_model(std::string_view text);
RobotModel load_model_file(const std::string& path);
std::string model_to_json(const RobotModel& model, int indent = 2);

/// Link poses in the world frame; the base link sits at `base`.
std::vector<RigidTransform> forward_kinematics(const RobotModel& model, const Configuration& q,
                                               const RigidTransform& base = RigidTransform::Identity());

struct JointFrame {
  Vec3 origin;
  Vec3 axis;
  RigidTransform pose;
};

JointFrame joint_world_frame(const RobotModel& model, const Configuration& q, std::size_t k,
                             const RigidTransform& base = RigidTransform::Identity());

/// Distance from a world point to joint k's zone; uses precomputed link poses.
double zone_distance(const RobotModel& model, const std::vector<RigidTransform>& link_poses,
                     std::size_t k, const Vec3& point);

bool zone_contains(const RobotModel& model, const Configuration& q, std::size_t k,
                   const Vec3& point, double margin);

/// Most distal joint whose zone contains the point.
std::optional<std::size_t> active_zone(const RobotModel& model, const Configuration& q,
                                       const Vec3& point, double margin);
std::optional<std::size_t> active_zone(const RobotModel& model,
                                       const std::vector<RigidTransform>& link_poses,
                                       const Vec3& point, double margin);

}  // namespace handguide
