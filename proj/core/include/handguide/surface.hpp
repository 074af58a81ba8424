#pragma once

#include "handguide/cloud.hpp"
#include "handguide/model.hpp"

namespace handguide {

/// Triangulates a primitive in its own frame with roughly `target_triangles`
/// triangles (never fewer than the primitive's minimal tessellation).
TriangleMesh tessellate_shape(const ShapeGeometry& shape, std::size_t target_triangles);

/// Triangle budget for a primitive at a volumetric density (triangles per m^3).
std::size_t triangle_budget(const ShapeGeometry& shape, double triangles_per_m3);

/// Surface of every link's collision primitive posed at q, in the frame of `base`.
TriangleMesh robot_surface(const RobotModel& model, const Configuration& q, double triangles_per_m3,
                           const RigidTransform& base = RigidTransform::Identity());

}  // namespace handguide
