#include "handguide/surface.hpp"

#include <algorithm>
#include <cmath>

namespace handguide {

namespace {

// Edge length for a surface of `area` split into `target` triangles.
double cell_size(double area, std::size_t target) {
  return std::sqrt(2.0 * area / static_cast<double>(std::max<std::size_t>(target, 1)));
}

int divisions(double extent, double cell) {
  return std::max(1, static_cast<int>(std::ceil(extent / cell - 1e-9)));
}

// Grid over the parallelogram origin + [0,1] u + [0,1] v; normal along u x v.
void add_grid(TriangleMesh& mesh, const Vec3& origin, const Vec3& u, const Vec3& v, int nu, int nv) {
  const int base = static_cast<int>(mesh.vertices.size());
  for (int j = 0; j <= nv; ++j) {
    for (int i = 0; i <= nu; ++i) {
      mesh.vertices.push_back(origin + u * (static_cast<double>(i) / nu) + v * (static_cast<double>(j) / nv));
    }
  }
  const int stride = nu + 1;
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      const int a = base + j * stride + i;
      mesh.triangles.push_back({a, a + 1, a + stride + 1});
      mesh.triangles.push_back({a, a + stride + 1, a + stride});
    }
  }
}

TriangleMesh tessellate_box(const Box& box, std::size_t target) {
  const Vec3 h = box.half_extents;
  const double area = 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
  const double cell = cell_size(area, target);
  TriangleMesh mesh;
  for (int axis = 0; axis < 3; ++axis) {
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    for (const double sign : {1.0, -1.0}) {
      Vec3 center = Vec3::Zero();
      center[axis] = sign * h[axis];
      Vec3 u = Vec3::Zero();
      Vec3 v = Vec3::Zero();
      u[a1] = 2.0 * h[a1];
      v[a2] = 2.0 * h[a2];
      if (sign < 0.0) std::swap(u, v);
      add_grid(mesh, center - 0.5 * u - 0.5 * v, u, v, divisions(u.norm(), cell), divisions(v.norm(), cell));
    }
  }
  return mesh;
}

TriangleMesh tessellate_cylinder(const Cylinder& cyl, std::size_t target) {
  const double r = cyl.radius;
  const double half = 0.5 * cyl.length;
  const double area = 2.0 * M_PI * r * cyl.length + 2.0 * M_PI * r * r;
  const double cell = cell_size(area, target);
  const int ns = std::max(8, divisions(2.0 * M_PI * r, cell));
  const int nz = divisions(cyl.length, cell);
  const int nr = divisions(r, cell);

  TriangleMesh mesh;
  auto ring = [&](double radius, double z) {
    const int start = static_cast<int>(mesh.vertices.size());
    for (int s = 0; s < ns; ++s) {
      const double phi = 2.0 * M_PI * s / ns;
      mesh.vertices.emplace_back(radius * std::cos(phi), radius * std::sin(phi), z);
    }
    return start;
  };
  // Side.
  std::vector<int> rings;
  for (int k = 0; k <= nz; ++k) rings.push_back(ring(r, -half + cyl.length * k / nz));
  for (int k = 0; k < nz; ++k) {
    for (int s = 0; s < ns; ++s) {
      const int a = rings[k] + s;
      const int b = rings[k] + (s + 1) % ns;
      const int c = rings[k + 1] + (s + 1) % ns;
      const int d = rings[k + 1] + s;
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }
  // Caps, outward normals along +z and -z.
  for (const double sign : {1.0, -1.0}) {
    const double z = sign * half;
    const int center = static_cast<int>(mesh.vertices.size());
    mesh.vertices.emplace_back(0.0, 0.0, z);
    int inner = -1;
    for (int k = 1; k <= nr; ++k) {
      const int outer = ring(r * k / nr, z);
      for (int s = 0; s < ns; ++s) {
        const int o0 = outer + s;
        const int o1 = outer + (s + 1) % ns;
        if (inner < 0) {
          if (sign > 0) mesh.triangles.push_back({center, o0, o1});
          else mesh.triangles.push_back({center, o1, o0});
        } else {
          const int i0 = inner + s;
          const int i1 = inner + (s + 1) % ns;
          if (sign > 0) {
            mesh.triangles.push_back({i0, o0, o1});
            mesh.triangles.push_back({i0, o1, i1});
          } else {
            mesh.triangles.push_back({i0, o1, o0});
            mesh.triangles.push_back({i0, i1, o1});
          }
        }
      }
      inner = outer;
    }
  }
  return mesh;
}

TriangleMesh tessellate_hull(const ConvexHull& hull, std::size_t target) {
  const auto& verts = hull.vertices();
  double area = 0.0;
  for (const auto& t : hull.triangles()) {
    area += 0.5 * (verts[t[1]] - verts[t[0]]).cross(verts[t[2]] - verts[t[0]]).norm();
  }
  const double cell = cell_size(area, target);
  TriangleMesh mesh;
  for (const auto& t : hull.triangles()) {
    const Vec3& a = verts[t[0]];
    const Vec3& b = verts[t[1]];
    const Vec3& c = verts[t[2]];
    const double longest = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    const int m = divisions(longest, cell);
    // Barycentric grid with m subdivisions per edge: m^2 triangles.
    const int base = static_cast<int>(mesh.vertices.size());
    auto index = [&](int i, int j) { return base + i * (m + 1) - i * (i - 1) / 2 + j; };
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j <= m - i; ++j) {
        mesh.vertices.push_back(a + (b - a) * (static_cast<double>(i) / m) + (c - a) * (static_cast<double>(j) / m));
      }
    }
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m - i; ++j) {
        mesh.triangles.push_back({index(i, j), index(i + 1, j), index(i, j + 1)});
        if (j + 1 <= m - i - 1) {
          mesh.triangles.push_back({index(i + 1, j), index(i + 1, j + 1), index(i, j + 1)});
        }
      }
    }
  }
  return mesh;
}

}  // namespace

std::size_t triangle_budget(const ShapeGeometry& shape, double triangles_per_m3) {
  return static_cast<std::size_t>(std::ceil(std::max(0.0, triangles_per_m3 * shape_volume(shape))));
}

TriangleMesh tessellate_shape(const ShapeGeometry& shape, std::size_t target_triangles) {
  return std::visit(
      [&](const auto& s) -> TriangleMesh {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return tessellate_box(s, target_triangles);
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          return tessellate_cylinder(s, target_triangles);
        } else {
          return tessellate_hull(s, target_triangles);
        }
      },
      shape);
}

TriangleMesh robot_surface(const RobotModel& model, const Configuration& q, double triangles_per_m3,
                           const RigidTransform& base) {
  const auto poses = forward_kinematics(model, q, base);
  TriangleMesh mesh;
  for (std::size_t i = 0; i < model.link_count(); ++i) {
    const auto& link = model.links()[i];
    if (!link.collision) continue;
    TriangleMesh part = tessellate_shape(link.collision->geometry,
                                         triangle_budget(link.collision->geometry, triangles_per_m3));
    part.transform(poses[i] * link.collision->origin);
    mesh.append(part);
  }
  return mesh;
}

}  // namespace handguide
