#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "handguide/geometry.hpp"

namespace handguide {

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  PointCloud transformed(const RigidTransform& t) const;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  /// Appends another mesh, offsetting its indices.
  void append(const TriangleMesh& other);
  void transform(const RigidTransform& t);
  double area() const;
  /// Throws ValidationError when an index is out of range.
  void validate() const;
};

/// Exact k-nearest and radius search over a fixed point set. Results are ordered
/// by (distance, index), so ties resolve identically to a brute-force scan.
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points, std::size_t leaf_size = 32);

  struct Neighbor {
    std::size_t index;
    double squared_distance;
  };

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;
  /// Neighbors with squared distance <= radius^2.
  std::vector<Neighbor> radius(const Vec3& query, double radius) const;
  void radius(const Vec3& query, double radius, std::vector<Neighbor>& out) const;
  /// Same set as radius() in traversal order, skipping the sort.
  void radius_unordered(const Vec3& query, double radius, std::vector<Neighbor>& out) const;
  /// Calls f(index, squared_distance, point) for every point within the radius, in traversal order.
  template <typename F>
  void visit_radius(const Vec3& query, double radius, F&& f) const;
  /// Nearest point; the tree must be non-empty. A hint index, when given, only
  /// seeds the search bound and never changes the answer.
  Neighbor nearest(const Vec3& query) const;
  Neighbor nearest(const Vec3& query, std::size_t hint) const;
  /// True when some point lies within the radius (same test as nearest().squared_distance <= r^2).
  bool any_within(const Vec3& query, double radius) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;
    double split = 0.0;
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
  };

  int build(std::uint32_t begin, std::uint32_t end, int depth);
  Neighbor nearest_from(Neighbor best, const Vec3& query) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::vector<Vec3> packed_;
  std::size_t leaf_size_;
  int max_depth_ = 0;
};

template <typename F>
void KdTree::visit_radius(const Vec3& query, double radius, F&& f) const {
  if (points_.empty() || radius < 0.0) return;
  const double r2 = radius * radius;
  std::array<int, 128> fixed{};
  std::vector<int> grown;
  int* stack = fixed.data();
  if (static_cast<std::size_t>(max_depth_) + 2 > fixed.size()) {
    grown.resize(static_cast<std::size_t>(max_depth_) + 2);
    stack = grown.data();
  }
  std::size_t top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const double d2 = (packed_[i] - query).squaredNorm();
        if (d2 <= r2) f(static_cast<std::size_t>(order_[i]), d2, packed_[i]);
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    if (diff <= radius) stack[top++] = node.left;
    if (diff >= -radius) stack[top++] = node.right;
  }
}

/// Area-uniform samples over the mesh surface; deterministic for a seed.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

struct OutlierParams {
  std::size_t k = 16;
  double alpha = 1.0;
};

/// Statistical outlier removal on mean k-nearest-neighbor distance.
PointCloud remove_outliers(const PointCloud& cloud, std::size_t k, double alpha);

struct MlsParams {
  double radius = 0.05;  // m
  int degree = 1;        // 1 or 2
};

/// Projects every point onto a Gaussian-weighted (bandwidth radius/2) local
/// polynomial surface fit over its radius neighborhood.
PointCloud mls_smooth(const PointCloud& cloud, double radius, int degree);

PointCloud crop_sphere(const PointCloud& cloud, const Vec3& center, double radius);

// ASCII PLY and XYZ text, written at 9 significant digits.
void write_ply(std::ostream& out, const PointCloud& cloud);
void write_xyz(std::ostream& out, const PointCloud& cloud);
void write_mesh_ply(std::ostream& out, const TriangleMesh& mesh);
/// Parses PLY (detected by the "ply" magic line) or XYZ text.
PointCloud read_cloud(std::istream& in);
PointCloud read_cloud_string(const std::string& text);
PointCloud read_cloud_file(const std::string& path);
/// Format picked by extension: ".ply" or anything else as XYZ.
void write_cloud_file(const std::string& path, const PointCloud& cloud);

}  // namespace handguide
