#include "handguide/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "handguide/error.hpp"

namespace handguide {

PointCloud PointCloud::transformed(const RigidTransform& t) const {
  PointCloud out;
  out.points.reserve(points.size());
  for (const auto& p : points) out.points.push_back(t * p);
  return out;
}

void TriangleMesh::append(const TriangleMesh& other) {
  const int offset = static_cast<int>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const auto& t : other.triangles) triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
}

void TriangleMesh::transform(const RigidTransform& t) {
  for (auto& v : vertices) v = t * v;
}

double TriangleMesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles) {
    a += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  }
  return a;
}

void TriangleMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (int i : t) {
      if (i < 0 || i >= n) throw ValidationError("triangle index " + std::to_string(i) + " out of range");
    }
  }
}

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  PointCloud cloud;
  if (n == 0) return cloud;
  if (mesh.triangles.empty()) throw ValidationError("cannot sample an empty mesh");
  mesh.validate();

  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    total += 0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                       .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]])
                       .norm();
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw ValidationError("cannot sample a mesh with zero surface area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  cloud.points.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double pick = unit(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& t = mesh.triangles[static_cast<std::size_t>(it - cumulative.begin())];
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    cloud.points.push_back((1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                           r1 * r2 * mesh.vertices[t[2]]);
  }
  return cloud;
}

PointCloud remove_outliers(const PointCloud& cloud, std::size_t k, double alpha) {
  if (k < 1) throw ValidationError("outlier removal needs k >= 1");
  if (cloud.size() <= k) {
    throw ValidationError("cloud too small for outlier removal: " + std::to_string(cloud.size()) +
                          " points, k = " + std::to_string(k));
  }
  const KdTree tree(cloud.points);
  std::vector<double> mean_dist(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], k + 1);
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& nb : nn) {
      if (nb.index == i) continue;
      if (used == k) break;
      sum += std::sqrt(nb.squared_distance);
      ++used;
    }
    mean_dist[i] = sum / static_cast<double>(used);
  }
  const double n = static_cast<double>(cloud.size());
  const double mu = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / n;
  double var = 0.0;
  for (double d : mean_dist) var += (d - mu) * (d - mu);
  const double sigma = std::sqrt(var / n);
  const double threshold = mu + alpha * sigma;

  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (mean_dist[i] <= threshold) out.points.push_back(cloud.points[i]);
  }
  return out;
}

PointCloud mls_smooth(const PointCloud& cloud, double radius, int degree) {
  if (!(radius > 0.0)) throw ValidationError("MLS radius must be positive");
  if (degree != 1 && degree != 2) throw ValidationError("MLS degree must be 1 or 2");
  if (cloud.empty()) return cloud;

  const KdTree tree(cloud.points);
  const double h2 = 0.25 * radius * radius;  // bandwidth radius / 2
  PointCloud out;
  out.points.reserve(cloud.size());
  std::vector<KdTree::Neighbor> nbrs;

  for (const Vec3& p : cloud.points) {
    // Weighted moments about p in one pass; the degree-2 fit needs the neighbors again.
    std::size_t count = 0;
    double wsum = 0.0;
    Vec3 first = Vec3::Zero();
    Mat3 second = Mat3::Zero();
    if (degree == 2) nbrs.clear();
    tree.visit_radius(p, radius, [&](std::size_t index, double d2, const Vec3& x) {
      const double w = std::exp(-d2 / h2);
      const Vec3 d = x - p;
      ++count;
      wsum += w;
      first += w * d;
      second.selfadjointView<Eigen::Upper>().rankUpdate(d, w);
      if (degree == 2) nbrs.push_back({index, d2});
    });
    if (count < 3) {
      out.points.push_back(p);
      continue;
    }
    const Vec3 mean = first / wsum;
    const Vec3 centroid = p + mean;
    Mat3 cov = second.selfadjointView<Eigen::Upper>();
    cov = cov / wsum - mean * mean.transpose();
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 normal = eig.eigenvectors().col(0);
    const Vec3 on_plane = p - (p - centroid).dot(normal) * normal;

    if (degree == 1 || count < 6) {
      out.points.push_back(on_plane);
      continue;
    }
    // Height field h(u, v) = c0 + c1 u + c2 v + c3 u^2 + c4 uv + c5 v^2 around on_plane.
    const Vec3 u_axis = eig.eigenvectors().col(2);
    const Vec3 v_axis = normal.cross(u_axis);
    Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const double w = std::exp(-nbrs[i].squared_distance / h2);
      const Vec3 d = tree.points()[nbrs[i].index] - on_plane;
      const double u = d.dot(u_axis);
      const double v = d.dot(v_axis);
      const double h = d.dot(normal);
      Eigen::Matrix<double, 6, 1> row;
      row << 1.0, u, v, u * u, u * v, v * v;
      ata += w * row * row.transpose();
      atb += w * h * row;
    }
    const Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 6, 6>> qr(ata);
    if (qr.rank() < 6) {
      out.points.push_back(on_plane);
      continue;
    }
    const Eigen::Matrix<double, 6, 1> coeffs = qr.solve(atb);
    out.points.push_back(on_plane + coeffs[0] * normal);
  }
  return out;
}

PointCloud crop_sphere(const PointCloud& cloud, const Vec3& center, double radius) {
  PointCloud out;
  const double r2 = radius * radius;
  for (const auto& p : cloud.points) {
    if ((p - center).squaredNorm() <= r2) out.points.push_back(p);
  }
  return out;
}

namespace {

void write_point(std::ostream& out, const Vec3& p) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", static_cast<double>(static_cast<float>(p.x())),
                static_cast<double>(static_cast<float>(p.y())),
                static_cast<double>(static_cast<float>(p.z())));
  out << buf;
}

Vec3 parse_xyz_line(const std::string& line, std::size_t line_no) {
  std::istringstream ss(line);
  Vec3 p;
  if (!(ss >> p.x() >> p.y() >> p.z())) throw ParseError("expected three coordinates", line_no);
  if (!p.allFinite()) throw ParseError("non-finite coordinate", line_no);
  return p;
}

PointCloud read_ply_body(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw ParseError("only ASCII PLY is supported", line_no);
    } else if (word == "element") {
      std::string name;
      ss >> name;
      in_vertex = name == "vertex";
      if (in_vertex && !(ss >> vertex_count)) throw ParseError("bad vertex element", line_no);
    } else if (word == "property" && in_vertex) {
      std::string type;
      std::string name;
      ss >> type >> name;
      props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  const auto index_of = [&](const std::string& name) {
    const auto it = std::find(props.begin(), props.end(), name);
    if (it == props.end()) throw ParseError("PLY vertex element lacks property '" + name + "'", line_no);
    return static_cast<std::size_t>(it - props.begin());
  };
  const std::size_t ix = index_of("x");
  const std::size_t iy = index_of("y");
  const std::size_t iz = index_of("z");

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  std::vector<double> values(props.size());
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!std::getline(in, line)) throw ParseError("PLY ended before all vertices were read", line_no);
    ++line_no;
    std::istringstream ss(line);
    for (auto& v : values) {
      if (!(ss >> v)) throw ParseError("malformed PLY vertex", line_no);
    }
    cloud.points.emplace_back(values[ix], values[iy], values[iz]);
  }
  return cloud;
}

}  // namespace

void write_ply(std::ostream& out, const PointCloud& cloud) {
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : cloud.points) write_point(out, p);
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
  for (const auto& p : cloud.points) write_point(out, p);
}

void write_mesh_ply(std::ostream& out, const TriangleMesh& mesh) {
  out << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nelement face " << mesh.triangles.size()
      << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) write_point(out, v);
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

PointCloud read_cloud(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  PointCloud cloud;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line_no == 1 && line.compare(first, 3, "ply") == 0) return read_ply_body(in);
    cloud.points.push_back(parse_xyz_line(line, line_no));
  }
  return cloud;
}

PointCloud read_cloud_string(const std::string& text) {
  std::istringstream in(text);
  return read_cloud(in);
}

PointCloud read_cloud_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cloud '" + path + "'");
  return read_cloud(in);
}

void write_cloud_file(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write cloud '" + path + "'");
  const bool ply = path.size() >= 4 && path.compare(path.size() - 4, 4, ".ply") == 0;
  if (ply) {
    write_ply(out, cloud);
  } else {
    write_xyz(out, cloud);
  }
}

}  // namespace handguide
