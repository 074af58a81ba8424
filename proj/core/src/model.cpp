#include "handguide/model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "handguide/error.hpp"

namespace handguide {

using nlohmann::json;

namespace {

// Andrew's monotone chain; returns indices into pts in counter-clockwise order.
std::vector<int> convex_hull_2d(const std::vector<Eigen::Vector2d>& pts, double tol) {
  std::vector<int> order(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return pts[a].x() < pts[b].x() || (pts[a].x() == pts[b].x() && pts[a].y() < pts[b].y());
  });
  auto cross = [&](int o, int a, int b) {
    const Eigen::Vector2d oa = pts[a] - pts[o];
    const Eigen::Vector2d ob = pts[b] - pts[o];
    return oa.x() * ob.y() - oa.y() * ob.x();
  };
  std::vector<int> hull(2 * order.size());
  std::size_t k = 0;
  for (int idx : order) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], idx) <= tol) --k;
    hull[k++] = idx;
  }
  for (std::size_t i = order.size() - 1, t = k + 1; i-- > 0;) {
    const int idx = order[i];
    while (k >= t && cross(hull[k - 2], hull[k - 1], idx) <= tol) --k;
    hull[k++] = idx;
  }
  hull.resize(k > 1 ? k - 1 : k);
  return hull;
}

}  // namespace

ConvexHull::ConvexHull(std::vector<Vec3> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 4) throw ValidationError("convex hull needs at least 4 vertices");
  Vec3 lo = vertices_[0];
  Vec3 hi = vertices_[0];
  for (const auto& v : vertices_) {
    if (!v.allFinite()) throw ValidationError("convex hull vertex is not finite");
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double scale = std::max(1.0, (hi - lo).norm());
  const double tol = 1e-9 * scale;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        Vec3 normal = (vertices_[j] - vertices_[i]).cross(vertices_[k] - vertices_[i]);
        const double len = normal.norm();
        if (len < tol * tol) continue;
        normal /= len;
        double offset = normal.dot(vertices_[i]);
        double smax = -std::numeric_limits<double>::infinity();
        double smin = std::numeric_limits<double>::infinity();
        for (const auto& v : vertices_) {
          const double s = normal.dot(v) - offset;
          smax = std::max(smax, s);
          smin = std::min(smin, s);
        }
        if (smax <= tol && smin >= -tol) {
          throw ValidationError("convex hull vertices are coplanar");
        }
        if (smax > tol) {
          if (smin < -tol) continue;
          normal = -normal;
          offset = -offset;
        }
        const bool seen = std::any_of(planes_.begin(), planes_.end(), [&](const auto& pl) {
          return pl.first.dot(normal) > 1.0 - 1e-9 && std::abs(pl.second - offset) < tol;
        });
        if (!seen) planes_.emplace_back(normal, offset);
      }
    }
  }
  if (planes_.size() < 4) throw ValidationError("convex hull is degenerate");

  for (const auto& [normal, offset] : planes_) {
    const Vec3 u = normal.unitOrthogonal();
    const Vec3 v = normal.cross(u);
    std::vector<int> on_plane;
    std::vector<Eigen::Vector2d> flat;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(normal.dot(vertices_[i]) - offset) <= tol) {
        on_plane.push_back(static_cast<int>(i));
        flat.emplace_back(u.dot(vertices_[i]), v.dot(vertices_[i]));
      }
    }
    std::vector<int> loop;
    for (int local : convex_hull_2d(flat, tol * tol)) loop.push_back(on_plane[local]);
    for (std::size_t t = 1; t + 1 < loop.size(); ++t) {
      triangles_.push_back({loop[0], loop[t], loop[t + 1]});
    }
    facets_.push_back(std::move(loop));
  }
}

double ConvexHull::distance(const Vec3& p) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [normal, offset] : planes_) worst = std::max(worst, normal.dot(p) - offset);
  if (worst <= 0.0) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : triangles_) {
    const Vec3 c = closest_point_on_triangle(p, vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    best = std::min(best, (p - c).norm());
  }
  return best;
}

double ConvexHull::volume() const {
  Vec3 center = Vec3::Zero();
  for (const auto& v : vertices_) center += v;
  center /= static_cast<double>(vertices_.size());
  double vol = 0.0;
  for (const auto& t : triangles_) {
    vol += (vertices_[t[0]] - center).dot((vertices_[t[1]] - center).cross(vertices_[t[2]] - center));
  }
  return vol / 6.0;
}

double shape_distance(const ShapeGeometry& shape, const Vec3& p) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return (p.cwiseAbs() - s.half_extents).cwiseMax(0.0).norm();
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          const double radial = std::max(std::hypot(p.x(), p.y()) - s.radius, 0.0);
          const double axial = std::max(std::abs(p.z()) - 0.5 * s.length, 0.0);
          return std::hypot(radial, axial);
        } else {
          return s.distance(p);
        }
      },
      shape);
}

double shape_volume(const ShapeGeometry& shape) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return 8.0 * s.half_extents.prod();
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          return M_PI * s.radius * s.radius * s.length;
        } else {
          return s.volume();
        }
      },
      shape);
}

Vec3 shape_centroid(const ShapeGeometry& shape) {
  if (const auto* hull = std::get_if<ConvexHull>(&shape)) {
    Vec3 c = Vec3::Zero();
    for (const auto& v : hull->vertices()) c += v;
    return c / static_cast<double>(hull->vertices().size());
  }
  return Vec3::Zero();
}

RobotModel::RobotModel(std::string name, std::vector<LinkSpec> links, std::vector<JointSpec> joints)
    : name_(std::move(name)) {
  if (joints.empty()) throw ValidationError("model has no joints");
  std::map<std::string, std::size_t> link_index;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (!link_index.emplace(links[i].name, i).second) {
      throw ValidationError("link '" + links[i].name + "': duplicate name");
    }
  }
  std::map<std::string, std::size_t> joint_by_parent;
  std::set<std::string> children;
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const auto& j = joints[i];
    if (!link_index.count(j.parent)) {
      throw ValidationError("joint '" + j.name + "': unknown parent link '" + j.parent + "'");
    }
    if (!link_index.count(j.child)) {
      throw ValidationError("joint '" + j.name + "': unknown child link '" + j.child + "'");
    }
    if (!joint_by_parent.emplace(j.parent, i).second) {
      throw ValidationError("joint '" + j.name + "': link '" + j.parent +
                            "' already has a child joint (branched chains are not supported)");
    }
    if (!children.insert(j.child).second) {
      throw ValidationError("joint '" + j.name + "': link '" + j.child + "' has two parents");
    }
  }
  std::vector<std::string> roots;
  for (const auto& l : links) {
    if (!children.count(l.name)) roots.push_back(l.name);
  }
  if (roots.size() != 1) {
    throw ValidationError("model must have exactly one root link, found " +
                          std::to_string(roots.size()));
  }
  std::string current = roots.front();
  links_.push_back(links[link_index[current]]);
  while (true) {
    auto it = joint_by_parent.find(current);
    if (it == joint_by_parent.end()) break;
    joints_.push_back(joints[it->second]);
    current = joints[it->second].child;
    links_.push_back(links[link_index[current]]);
    if (joints_.size() > joints.size()) throw ValidationError("kinematic chain contains a cycle");
  }
  if (joints_.size() != joints.size() || links_.size() != links.size()) {
    throw ValidationError("kinematic chain is not a single serial chain covering every link");
  }
  for (auto& j : joints_) {
    const double len = j.axis.norm();
    if (!(len > 1e-12) || !j.axis.allFinite()) {
      throw ValidationError("joint '" + j.name + "': axis must be a nonzero finite vector");
    }
    j.axis /= len;
    if (!(j.limits.lower <= j.limits.upper)) {
      throw ValidationError("joint '" + j.name + "': lower limit exceeds upper limit");
    }
    if (!(j.limits.velocity > 0.0)) {
      throw ValidationError("joint '" + j.name + "': velocity limit must be positive");
    }
  }
  for (const auto& l : links_) {
    if (!l.collision) continue;
    if (const auto* b = std::get_if<Box>(&l.collision->geometry)) {
      if (!(b->half_extents.minCoeff() > 0.0)) {
        throw ValidationError("link '" + l.name + "': box half extents must be positive");
      }
    } else if (const auto* c = std::get_if<Cylinder>(&l.collision->geometry)) {
      if (!(c->radius > 0.0 && c->length > 0.0)) {
        throw ValidationError("link '" + l.name + "': cylinder dimensions must be positive");
      }
    }
  }
}

bool RobotModel::within_limits(const Configuration& q) const {
  if (static_cast<std::size_t>(q.size()) != joints_.size()) return false;
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    if (!joints_[i].limits.contains(q[static_cast<Eigen::Index>(i)])) return false;
  }
  return true;
}

namespace {

Vec3 read_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(what + ": expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ValidationError(what + ": expected an array of 3 numbers");
    v[i] = j[i].get<double>();
  }
  if (!v.allFinite()) throw ValidationError(what + ": non-finite value");
  return v;
}

RigidTransform read_origin(const json& parent, const std::string& what) {
  if (!parent.contains("origin")) return RigidTransform::Identity();
  const json& o = parent.at("origin");
  if (!o.is_object()) throw ValidationError(what + ": origin must be an object");
  const Vec3 xyz = o.contains("xyz") ? read_vec3(o.at("xyz"), what + " origin.xyz") : Vec3::Zero();
  const Vec3 rpy = o.contains("rpy") ? read_vec3(o.at("rpy"), what + " origin.rpy") : Vec3::Zero();
  return RigidTransform::FromXyzRpy(xyz, rpy);
}

double read_number(const json& obj, const char* key, const std::string& what) {
  if (!obj.contains(key) || !obj.at(key).is_number()) {
    throw ValidationError(what + ": missing numeric field '" + key + "'");
  }
  return obj.at(key).get<double>();
}

std::string read_string(const json& obj, const char* key, const std::string& what) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw ValidationError(what + ": missing string field '" + key + "'");
  }
  return obj.at(key).get<std::string>();
}

CollisionShape read_collision(const json& c, const std::string& what) {
  if (!c.is_object()) throw ValidationError(what + ": collision must be an object");
  const std::string type = read_string(c, "type", what + " collision");
  CollisionShape shape{Box{}, read_origin(c, what + " collision")};
  if (type == "box") {
    if (!c.contains("half_extents")) throw ValidationError(what + ": box needs half_extents");
    shape.geometry = Box{read_vec3(c.at("half_extents"), what + " half_extents")};
  } else if (type == "cylinder") {
    shape.geometry = Cylinder{read_number(c, "radius", what + " cylinder"),
                              read_number(c, "length", what + " cylinder")};
  } else if (type == "hull") {
    if (!c.contains("vertices") || !c.at("vertices").is_array()) {
      throw ValidationError(what + ": hull needs a vertices array");
    }
    std::vector<Vec3> verts;
    for (const auto& v : c.at("vertices")) verts.push_back(read_vec3(v, what + " hull vertex"));
    try {
      shape.geometry = ConvexHull(std::move(verts));
    } catch (const ValidationError& e) {
      throw ValidationError(what + ": " + e.what());
    }
  } else {
    throw ValidationError(what + ": unknown collision type '" + type + "'");
  }
  return shape;
}

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

json write_origin(const RigidTransform& t) {
  const Vec3 rpy = t.rpy();
  return {{"xyz", {t.translation().x(), t.translation().y(), t.translation().z()}},
          {"rpy", {rpy.x(), rpy.y(), rpy.z()}}};
}

json write_vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

RobotModel load_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of_byte(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  if (!doc.is_object()) throw ParseError("robot description must be a JSON object", 1);
  const std::string name = doc.contains("name") && doc["name"].is_string() ? doc["name"].get<std::string>() : "robot";
  if (!doc.contains("links") || !doc["links"].is_array()) throw ValidationError("missing 'links' array");
  if (!doc.contains("joints") || !doc["joints"].is_array()) throw ValidationError("missing 'joints' array");

  std::vector<LinkSpec> links;
  for (const auto& l : doc["links"]) {
    if (!l.is_object()) throw ValidationError("link entries must be objects");
    LinkSpec link;
    link.name = read_string(l, "name", "link");
    const std::string what = "link '" + link.name + "'";
    if (l.contains("collision") && !l["collision"].is_null()) {
      link.collision = read_collision(l["collision"], what);
    }
    if (l.contains("visual") && l["visual"].is_string()) link.visual = l["visual"].get<std::string>();
    links.push_back(std::move(link));
  }
  std::vector<JointSpec> joints;
  for (const auto& j : doc["joints"]) {
    if (!j.is_object()) throw ValidationError("joint entries must be objects");
    JointSpec joint;
    joint.name = read_string(j, "name", "joint");
    const std::string what = "joint '" + joint.name + "'";
    if (j.contains("type") && j["type"] != "revolute") {
      throw ValidationError(what + ": only revolute joints are supported");
    }
    joint.parent = read_string(j, "parent", what);
    joint.child = read_string(j, "child", what);
    joint.origin = read_origin(j, what);
    if (j.contains("axis")) joint.axis = read_vec3(j["axis"], what + " axis");
    if (j.contains("limits")) {
      const auto& lim = j["limits"];
      if (!lim.is_object()) throw ValidationError(what + ": limits must be an object");
      if (lim.contains("lower")) joint.limits.lower = read_number(lim, "lower", what + " limits");
      if (lim.contains("upper")) joint.limits.upper = read_number(lim, "upper", what + " limits");
      if (lim.contains("velocity")) joint.limits.velocity = read_number(lim, "velocity", what + " limits");
    }
    joints.push_back(std::move(joint));
  }
  return RobotModel(name, std::move(links), std::move(joints));
}

RobotModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open robot description '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

std::string model_to_json(const RobotModel& model, int indent) {
  json doc;
  doc["name"] = model.name();
  doc["links"] = json::array();
  for (const auto& l : model.links()) {
    json link{{"name", l.name}};
    if (l.collision) {
      json c;
      std::visit(
          [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Box>) {
              c["type"] = "box";
              c["half_extents"] = write_vec3(s.half_extents);
            } else if constexpr (std::is_same_v<T, Cylinder>) {
              c["type"] = "cylinder";
              c["radius"] = s.radius;
              c["length"] = s.length;
            } else {
              c["type"] = "hull";
              c["vertices"] = json::array();
              for (const auto& v : s.vertices()) c["vertices"].push_back(write_vec3(v));
            }
          },
          l.collision->geometry);
      c["origin"] = write_origin(l.collision->origin);
      link["collision"] = std::move(c);
    }
    if (l.visual) link["visual"] = *l.visual;
    doc["links"].push_back(std::move(link));
  }
  doc["joints"] = json::array();
  for (const auto& j : model.joints()) {
    doc["joints"].push_back({{"name", j.name},
                             {"type", "revolute"},
                             {"parent", j.parent},
                             {"child", j.child},
                             {"origin", write_origin(j.origin)},
                             {"axis", write_vec3(j.axis)},
                             {"limits",
                              {{"lower", j.limits.lower},
                               {"upper", j.limits.upper},
                               {"velocity", j.limits.velocity}}}});
  }
  return doc.dump(indent);
}

std::vector<RigidTransform> forward_kinematics(const RobotModel& model, const Configuration& q,
                                               const RigidTransform& base) {
  if (static_cast<std::size_t>(q.size()) != model.joint_count()) {
    throw DimensionError("configuration has " + std::to_string(q.size()) + " entries, model has " +
                         std::to_string(model.joint_count()) + " joints");
  }
  std::vector<RigidTransform> poses;
  poses.reserve(model.link_count());
  poses.push_back(base);
  for (std::size_t i = 0; i < model.joint_count(); ++i) {
    const auto& j = model.joints()[i];
    poses.push_back(poses.back() * j.origin *
                    RigidTransform::Rotation(j.axis, q[static_cast<Eigen::Index>(i)]));
  }
  return poses;
}

JointFrame joint_world_frame(const RobotModel& model, const Configuration& q, std::size_t k,
                             const RigidTransform& base) {
  if (k >= model.joint_count()) {
    throw DimensionError("joint index " + std::to_string(k) + " out of range");
  }
  if (static_cast<std::size_t>(q.size()) != model.joint_count()) {
    throw DimensionError("configuration size does not match joint count");
  }
  RigidTransform pose = base;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& j = model.joints()[i];
    pose = pose * j.origin * RigidTransform::Rotation(j.axis, q[static_cast<Eigen::Index>(i)]);
  }
  pose = pose * model.joints()[k].origin;
  return {pose.translation(), (pose.rotation() * model.joints()[k].axis).normalized(), pose};
}

double zone_distance(const RobotModel& model, const std::vector<RigidTransform>& link_poses,
                     std::size_t k, const Vec3& point) {
  const auto& link = model.zone_link(k);
  if (!link.collision) return std::numeric_limits<double>::infinity();
  const RigidTransform shape_pose = link_poses.at(k + 1) * link.collision->origin;
  return shape_distance(link.collision->geometry, shape_pose.inverse() * point);
}

bool zone_contains(const RobotModel& model, const Configuration& q, std::size_t k,
                   const Vec3& point, double margin) {
  if (k >= model.joint_count()) return false;
  return zone_distance(model, forward_kinematics(model, q), k, point) <= margin;
}

std::optional<std::size_t> active_zone(const RobotModel& model,
                                       const std::vector<RigidTransform>& link_poses,
                                       const Vec3& point, double margin) {
  for (std::size_t k = model.joint_count(); k-- > 0;) {
    if (zone_distance(model, link_poses, k, point) <= margin) return k;
  }
  return std::nullopt;
}

std::optional<std::size_t> active_zone(const RobotModel& model, const Configuration& q,
                                       const Vec3& point, double margin) {
  return active_zone(model, forward_kinematics(model, q), point, margin);
}

}  // namespace handguide
