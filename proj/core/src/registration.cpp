#include "handguide/registration.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "handguide/error.hpp"
#include "handguide/surface.hpp"

namespace handguide {

RigidTransform estimate_rigid(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size()) throw DimensionError("estimate_rigid: point lists differ in length");
  if (source.size() < 3) throw ValidationError("estimate_rigid: need at least 3 point pairs");
  const double n = static_cast<double>(source.size());
  Vec3 cs = Vec3::Zero();
  Vec3 ct = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= n;
  ct /= n;
  Mat3 cov = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 ds = source[i] - cs;
    cov += (target[i] - ct) * ds.transpose();
    spread += ds * ds.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> shape(spread);
  const Vec3 ev = shape.eigenvalues();  // ascending
  if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) {
    throw ValidationError("estimate_rigid: source points are collinear or coincident");
  }
  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
  return {r, ct - r * cs};
}

double rms_closest(const PointCloud& model_cloud, const PointCloud& scene_cloud,
                   const RigidTransform& transform) {
  if (model_cloud.empty() || scene_cloud.empty()) throw ValidationError("rms_closest: empty cloud");
  const KdTree tree(scene_cloud.points);
  double sum = 0.0;
  for (const auto& p : model_cloud.points) sum += tree.nearest(transform * p).squared_distance;
  return std::sqrt(sum / static_cast<double>(model_cloud.size()));
}

RegistrationResult icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                       const IcpParams& params) {
  if (source.empty() || target.empty()) throw RegistrationError("icp", "empty input cloud");
  const KdTree tree(target.points);
  const double max_d2 = params.max_correspondence_distance * params.max_correspondence_distance;

  RegistrationResult result;
  result.transform = init;
  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  src.reserve(source.size());
  dst.reserve(source.size());
  // Last correspondence per source point; it seeds the next exact search.
  std::vector<std::size_t> hint(source.size(), target.size());

  for (int it = 1; it <= params.max_iterations; ++it) {
    src.clear();
    dst.clear();
    double cost = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      const Vec3 moved = result.transform * source.points[i];
      const auto nn = tree.nearest(moved, hint[i]);
      hint[i] = nn.index;
      if (nn.squared_distance <= max_d2) {
        src.push_back(moved);
        dst.push_back(target.points[nn.index]);
        cost += nn.squared_distance;
      } else {
        cost += max_d2;
      }
    }
    result.objective.push_back(cost / static_cast<double>(source.size()));
    result.iterations = it;
    if (src.size() < 3) {
      if (it == 1) {
        throw RegistrationError("icp", "no correspondences within " +
                                           std::to_string(params.max_correspondence_distance) +
                                           " m at the initial pose");
      }
      break;
    }
    RigidTransform step;
    try {
      step = estimate_rigid(src, dst);
    } catch (const ValidationError&) {
      break;
    }
    result.transform = step * result.transform;
    if (step.translation().norm() < params.translation_epsilon &&
        rotation_angle(step.rotation()) < params.rotation_epsilon) {
      result.converged = true;
      break;
    }
  }
  result.rms = rms_closest(source, target, result.transform);
  return result;
}

BaseInvariants base_invariants(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  // Closest points between lines a + s u and c + t v.
  const Vec3 u = b - a;
  const Vec3 v = d - c;
  const Vec3 w = a - c;
  const double uu = u.dot(u);
  const double uv = u.dot(v);
  const double vv = v.dot(v);
  const double uw = u.dot(w);
  const double vw = v.dot(w);
  const double den = uu * vv - uv * uv;
  BaseInvariants inv;
  if (std::abs(den) <= 1e-14 * uu * vv) {
    inv.r1 = inv.r2 = std::numeric_limits<double>::quiet_NaN();
    inv.gap = std::numeric_limits<double>::infinity();
    return inv;
  }
  inv.r1 = (uv * vw - vv * uw) / den;
  inv.r2 = (uu * vw - uv * uw) / den;
  inv.gap = ((a + inv.r1 * u) - (c + inv.r2 * v)).norm();
  return inv;
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (m >= n) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct Base {
  std::array<Vec3, 4> pts;
  BaseInvariants inv;
};

// Coplanar 4-point base with crossing diagonals (pts[0],pts[1]) x (pts[2],pts[3]).
std::optional<Base> pick_base(const std::vector<Vec3>& sample, double base_dist, double coplanar_tol,
                              std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Vec3& a = sample[pick(rng)];
    const Vec3& b = sample[pick(rng)];
    const Vec3& c = sample[pick(rng)];
    const double ab = (a - b).norm();
    const double ac = (a - c).norm();
    const double bc = (b - c).norm();
    const double lo = 0.3 * base_dist;
    if (std::min({ab, ac, bc}) < lo || std::max({ab, ac, bc}) > base_dist) continue;
    Vec3 normal = (b - a).cross(c - a);
    if (normal.norm() < 0.1 * base_dist * base_dist) continue;
    normal.normalize();

    std::optional<Base> best;
    double best_score = 0.0;
    for (const Vec3& d : sample) {
      if (std::abs((d - a).dot(normal)) > coplanar_tol) continue;
      const double spread = std::min({(d - a).norm(), (d - b).norm(), (d - c).norm()});
      if (spread < lo || std::max({(d - a).norm(), (d - b).norm(), (d - c).norm()}) > base_dist) continue;
      // Try the three pairings of the four points into two diagonals.
      const std::array<std::array<const Vec3*, 4>, 3> pairings{{{&a, &b, &c, &d}, {&a, &c, &b, &d}, {&a, &d, &b, &c}}};
      for (const auto& p : pairings) {
        const BaseInvariants inv = base_invariants(*p[0], *p[1], *p[2], *p[3]);
        if (!(inv.r1 > 0.1 && inv.r1 < 0.9 && inv.r2 > 0.1 && inv.r2 < 0.9)) continue;
        if (inv.gap > coplanar_tol) continue;
        if (spread > best_score) {
          best_score = spread;
          best = Base{{*p[0], *p[1], *p[2], *p[3]}, inv};
        }
      }
    }
    if (best) return best;
  }
  return std::nullopt;
}

struct Pair {
  std::uint32_t i;
  std::uint32_t j;
  double length;
};

}  // namespace

RegistrationResult congruent_set_register(const PointCloud& source, const PointCloud& target,
                                          const CongruentParams& params) {
  if (source.size() < 4 || target.size() < 4) {
    throw RegistrationError("congruent", "both clouds need at least 4 points");
  }
  if (!(params.overlap_estimate > 0.0 && params.overlap_estimate <= 1.0) || !(params.delta > 0.0)) {
    throw ValidationError("congruent: overlap must be in (0, 1] and delta positive");
  }

  std::vector<Vec3> src;
  for (auto i : sample_indices(source.size(), params.sample_size, params.seed)) src.push_back(source.points[i]);
  std::vector<Vec3> tgt;
  for (auto i : sample_indices(target.size(), params.sample_size, params.seed)) tgt.push_back(target.points[i]);
  const KdTree target_tree(target.points);
  const KdTree sample_tree(tgt);

  double tol = params.congruence_tolerance;
  if (!(tol > 0.0)) {
    std::vector<double> spacing;
    for (const auto& p : tgt) {
      const auto nn = sample_tree.knn(p, 2);
      if (nn.size() == 2) spacing.push_back(std::sqrt(nn[1].squared_distance));
    }
    std::nth_element(spacing.begin(), spacing.begin() + static_cast<long>(spacing.size() / 2), spacing.end());
    tol = std::max(params.delta, spacing[spacing.size() / 2]);
  }

  // Source extent sets the base size.
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : src) centroid += p;
  centroid /= static_cast<double>(src.size());
  double radius = 0.0;
  for (const auto& p : src) radius = std::max(radius, (p - centroid).norm());
  const double base_dist = std::max(2.0 * radius * params.overlap_estimate, 4.0 * tol);

  std::vector<Pair> pairs;
  for (std::uint32_t i = 0; i < tgt.size(); ++i) {
    for (std::uint32_t j = i + 1; j < tgt.size(); ++j) pairs.push_back({i, j, (tgt[i] - tgt[j]).norm()});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.length < b.length; });
  const auto pairs_in = [&](double len) {
    const auto lo = std::lower_bound(pairs.begin(), pairs.end(), len - tol,
                                     [](const Pair& p, double v) { return p.length < v; });
    const auto hi = std::upper_bound(pairs.begin(), pairs.end(), len + tol,
                                     [](double v, const Pair& p) { return v < p.length; });
    return std::make_pair(lo, hi);
  };

  std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> verify_order(src.size());
  std::iota(verify_order.begin(), verify_order.end(), 0);
  std::shuffle(verify_order.begin(), verify_order.end(), rng);
  const double delta2 = params.delta * params.delta;

  RegistrationResult result;
  std::size_t best_count = 0;
  bool found_base = false;
  bool any_candidate = false;

  auto lcp_count = [&](const RigidTransform& t, std::size_t to_beat) {
    std::size_t count = 0;
    for (std::size_t k = 0; k < verify_order.size(); ++k) {
      if (count + (verify_order.size() - k) <= to_beat) return std::size_t{0};
      if (target_tree.any_within(t * src[verify_order[k]], params.delta)) ++count;
    }
    return count;
  };
  // Preemptive tests on prefixes of the verification order: a candidate whose
  // prefix hit rate falls under a fraction of the incumbent's full rate is dropped.
  auto passes_prefix = [&](const RigidTransform& t) {
    if (best_count == 0) return true;
    const double best_rate = static_cast<double>(best_count) / static_cast<double>(verify_order.size());
    std::size_t hits = 0;
    std::size_t k = 0;
    for (const auto& [size, factor] : {std::pair<std::size_t, double>{8, 0.25}, {64, 0.5}}) {
      const std::size_t end = std::min(size, verify_order.size());
      for (; k < end; ++k) {
        if (target_tree.any_within(t * src[verify_order[k]], params.delta)) ++hits;
      }
      if (static_cast<double>(hits) < factor * best_rate * static_cast<double>(end)) return false;
    }
    return true;
  };

  std::vector<Vec3> crossings;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> crossing_pairs;
  std::vector<KdTree::Neighbor> hits;
  for (std::size_t trial = 0; trial < params.num_bases; ++trial) {
    const auto base = pick_base(src, base_dist, params.coplanarity_tolerance, rng);
    result.iterations = static_cast<int>(trial + 1);
    if (!base) continue;
    found_base = true;
    const auto& bp = base->pts;
    const double d1 = (bp[1] - bp[0]).norm();
    const double d2 = (bp[3] - bp[2]).norm();
    const double base_cos = (bp[1] - bp[0]).normalized().dot((bp[3] - bp[2]).normalized());
    // Cross distances turn the affine-invariant match into a rigid one.
    const std::array<double, 4> cross{(bp[2] - bp[0]).norm(), (bp[3] - bp[0]).norm(), (bp[2] - bp[1]).norm(),
                                      (bp[3] - bp[1]).norm()};

    crossings.clear();
    crossing_pairs.clear();
    const auto [lo2, hi2] = pairs_in(d2);
    for (auto it = lo2; it != hi2; ++it) {
      for (const auto& [c, d] : {std::pair{it->i, it->j}, std::pair{it->j, it->i}}) {
        crossings.push_back(tgt[c] + base->inv.r2 * (tgt[d] - tgt[c]));
        crossing_pairs.emplace_back(c, d);
      }
    }
    if (crossings.empty()) continue;
    const KdTree crossing_tree(crossings);

    std::vector<std::array<std::uint32_t, 4>> candidates;
    const auto [lo1, hi1] = pairs_in(d1);
    for (auto it = lo1; it != hi1; ++it) {
      for (const auto& [a, b] : {std::pair{it->i, it->j}, std::pair{it->j, it->i}}) {
        const Vec3 e = tgt[a] + base->inv.r1 * (tgt[b] - tgt[a]);
        crossing_tree.radius_unordered(e, tol, hits);
        const Vec3 dir1 = (tgt[b] - tgt[a]).normalized();
        for (const auto& h : hits) {
          const auto [c, d] = crossing_pairs[h.index];
          if (c == a || c == b || d == a || d == b) continue;
          const double cand_cos = dir1.dot((tgt[d] - tgt[c]).normalized());
          if (std::abs(cand_cos - base_cos) > 0.15) continue;
          if (std::abs((tgt[c] - tgt[a]).norm() - cross[0]) > 2.0 * tol ||
              std::abs((tgt[d] - tgt[a]).norm() - cross[1]) > 2.0 * tol ||
              std::abs((tgt[c] - tgt[b]).norm() - cross[2]) > 2.0 * tol ||
              std::abs((tgt[d] - tgt[b]).norm() - cross[3]) > 2.0 * tol) {
            continue;
          }
          candidates.push_back({a, b, c, d});
        }
      }
    }
    if (candidates.size() > params.max_candidates_per_base) {
      std::shuffle(candidates.begin(), candidates.end(), rng);
      candidates.resize(params.max_candidates_per_base);
    }
    for (const auto& cand : candidates) {
      const std::array<Vec3, 4> quad{tgt[cand[0]], tgt[cand[1]], tgt[cand[2]], tgt[cand[3]]};
      RigidTransform t;
      try {
        t = estimate_rigid(bp, quad);
      } catch (const ValidationError&) {
        continue;
      }
      double worst = 0.0;
      for (int k = 0; k < 4; ++k) worst = std::max(worst, (t * bp[k] - quad[k]).norm());
      if (worst > 2.0 * tol) continue;
      any_candidate = true;
      if (!passes_prefix(t)) continue;
      const std::size_t count = lcp_count(t, best_count);
      if (count > best_count) {
        best_count = count;
        result.transform = t;
      }
    }
  }
  if (!found_base) throw RegistrationError("congruent", "no coplanar base found in the source");
  if (!any_candidate || best_count == 0) {
    result.converged = false;
    result.lcp = 0.0;
    result.rms = rms_closest(source, target, result.transform);
    return result;
  }

  // Least-squares refit over the winning pose's common pointset.
  std::vector<Vec3> in_src;
  std::vector<Vec3> in_dst;
  for (const auto& p : src) {
    const auto nn = target_tree.nearest(result.transform * p);
    if (nn.squared_distance <= delta2) {
      in_src.push_back(p);
      in_dst.push_back(target.points[nn.index]);
    }
  }
  if (in_src.size() >= 3) {
    try {
      const RigidTransform refit = estimate_rigid(in_src, in_dst);
      const std::size_t refit_count = lcp_count(refit, 0);
      if (refit_count >= best_count) {
        result.transform = refit;
        best_count = refit_count;
      }
    } catch (const ValidationError&) {
    }
  }
  result.lcp = static_cast<double>(best_count) / static_cast<double>(src.size());
  result.converged = true;
  result.rms = rms_closest(source, target, result.transform);
  return result;
}

std::string to_string(Method m) { return m == Method::Icp ? "icp" : "congruent"; }

Method parse_method(const std::string& s) {
  if (s == "icp") return Method::Icp;
  if (s == "congruent") return Method::Congruent;
  throw ValidationError("unknown registration method '" + s + "' (expected icp or congruent)");
}

Preset preset_big() { return {"big", 256000, 1.24e6}; }
Preset preset_small() { return {"small", 16000, 1000.0}; }

Preset parse_preset(const std::string& s) {
  if (s == "big") return preset_big();
  if (s == "small") return preset_small();
  throw ValidationError("unknown preset '" + s + "' (expected big or small)");
}

PipelineResult register_pipeline(const PointCloud& scene, const RobotModel& model, const Configuration& q,
                                 const RigidTransform& seed_pose, Method method, const Preset& preset,
                                 const PipelineParams& params) {
  PipelineResult out;
  const PointCloud cropped = crop_sphere(scene, seed_pose.translation(), params.crop_radius);
  out.cropped_points = cropped.size();
  if (cropped.size() <= params.outliers.k) {
    throw RegistrationError("crop", "empty crop: only " + std::to_string(cropped.size()) +
                                        " scene points within " + std::to_string(params.crop_radius) +
                                        " m of the seed");
  }
  PointCloud filtered;
  try {
    filtered = mls_smooth(remove_outliers(cropped, params.outliers.k, params.outliers.alpha),
                          params.mls.radius, params.mls.degree);
  } catch (const ValidationError& e) {
    throw RegistrationError("filter", e.what());
  }
  out.filtered_points = filtered.size();

  PointCloud model_cloud;
  try {
    model_cloud = sample_mesh(robot_surface(model, q, preset.triangles_per_m3), preset.samples, params.model_seed);
  } catch (const Error& e) {
    throw RegistrationError("model", e.what());
  }
  out.model_points = model_cloud.size();

  if (method == Method::Icp) {
    out.registration = icp(model_cloud, filtered, seed_pose, params.icp);
  } else {
    out.registration = congruent_set_register(model_cloud, filtered, params.congruent);
  }
  out.registration.rms = rms_closest(model_cloud, cropped, out.registration.transform);
  return out;
}

std::string transform_to_json(const RigidTransform& t) {
  nlohmann::json j;
  j["rotation"] = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) j["rotation"].push_back(t.rotation()(r, c));
  }
  j["translation"] = {t.translation().x(), t.translation().y(), t.translation().z()};
  return j.dump();
}

RigidTransform transform_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
  try {
    if (j.contains("xyz") || j.contains("rpy")) {
      const auto xyz = j.value("xyz", std::vector<double>{0, 0, 0});
      const auto rpy = j.value("rpy", std::vector<double>{0, 0, 0});
      if (xyz.size() != 3 || rpy.size() != 3) throw ValidationError("xyz and rpy need 3 entries");
      return RigidTransform::FromXyzRpy({xyz[0], xyz[1], xyz[2]}, {rpy[0], rpy[1], rpy[2]});
    }
    const auto rot = j.at("rotation").get<std::vector<double>>();
    const auto tr = j.at("translation").get<std::vector<double>>();
    if (rot.size() != 9 || tr.size() != 3) throw ValidationError("rotation needs 9 entries, translation 3");
    Mat3 r;
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = rot[static_cast<std::size_t>(i)];
    const RigidTransform t(r, {tr[0], tr[1], tr[2]});
    if (t.orthonormality_error() > 1e-6) throw ValidationError("rotation is not orthonormal");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad transform document: ") + e.what());
  }
}

}  // namespace handguide
