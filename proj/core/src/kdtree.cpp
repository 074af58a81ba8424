#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <queue>

#include "handguide/cloud.hpp"

namespace handguide {

namespace {

double box_distance2(const Vec3& lo, const Vec3& hi, const Vec3& q) {
  const Vec3 d = (lo - q).cwiseMax(q - hi).cwiseMax(0.0);
  return d.squaredNorm();
}

bool closer(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  return a.squared_distance < b.squared_distance ||
         (a.squared_distance == b.squared_distance && a.index < b.index);
}

// Traversal stack: at most one pending sibling per level plus the current node.
template <typename T>
class StackBuffer {
 public:
  explicit StackBuffer(int depth) {
    const auto need = static_cast<std::size_t>(depth) + 2;
    if (need > kInline) heap_.resize(need);
    data_ = need > kInline ? heap_.data() : inline_.data();
  }
  void push(const T& v) { data_[size_++] = v; }
  T pop() { return data_[--size_]; }
  bool empty() const { return size_ == 0; }

 private:
  static constexpr std::size_t kInline = 96;
  std::array<T, kInline> inline_;
  std::vector<T> heap_;
  T* data_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace

KdTree::KdTree(std::vector<Vec3> points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / leaf_size_ + 2);
    build(0, static_cast<std::uint32_t>(points_.size()), 0);
  }
  packed_.reserve(points_.size());
  for (const auto i : order_) packed_.push_back(points_[i]);
}

int KdTree::build(std::uint32_t begin, std::uint32_t end, int depth) {
  max_depth_ = std::max(max_depth_, depth);
  const int id = static_cast<int>(nodes_.size());
  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  nodes_.push_back({begin, end, -1, -1, -1, 0.0, lo, hi});
  if (end - begin <= leaf_size_) return id;

  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<KdTree::Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  k = std::min(k, points_.size());
  if (k == 0) return {};
  auto cmp = [](const Neighbor& a, const Neighbor& b) { return closer(a, b); };
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(cmp)> heap(cmp);

  // Explicit stack of (node, lower bound on squared distance).
  std::vector<std::pair<int, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (heap.size() == k && bound > heap.top().squared_distance) continue;
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Neighbor cand{order_[i], (packed_[i] - query).squaredNorm()};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (closer(cand, heap.top())) {
          heap.pop();
          heap.push(cand);
        }
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, box_distance2(nodes_[far].lo, nodes_[far].hi, query));
    stack.emplace_back(near, bound);
  }
  std::vector<Neighbor> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top();
    heap.pop();
  }
  return out;
}

void KdTree::radius(const Vec3& query, double r, std::vector<Neighbor>& out) const {
  radius_unordered(query, r, out);
  std::sort(out.begin(), out.end(), closer);
}

void KdTree::radius_unordered(const Vec3& query, double r, std::vector<Neighbor>& out) const {
  out.clear();
  visit_radius(query, r, [&](std::size_t index, double d2, const Vec3&) { out.push_back({index, d2}); });
}

std::vector<KdTree::Neighbor> KdTree::radius(const Vec3& query, double r) const {
  std::vector<Neighbor> out;
  radius(query, r, out);
  return out;
}

KdTree::Neighbor KdTree::nearest(const Vec3& query) const {
  return nearest_from({0, std::numeric_limits<double>::infinity()}, query);
}

KdTree::Neighbor KdTree::nearest(const Vec3& query, std::size_t hint) const {
  if (hint >= points_.size()) return nearest(query);
  return nearest_from({hint, (points_[hint] - query).squaredNorm()}, query);
}

bool KdTree::any_within(const Vec3& query, double r) const {
  if (points_.empty() || r < 0.0) return false;
  const double r2 = r * r;
  StackBuffer<int> stack(max_depth_);
  stack.push(0);
  while (!stack.empty()) {
    const Node& node = nodes_[stack.pop()];
    if (box_distance2(node.lo, node.hi, query) > r2) continue;
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        if ((packed_[i] - query).squaredNorm() <= r2) return true;
      }
      continue;
    }
    const bool left_first = query[node.axis] < node.split;
    stack.push(left_first ? node.right : node.left);
    stack.push(left_first ? node.left : node.right);
  }
  return false;
}

KdTree::Neighbor KdTree::nearest_from(Neighbor best, const Vec3& query) const {
  StackBuffer<std::pair<int, double>> stack(max_depth_);
  stack.push({0, 0.0});
  while (!stack.empty()) {
    const auto [id, bound] = stack.pop();
    if (bound > best.squared_distance) continue;
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Neighbor cand{order_[i], (packed_[i] - query).squaredNorm()};
        if (closer(cand, best)) best = cand;
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    const double far_bound = box_distance2(nodes_[far].lo, nodes_[far].hi, query);
    if (far_bound <= best.squared_distance) stack.push({far, far_bound});
    stack.push({near, bound});
  }
  return best;
}

}  // namespace handguide
