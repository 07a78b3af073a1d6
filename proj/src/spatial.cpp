#include "dwg/spatial.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <iostream>
#include <numeric>

namespace dwg {

// ---------------------------------------------------------------------------
// Octree

namespace {

Aabb root_cube(const std::vector<Vec3>& points) {
  const Aabb tight = bounding_box(points);
  const Vec3 ext = tight.extent();
  double side = std::max({ext.x, ext.y, ext.z});
  if (side <= 0.0) side = 1e-9;  // single point or coincident cloud
  side *= 1.05;
  const Vec3 c = tight.center();
  const Vec3 half{side * 0.5, side * 0.5, side * 0.5};
  Aabb box;
  box.min = c - half;
  box.max = c + half;
  return box;
}

int octant_of(const Vec3& p, const Vec3& center) {
  return (p.x >= center.x ? 1 : 0) | (p.y >= center.y ? 2 : 0) | (p.z >= center.z ? 4 : 0);
}

Aabb octant_box(const Aabb& parent, int oct) {
  const Vec3 c = parent.center();
  Aabb b;
  b.min.x = (oct & 1) ? c.x : parent.min.x;
  b.max.x = (oct & 1) ? parent.max.x : c.x;
  b.min.y = (oct & 2) ? c.y : parent.min.y;
  b.max.y = (oct & 2) ? parent.max.y : c.y;
  b.min.z = (oct & 4) ? c.z : parent.min.z;
  b.max.z = (oct & 4) ? parent.max.z : c.z;
  return b;
}

}  // namespace

WindingOctree build_octree(const PointCloud& cloud, int max_depth, int max_leaf_points) {
  if (cloud.points.empty()) throw EmptyInputError("build_octree: empty cloud");
  if (max_depth < 1 || max_depth > 21)
    throw InvalidConfigError("build_octree: max_depth must be in [1, 21]");
  if (max_leaf_points < 1)
    throw InvalidConfigError("build_octree: max_leaf_points must be >= 1");

  const auto n = static_cast<std::int32_t>(cloud.points.size());
  WindingOctree tree;
  tree.max_depth_ = max_depth;
  tree.root_box_ = root_cube(cloud.points);
  tree.permutation_.resize(n);
  std::iota(tree.permutation_.begin(), tree.permutation_.end(), 0);

  auto& nodes = tree.nodes_;
  auto& perm = tree.permutation_;

  OctreeNode root;
  root.box = tree.root_box_;
  root.begin = 0;
  root.end = n;
  root.depth = 0;
  nodes.push_back(root);

  std::vector<std::int32_t> stack{0};
  std::vector<std::int32_t> scratch;
  while (!stack.empty()) {
    const std::int32_t idx = stack.back();
    stack.pop_back();
    // copy fields we need; nodes may reallocate below
    const Aabb box = nodes[idx].box;
    const std::int32_t begin = nodes[idx].begin;
    const std::int32_t end = nodes[idx].end;
    const std::int32_t depth = nodes[idx].depth;
    if (end - begin <= max_leaf_points || depth >= max_depth) continue;

    // stable 8-way partition of the permutation range by octant
    const Vec3 center = box.center();
    std::array<std::int32_t, 8> counts{};
    for (std::int32_t i = begin; i < end; ++i)
      counts[octant_of(cloud.points[perm[i]], center)]++;
    std::array<std::int32_t, 9> offsets{};
    for (int o = 0; o < 8; ++o) offsets[o + 1] = offsets[o] + counts[o];
    scratch.assign(perm.begin() + begin, perm.begin() + end);
    std::array<std::int32_t, 8> cursor{};
    for (int o = 0; o < 8; ++o) cursor[o] = begin + offsets[o];
    for (const std::int32_t p : scratch)
      perm[cursor[octant_of(cloud.points[p], center)]++] = p;

    for (int o = 0; o < 8; ++o) {
      if (counts[o] == 0) continue;
      OctreeNode child;
      child.box = octant_box(box, o);
      child.begin = begin + offsets[o];
      child.end = child.begin + counts[o];
      child.depth = depth + 1;
      const auto child_idx = static_cast<std::int32_t>(nodes.size());
      nodes[idx].children[o] = child_idx;
      nodes.push_back(child);
      stack.push_back(child_idx);
    }
  }

  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].is_leaf()) tree.leaves_.push_back(static_cast<std::int32_t>(i));

  // mass centers and far radii, straight from the contained points
  const bool weighted = cloud.has_areas();
  for (OctreeNode& node : nodes) {
    Vec3 weighted_sum{};
    Vec3 plain_sum{};
    double weight = 0.0;
    for (std::int32_t i = node.begin; i < node.end; ++i) {
      const std::int32_t p = perm[i];
      const double a = weighted ? cloud.areas[p] : 1.0;
      weighted_sum += cloud.points[p] * a;
      plain_sum += cloud.points[p];
      weight += a;
    }
    node.mass_center = weight > 0.0 ? weighted_sum / weight
                                    : plain_sum / static_cast<double>(node.point_count());
    double max_sq = 0.0;
    for (std::int32_t i = node.begin; i < node.end; ++i)
      max_sq = std::max(max_sq, squared_norm(cloud.points[perm[i]] - node.mass_center));
    node.far_radius = std::sqrt(max_sq);
  }

  if (cloud.has_normals() && cloud.has_areas()) refresh_aggregates(tree, cloud);
  return tree;
}

void refresh_aggregates(WindingOctree& tree, const PointCloud& cloud) {
  if (cloud.points.size() != tree.permutation_.size())
    throw IndexMismatchError("refresh_aggregates: cloud size " +
                             std::to_string(cloud.points.size()) + " != tree size " +
                             std::to_string(tree.permutation_.size()));
  if (!cloud.has_normals() || !cloud.has_areas())
    throw IndexMismatchError("refresh_aggregates: cloud lacks normals or areas");

  auto& nodes = tree.nodes_;
  // children always follow their parent in the flat array, so a reverse pass
  // sees every child before its parent
  for (std::size_t k = nodes.size(); k-- > 0;) {
    OctreeNode& node = nodes[k];
    if (node.is_leaf()) {
      Vec3 sum{};
      for (std::int32_t i = node.begin; i < node.end; ++i) {
        const std::int32_t p = tree.permutation_[i];
        sum += cloud.normals[p] * cloud.areas[p];
      }
      node.aggregate_normal = sum;
    } else {
      Vec3 sum{};
      for (const std::int32_t c : node.children)
        if (c >= 0) sum += nodes[c].aggregate_normal;
      node.aggregate_normal = sum;
    }
  }
}

// ---------------------------------------------------------------------------
// kd-tree

namespace {
constexpr std::int32_t kKdLeafSize = 16;
}

KnnIndex::KnnIndex(const std::vector<Vec3>& points) : points_(points) {
  if (points_.empty()) throw EmptyInputError("KnnIndex: empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / kKdLeafSize + 8);
  root_ = build(0, static_cast<std::int32_t>(points_.size()));
}

std::int32_t KnnIndex::build(std::int32_t begin, std::int32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  for (std::int32_t i = begin; i < end; ++i) node.box.expand(points_[order_[i]]);

  if (end - begin > kKdLeafSize) {
    const Vec3 ext = node.box.extent();
    node.axis = (ext.y > ext.x) ? ((ext.z > ext.y) ? 2 : 1) : ((ext.z > ext.x) ? 2 : 0);
    const int axis = node.axis;
    const std::int32_t mid = begin + (end - begin) / 2;
    auto coord = [&](std::int32_t idx) {
      const Vec3& p = points_[idx];
      return axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::int32_t a, std::int32_t b) {
                       const double ca = coord(a), cb = coord(b);
                       return ca < cb || (ca == cb && a < b);
                     });
    const auto self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  const auto self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  return self;
}

namespace {

// fixed-capacity max-heap of (squared distance, index) with deterministic
// tie-breaking: among equal distances the larger index is "worse"
struct BestK {
  explicit BestK(int k) : k(static_cast<std::size_t>(k)) { heap.reserve(this->k); }

  static bool worse(const std::pair<double, std::int32_t>& a,
                    const std::pair<double, std::int32_t>& b) {
    return a.first < b.first || (a.first == b.first && a.second < b.second);
  }

  void offer(double d2, std::int32_t idx) {
    const std::pair<double, std::int32_t> cand{d2, idx};
    if (heap.size() < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), worse);
    } else if (worse(cand, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), worse);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), worse);
    }
  }

  double worst() const {
    return heap.size() < k ? std::numeric_limits<double>::max() : heap.front().first;
  }

  std::size_t k;
  std::vector<std::pair<double, std::int32_t>> heap;
};

double box_sq_distance(const Aabb& box, const Vec3& q) {
  const double dx = std::max({box.min.x - q.x, 0.0, q.x - box.max.x});
  const double dy = std::max({box.min.y - q.y, 0.0, q.y - box.max.y});
  const double dz = std::max({box.min.z - q.z, 0.0, q.z - box.max.z});
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

void KnnIndex::query(const Vec3& q, int k, std::vector<Neighbor>& out) const {
  out.clear();
  if (k < 1) throw InvalidConfigError("knn: k must be >= 1");

  BestK best(std::min<std::size_t>(static_cast<std::size_t>(k), points_.size()));

  // explicit stack; visit nearer child first
  std::vector<std::int32_t> stack{root_};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_sq_distance(node.box, q) > best.worst()) continue;
    if (node.left < 0) {
      for (std::int32_t i = node.begin; i < node.end; ++i) {
        const std::int32_t idx = order_[i];
        best.offer(squared_norm(points_[idx] - q), idx);
      }
      continue;
    }
    const double dl = box_sq_distance(nodes_[node.left].box, q);
    const double dr = box_sq_distance(nodes_[node.right].box, q);
    if (dl < dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }

  out.reserve(best.heap.size());
  std::sort(best.heap.begin(), best.heap.end(), BestK::worse);
  for (const auto& [d2, idx] : best.heap) out.push_back({idx, std::sqrt(d2)});
}

std::vector<Neighbor> KnnIndex::query(const Vec3& q, int k) const {
  std::vector<Neighbor> out;
  query(q, k, out);
  return out;
}

std::vector<Neighbor> KnnIndex::query_excluding(std::int32_t i, int k) const {
  std::vector<Neighbor> all = query(points_[i], k + 1);
  std::vector<Neighbor> out;
  out.reserve(k);
  for (const Neighbor& nb : all) {
    if (nb.index == i) continue;
    out.push_back(nb);
    if (static_cast<int>(out.size()) == k) break;
  }
  return out;
}

std::vector<Neighbor> knn(const KnnIndex& index, const Vec3& q, int k) {
  return index.query(q, k);
}

// ---------------------------------------------------------------------------
// Area weights

namespace {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

// Sutherland-Hodgman clip of a convex polygon against the half-plane
// dot(d, x) <= c.
void clip_halfplane(std::vector<Vec2>& poly, const Vec2& d, double c, std::vector<Vec2>& tmp) {
  tmp.clear();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double fa = d.x * a.x + d.y * a.y - c;
    const double fb = d.x * b.x + d.y * b.y - c;
    if (fa <= 0.0) tmp.push_back(a);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      const double t = fa / (fa - fb);
      tmp.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  poly.swap(tmp);
}

double polygon_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    twice += a.x * b.y - a.y * b.x;
  }
  return 0.5 * std::abs(twice);
}

}  // namespace

std::vector<double> compute_area_weights(const PointCloud& cloud, const KnnIndex& index,
                                         int m, AreaMode mode,
                                         std::vector<std::int32_t>* degenerate) {
  const std::size_t n = cloud.points.size();
  if (degenerate) degenerate->clear();
  if (mode == AreaMode::Uniform) return std::vector<double>(n, 1.0);

  if (n < static_cast<std::size_t>(m) + 1) {
    std::cerr << "compute_area_weights: cloud has " << n << " points, need at least "
              << m + 1 << " for tangent-plane cells; using uniform weights\n";
    return std::vector<double>(n, 1.0);
  }

  std::vector<double> weights(n, 0.0);
  std::vector<Neighbor> nbrs;
  std::vector<Vec2> poly, tmp;
  for (std::size_t i = 0; i < n; ++i) {
    nbrs = index.query_excluding(static_cast<std::int32_t>(i), m);
    const Vec3& p = cloud.points[i];

    // least-squares plane through the neighborhood (point included)
    Vec3 centroid = p;
    for (const Neighbor& nb : nbrs) centroid += cloud.points[nb.index];
    centroid = centroid / static_cast<double>(nbrs.size() + 1);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    auto accumulate = [&](const Vec3& x) {
      const Vec3 d = x - centroid;
      cov(0, 0) += d.x * d.x; cov(0, 1) += d.x * d.y; cov(0, 2) += d.x * d.z;
      cov(1, 1) += d.y * d.y; cov(1, 2) += d.y * d.z; cov(2, 2) += d.z * d.z;
    };
    accumulate(p);
    for (const Neighbor& nb : nbrs) accumulate(cloud.points[nb.index]);
    cov(1, 0) = cov(0, 1); cov(2, 0) = cov(0, 2); cov(2, 1) = cov(1, 2);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d evals = eig.eigenvalues();  // ascending

    double mean_spacing = 0.0;
    for (const Neighbor& nb : nbrs) mean_spacing += nb.distance;
    mean_spacing /= static_cast<double>(nbrs.size());

    // rank < 2: no plane to project onto
    if (!(evals[1] > 1e-12 * std::max(evals[2], 1e-300))) {
      weights[i] = mean_spacing * mean_spacing;
      if (degenerate) degenerate->push_back(static_cast<std::int32_t>(i));
      continue;
    }

    // tangent basis from the two dominant eigenvectors keeps the whole
    // construction rigid-motion equivariant
    const Eigen::Vector3d t1 = eig.eigenvectors().col(2);
    const Eigen::Vector3d t2 = eig.eigenvectors().col(1);
    auto project = [&](const Vec3& x) -> Vec2 {
      const Vec3 d = x - centroid;
      return {d.x * t1[0] + d.y * t1[1] + d.z * t1[2],
              d.x * t2[0] + d.y * t2[1] + d.z * t2[2]};
    };

    const Vec2 pp = project(p);
    double lo_x = pp.x, hi_x = pp.x, lo_y = pp.y, hi_y = pp.y;
    std::vector<Vec2> proj(nbrs.size());
    for (std::size_t j = 0; j < nbrs.size(); ++j) {
      proj[j] = project(cloud.points[nbrs[j].index]);
      lo_x = std::min(lo_x, proj[j].x); hi_x = std::max(hi_x, proj[j].x);
      lo_y = std::min(lo_y, proj[j].y); hi_y = std::max(hi_y, proj[j].y);
    }

    // start from the neighborhood bounding box, clip by each bisector
    poly = {{lo_x, lo_y}, {hi_x, lo_y}, {hi_x, hi_y}, {lo_x, hi_y}};
    for (const Vec2& q : proj) {
      const Vec2 d{q.x - pp.x, q.y - pp.y};
      const double c = 0.5 * (q.x * q.x + q.y * q.y - pp.x * pp.x - pp.y * pp.y);
      clip_halfplane(poly, d, c, tmp);
      if (poly.size() < 3) break;
    }
    weights[i] = poly.size() >= 3 ? polygon_area(poly) : mean_spacing * mean_spacing;
    if (poly.size() < 3 && degenerate) degenerate->push_back(static_cast<std::int32_t>(i));
  }
  return weights;
}

}  // namespace dwg
