#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dwg/core.hpp"

// Spatial indexing: the octree that discretizes space around the cloud and
// accelerates far-field winding-number sums, a kd-tree for exact k-NN, and
// tangent-plane Voronoi area weights.

namespace dwg {

// ---------------------------------------------------------------------------
// Octree

struct OctreeNode {
  Aabb box;
  std::array<std::int32_t, 8> children{-1, -1, -1, -1, -1, -1, -1, -1};
  std::int32_t begin = 0;  // range into the permutation array
  std::int32_t end = 0;
  Vec3 mass_center{};        // area-weighted centroid of contained points
  Vec3 aggregate_normal{};   // sum of a_i * n_i over contained points
  double far_radius = 0.0;   // max distance from contained points to mass_center
  std::int32_t depth = 0;

  bool is_leaf() const { return children[0] < 0 && children[1] < 0 && children[2] < 0 &&
                                children[3] < 0 && children[4] < 0 && children[5] < 0 &&
                                children[6] < 0 && children[7] < 0; }
  std::int32_t point_count() const { return end - begin; }
};

class WindingOctree {
 public:
  const std::vector<OctreeNode>& nodes() const { return nodes_; }
  const OctreeNode& node(std::size_t i) const { return nodes_[i]; }
  const OctreeNode& root() const { return nodes_.front(); }
  const std::vector<std::int32_t>& permutation() const { return permutation_; }
  const std::vector<std::int32_t>& leaf_indices() const { return leaves_; }
  int max_depth() const { return max_depth_; }
  const Aabb& root_box() const { return root_box_; }
  std::size_t point_count() const { return permutation_.size(); }

 private:
  friend WindingOctree build_octree(const PointCloud&, int, int);
  friend void refresh_aggregates(WindingOctree&, const PointCloud&);

  std::vector<OctreeNode> nodes_;
  std::vector<std::int32_t> permutation_;
  std::vector<std::int32_t> leaves_;  // indices of non-empty leaf nodes
  int max_depth_ = 0;
  Aabb root_box_;
};

// Builds an octree whose root is the cube circumscribing the cloud bounding
// box with 5% padding. Leaves hold at most max_leaf_points points unless the
// depth cap forces them to keep more. Mass centers, aggregate normals and
// far radii are populated from the cloud's areas and normals.
WindingOctree build_octree(const PointCloud& cloud, int max_depth, int max_leaf_points = 8);

// Recomputes every node's aggregate normal (sum of a_i * n_i) after the
// cloud's normals changed. Structure, mass centers and radii are untouched.
void refresh_aggregates(WindingOctree& tree, const PointCloud& cloud);

// ---------------------------------------------------------------------------
// k-nearest-neighbor index (kd-tree)

struct Neighbor {
  std::int32_t index;
  double distance;
};

class KnnIndex {
 public:
  explicit KnnIndex(const std::vector<Vec3>& points);

  // Exactly min(k, n) results sorted by (distance, index) ascending.
  std::vector<Neighbor> query(const Vec3& q, int k) const;
  void query(const Vec3& q, int k, std::vector<Neighbor>& out) const;

  // Neighbors of cloud point i, excluding i itself.
  std::vector<Neighbor> query_excluding(std::int32_t i, int k) const;

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

 private:
  struct Node {
    Aabb box;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t begin = 0;
    std::int32_t end = 0;
    int axis = 0;
  };

  std::int32_t build(std::int32_t begin, std::int32_t end);

  std::vector<Vec3> points_;
  std::vector<std::int32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

std::vector<Neighbor> knn(const KnnIndex& index, const Vec3& q, int k);

// ---------------------------------------------------------------------------
// Area weights

enum class AreaMode { Uniform, Voronoi };

// Per-point surface-measure weights a_i. Voronoi mode fits a tangent plane
// to the m nearest neighbors of each point, projects the neighborhood, and
// returns the area of the point's 2D Voronoi cell clipped to the projected
// neighborhood's bounding box. Uniform mode returns 1 for every point.
// Degenerate neighborhoods fall back to squared mean spacing and are
// reported through `degenerate` when given.
std::vector<double> compute_area_weights(const PointCloud& cloud, const KnnIndex& index,
                                         int m = 15, AreaMode mode = AreaMode::Voronoi,
                                         std::vector<std::int32_t>* degenerate = nullptr);

}  // namespace dwg
