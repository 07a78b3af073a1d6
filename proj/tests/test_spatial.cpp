#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dwg/fixtures.hpp"
#include "dwg/spatial.hpp"

using namespace dwg;

namespace {

PointCloud random_cloud(std::size_t n, RngSeed seed) {
  const CounterRng rng(seed);
  PointCloud cloud;
  cloud.points.resize(n);
  cloud.normals.resize(n);
  cloud.areas.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points[i] = {rng.uniform(3 * i), rng.uniform(3 * i + 1), rng.uniform(3 * i + 2)};
    cloud.normals[i] = rng.unit3(i + (n << 8));
  }
  return cloud;
}

}  // namespace

TEST_CASE("octree: single point yields a single exact leaf") {
  PointCloud cloud;
  cloud.points = {{0.25, -0.5, 0.75}};
  cloud.normals = {{0, 0, 1}};
  cloud.areas = {2.0};
  const WindingOctree tree = build_octree(cloud, 5);
  CHECK(tree.nodes().size() == 1);
  CHECK(tree.root().is_leaf());
  CHECK(tree.root().far_radius == 0.0);
  CHECK(tree.root().mass_center == cloud.points[0]);
  CHECK(norm(tree.root().aggregate_normal - Vec3{0, 0, 2}) < 1e-15);
}

TEST_CASE("octree: eight cube corners split into eight single-point leaves") {
  PointCloud cloud;
  for (int s = 0; s < 8; ++s)
    cloud.points.push_back({s & 1 ? 1.0 : -1.0, s & 2 ? 1.0 : -1.0, s & 4 ? 1.0 : -1.0});
  cloud.normals.assign(8, {0, 0, 1});
  cloud.areas.assign(8, 1.0);
  const WindingOctree tree = build_octree(cloud, 1, 1);
  CHECK(tree.leaf_indices().size() == 8);
  for (const auto leaf : tree.leaf_indices()) {
    CHECK(tree.node(leaf).point_count() == 1);
    CHECK(tree.node(leaf).far_radius == 0.0);
  }
}

TEST_CASE("octree: every point lands in exactly one leaf range, inside its box") {
  const PointCloud cloud = random_cloud(10000, RngSeed{3});
  const WindingOctree tree = build_octree(cloud, 8);

  std::vector<int> seen(cloud.size(), 0);
  for (const auto leaf_idx : tree.leaf_indices()) {
    const OctreeNode& leaf = tree.node(leaf_idx);
    for (std::int32_t i = leaf.begin; i < leaf.end; ++i) {
      const std::int32_t p = tree.permutation()[i];
      seen[p]++;
      CHECK(leaf.box.contains(cloud.points[p], 1e-12));
    }
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) REQUIRE(seen[i] == 1);

  // leaves respect the size budget away from the depth cap
  for (const auto leaf_idx : tree.leaf_indices()) {
    const OctreeNode& leaf = tree.node(leaf_idx);
    if (leaf.depth < tree.max_depth()) CHECK(leaf.point_count() <= 8);
  }
}

TEST_CASE("octree: far radius is the exact max distance to the mass center") {
  const PointCloud cloud = random_cloud(5000, RngSeed{4});
  const WindingOctree tree = build_octree(cloud, 6);
  for (const OctreeNode& node : tree.nodes()) {
    double max_dist = 0.0;
    for (std::int32_t i = node.begin; i < node.end; ++i)
      max_dist = std::max(max_dist,
                          norm(cloud.points[tree.permutation()[i]] - node.mass_center));
    CHECK(max_dist <= node.far_radius);
    CHECK(node.far_radius <= max_dist + 1e-12);
  }
}

TEST_CASE("octree aggregates match the brute-force per-node sums") {
  PointCloud cloud = random_cloud(8000, RngSeed{5});
  // exercise zero-area points too: they must not contribute
  for (std::size_t i = 0; i < cloud.size(); i += 7) cloud.areas[i] = 0.0;
  WindingOctree tree = build_octree(cloud, 7);

  auto check_all = [&]() {
    for (const OctreeNode& node : tree.nodes()) {
      Vec3 expected{};
      for (std::int32_t i = node.begin; i < node.end; ++i) {
        const std::int32_t p = tree.permutation()[i];
        expected += cloud.normals[p] * cloud.areas[p];
      }
      const Vec3 diff = expected - node.aggregate_normal;
      CHECK(std::abs(diff.x) <= 1e-12);
      CHECK(std::abs(diff.y) <= 1e-12);
      CHECK(std::abs(diff.z) <= 1e-12);
    }
  };
  check_all();

  // flipping all normals negates every aggregate
  std::vector<Vec3> before;
  for (const OctreeNode& node : tree.nodes()) before.push_back(node.aggregate_normal);
  for (Vec3& n : cloud.normals) n = -n;
  refresh_aggregates(tree, cloud);
  for (std::size_t k = 0; k < tree.nodes().size(); ++k)
    CHECK(norm(tree.nodes()[k].aggregate_normal + before[k]) <= 1e-12);
  check_all();

  PointCloud wrong = cloud;
  wrong.points.pop_back();
  wrong.normals.pop_back();
  wrong.areas.pop_back();
  CHECK_THROWS_AS(refresh_aggregates(tree, wrong), IndexMismatchError);
}

TEST_CASE("octree rejects bad configuration and empty input") {
  PointCloud empty;
  CHECK_THROWS_AS(build_octree(empty, 5), EmptyInputError);
  PointCloud one;
  one.points = {{0, 0, 0}};
  CHECK_THROWS_AS(build_octree(one, 0), InvalidConfigError);
  CHECK_THROWS_AS(build_octree(one, 22), InvalidConfigError);
  CHECK_THROWS_AS(build_octree(one, 5, 0), InvalidConfigError);
}

TEST_CASE("knn: self query and clamping") {
  const PointCloud cloud = random_cloud(100, RngSeed{6});
  const KnnIndex index(cloud.points);

  const auto self = index.query(cloud.points[42], 1);
  REQUIRE(self.size() == 1);
  CHECK(self[0].index == 42);
  CHECK(self[0].distance == 0.0);

  const auto all = index.query({0.5, 0.5, 0.5}, 1000);
  CHECK(all.size() == 100);
}

TEST_CASE("knn matches a linear scan on 1K points x 100 queries") {
  const PointCloud cloud = random_cloud(1000, RngSeed{7});
  const KnnIndex index(cloud.points);
  const CounterRng rng(RngSeed{8});

  for (int qi = 0; qi < 100; ++qi) {
    const Vec3 q{rng.uniform(3 * qi) * 2 - 0.5, rng.uniform(3 * qi + 1) * 2 - 0.5,
                 rng.uniform(3 * qi + 2) * 2 - 0.5};
    const auto got = index.query(q, 10);

    // oracle: full sort by (distance, index)
    std::vector<std::pair<double, std::int32_t>> oracle;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      oracle.push_back({norm(cloud.points[i] - q), static_cast<std::int32_t>(i)});
    std::sort(oracle.begin(), oracle.end());

    REQUIRE(got.size() == 10);
    for (int k = 0; k < 10; ++k) {
      CHECK(got[k].index == oracle[k].second);
      CHECK(got[k].distance == doctest::Approx(oracle[k].first).epsilon(1e-12));
      if (k > 0) CHECK(got[k].distance >= got[k - 1].distance);
    }
  }
}

TEST_CASE("knn breaks distance ties by ascending index") {
  // four coincident pairs around a center
  std::vector<Vec3> pts = {{1, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 1, 0}, {0, 0, 0}};
  const KnnIndex index(pts);
  const auto got = index.query({0, 0, 0}, 3);
  REQUIRE(got.size() == 3);
  CHECK(got[0].index == 4);
  CHECK(got[1].index == 0);  // tie at distance 1 resolved by index
  CHECK(got[2].index == 1);
}

TEST_CASE("area weights: uniform mode is all ones") {
  const PointCloud cloud = random_cloud(50, RngSeed{9});
  const KnnIndex index(cloud.points);
  const auto w = compute_area_weights(cloud, index, 15, AreaMode::Uniform);
  for (const double a : w) CHECK(a == 1.0);
}

TEST_CASE("area weights: interior cells of a planar grid are h^2") {
  const double h = 0.05;
  PointCloud cloud;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) cloud.points.push_back({i * h, j * h, 0.0});
  const KnnIndex index(cloud.points);
  const auto w = compute_area_weights(cloud, index, 15, AreaMode::Voronoi);

  for (int i = 4; i < 16; ++i)
    for (int j = 4; j < 16; ++j) {
      const double a = w[i * 20 + j];
      CHECK(a == doctest::Approx(h * h).epsilon(0.05));
    }
}

TEST_CASE("area weights are invariant under rigid rotation") {
  PointCloud cloud = sample_sphere(600, 1.0, RngSeed{10});
  const KnnIndex index(cloud.points);
  const auto w0 = compute_area_weights(cloud, index, 15, AreaMode::Voronoi);

  // rotate by a fixed rotation (axis-angle around a skew axis)
  const double c = std::cos(0.7), s = std::sin(0.7);
  PointCloud rotated = cloud;
  for (Vec3& p : rotated.points) {
    // rotation about z then x
    const Vec3 rz{c * p.x - s * p.y, s * p.x + c * p.y, p.z};
    p = {rz.x, c * rz.y - s * rz.z, s * rz.y + c * rz.z};
  }
  const KnnIndex rotated_index(rotated.points);
  const auto w1 = compute_area_weights(rotated, rotated_index, 15, AreaMode::Voronoi);

  REQUIRE(w0.size() == w1.size());
  for (std::size_t i = 0; i < w0.size(); ++i)
    CHECK(w1[i] == doctest::Approx(w0[i]).epsilon(1e-9));
}

TEST_CASE("area weights: collinear neighborhoods fall back and get flagged") {
  PointCloud cloud;
  for (int i = 0; i < 40; ++i) cloud.points.push_back({i * 0.01, 0.0, 0.0});
  const KnnIndex index(cloud.points);
  std::vector<std::int32_t> degenerate;
  const auto w = compute_area_weights(cloud, index, 15, AreaMode::Voronoi, &degenerate);
  CHECK(degenerate.size() == cloud.points.size());
  for (const double a : w) CHECK(a > 0.0);
}

TEST_CASE("area weights: too few points falls back to uniform") {
  const PointCloud cloud = random_cloud(10, RngSeed{11});
  const KnnIndex index(cloud.points);
  const auto w = compute_area_weights(cloud, index, 15, AreaMode::Voronoi);
  for (const double a : w) CHECK(a == 1.0);
}
