#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "dwg/core.hpp"

using namespace dwg;

TEST_CASE("normalize_cloud scales the diagonal to exactly one") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {3, 4, 0}};
  cloud.normals = {{0, 0, 1}, {0, 0, 1}};
  cloud.areas = {1.0, 1.0};

  const auto [normalized, transform] = normalize_cloud(cloud);
  const Aabb box = bounding_box(normalized.points);
  CHECK(box.diagonal() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(normalized.bbox_diagonal == doctest::Approx(5.0));
  // centered at the origin
  CHECK(box.center().x == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(box.center().y == doctest::Approx(0.0).epsilon(1e-15));
  // areas scale with the square of the coordinate scale
  CHECK(normalized.areas[0] == doctest::Approx(1.0 / 25.0));
}

TEST_CASE("normalize_cloud rejects coincident points") {
  PointCloud cloud;
  cloud.points = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}};
  CHECK_THROWS_AS(normalize_cloud(cloud), DegenerateBoundsError);
  PointCloud empty;
  CHECK_THROWS_AS(normalize_cloud(empty), EmptyInputError);
}

TEST_CASE("normalize_cloud round trips within 1e-9") {
  CounterRng rng(RngSeed{7});
  PointCloud cloud;
  for (int i = 0; i < 500; ++i)
    cloud.points.push_back(rng.gaussian3(i) * 37.0 + Vec3{100.0, -55.0, 3.0});

  const auto [normalized, transform] = normalize_cloud(cloud);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3 back = transform.to_original(normalized.points[i]);
    const Vec3 err = back - cloud.points[i];
    CHECK(norm(err) <= 1e-9 * (1.0 + norm(cloud.points[i])));
  }
}

TEST_CASE("UnitVector3 normalizes any nonzero finite input") {
  CounterRng rng(RngSeed{11});
  for (int i = 0; i < 1000; ++i) {
    const Vec3 raw = rng.gaussian3(i) * std::pow(10.0, (i % 13) - 6);
    const UnitVector3 u(raw);
    CHECK(std::abs(norm(u.vec()) - 1.0) <= 1e-6);
  }
  CHECK_THROWS_AS(UnitVector3(Vec3{0, 0, 0}), DwgError);
  CHECK_THROWS_AS(UnitVector3(Vec3{std::nan(""), 0, 0}), DwgError);
}

TEST_CASE("PointCloud validation catches the documented failures") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 0, 0}};
  cloud.normals = {{0, 0, 1}};
  cloud.areas = {1.0, 1.0};
  CHECK_THROWS_AS(cloud.validate(), IndexMismatchError);

  cloud.normals = {{0, 0, 1}, {0, 0, 2}};  // not unit
  CHECK_THROWS_AS(cloud.validate(), DwgError);

  cloud.normals = {{0, 0, 1}, {0, 0, 1}};
  cloud.areas = {0.0, 0.0};  // all zero
  CHECK_THROWS_AS(cloud.validate(), DwgError);

  cloud.areas = {0.0, 2.0};
  CHECK_NOTHROW(cloud.validate());
}

TEST_CASE("TriangleMesh validation flags bad indices and degenerate faces") {
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  mesh.faces = {{0, 1, 2}};
  CHECK_NOTHROW(mesh.validate());

  mesh.faces = {{0, 1, 3}};
  CHECK_THROWS_AS(mesh.validate(), IndexMismatchError);

  mesh.faces = {{0, 1, 1}};
  CHECK_THROWS_AS(mesh.validate(), DwgError);
}

TEST_CASE("CounterRng is a pure function of seed and index") {
  const CounterRng a(RngSeed{42});
  const CounterRng b(RngSeed{42});
  const CounterRng c(RngSeed{43});
  bool any_differs = false;
  for (std::uint64_t i = 0; i < 256; ++i) {
    CHECK(a.bits(i) == b.bits(i));
    any_differs |= a.bits(i) != c.bits(i);
    CHECK(a.uniform(i) >= 0.0);
    CHECK(a.uniform(i) < 1.0);
  }
  CHECK(any_differs);
}

TEST_CASE("CounterRng normals look standard under coarse moments") {
  const CounterRng rng(RngSeed{5});
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(i);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t n = 100001;
  std::vector<int> hits(n, 0);
  parallel_for(n, 4, [&](std::size_t i) { hits[i]++; });
  for (std::size_t i = 0; i < n; ++i) REQUIRE(hits[i] == 1);

  // exceptions from workers surface to the caller
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [&](std::size_t i) {
                                 if (i == 57) throw DwgError("boom");
                               }),
                  DwgError);
}
