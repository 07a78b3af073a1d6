#include "dwg/core.hpp"

#include <algorithm>
#include <mutex>
#include <numbers>

namespace dwg {

void PointCloud::validate() const {
  const std::size_t n = points.size();
  if (n == 0) throw EmptyInputError("point cloud is empty");
  if (normals.size() != n)
    throw IndexMismatchError("normals length " + std::to_string(normals.size()) +
                             " != point count " + std::to_string(n));
  if (areas.size() != n)
    throw IndexMismatchError("areas length " + std::to_string(areas.size()) +
                             " != point count " + std::to_string(n));
  double area_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_finite(points[i])) throw DwgError("non-finite point at index " + std::to_string(i));
    if (!is_finite(normals[i])) throw DwgError("non-finite normal at index " + std::to_string(i));
    const double len = norm(normals[i]);
    if (std::abs(len - 1.0) > 1e-6)
      throw DwgError("normal at index " + std::to_string(i) + " is not unit length");
    if (!(areas[i] >= 0.0))
      throw DwgError("negative or NaN area at index " + std::to_string(i));
    area_max = std::max(area_max, areas[i]);
  }
  if (area_max <= 0.0) throw DwgError("all area weights are zero");
}

void TriangleMesh::validate() const {
  const auto n = static_cast<std::int64_t>(vertices.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& tri = faces[f];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= n)
        throw IndexMismatchError("face " + std::to_string(f) + " references vertex " +
                                 std::to_string(tri[k]) + " out of range");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw DwgError("degenerate face at index " + std::to_string(f));
  }
  if (!face_gradients.empty() && face_gradients.size() != faces.size())
    throw IndexMismatchError("face_gradients length does not match face count");
}

Aabb bounding_box(const std::vector<Vec3>& points) {
  Aabb box;
  for (const Vec3& p : points) box.expand(p);
  return box;
}

std::pair<PointCloud, CloudTransform> normalize_cloud(const PointCloud& cloud) {
  if (cloud.points.empty()) throw EmptyInputError("normalize_cloud: empty cloud");
  for (const Vec3& p : cloud.points)
    if (!is_finite(p)) throw DwgError("normalize_cloud: non-finite coordinate");

  const Aabb box = bounding_box(cloud.points);
  const double diag = box.diagonal();
  if (!(diag > 0.0))
    throw DegenerateBoundsError("normalize_cloud: all points coincide (zero diagonal)");

  CloudTransform t;
  t.center = box.center();
  t.scale = 1.0 / diag;

  PointCloud out = cloud;
  for (Vec3& p : out.points) p = t.to_normalized(p);
  for (double& a : out.areas) a *= t.area_scale();
  out.bbox_diagonal = diag;
  return {std::move(out), t};
}

// ---------------------------------------------------------------------------
// CounterRng

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

std::uint64_t CounterRng::bits(std::uint64_t index) const {
  // splitmix64 finalizer applied twice to the (seed, counter) pair
  std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * (index + 1);
  return mix64(mix64(z) ^ (seed_ ^ 0xD1B54A32D192ED03ull));
}

double CounterRng::normal(std::uint64_t index) const {
  const double u1 = uniform(2 * index);
  const double u2 = uniform(2 * index + 1);
  // shift u1 away from zero so log() stays finite
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

Vec3 CounterRng::unit3(std::uint64_t index) const {
  Vec3 g = gaussian3(index);
  double n = norm(g);
  std::uint64_t retry = 0;
  while (n < 1e-12) {  // astronomically rare; keep determinism by re-indexing
    g = gaussian3((index ^ 0x5851F42D4C957F2Dull) + ++retry);
    n = norm(g);
  }
  return g / n;
}

// ---------------------------------------------------------------------------
// parallel_for

unsigned resolve_thread_count(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace detail {

void parallel_for_impl(std::size_t n, unsigned threads,
                       const std::function<void(std::size_t, std::size_t)>& chunk) {
  const unsigned t = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t per = (n + t - 1) / t;
  for (unsigned w = 0; w < t; ++w) {
    const std::size_t begin = w * per;
    const std::size_t end = std::min(n, begin + per);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        chunk(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

}  // namespace dwg
