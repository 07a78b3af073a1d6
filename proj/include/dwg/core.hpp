#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

// Shared geometric types, invariant checks and deterministic randomness.
// Everything here is a plain value type; once constructed, instances are
// safe to share across threads.

namespace dwg {

// ---------------------------------------------------------------------------
// Errors

struct DwgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyInputError : DwgError {
  using DwgError::DwgError;
};

struct DegenerateBoundsError : DwgError {
  using DwgError::DwgError;
};

struct IndexMismatchError : DwgError {
  using DwgError::DwgError;
};

struct InvalidConfigError : DwgError {
  using DwgError::DwgError;
};

struct ParseError : DwgError {
  using DwgError::DwgError;
};

struct EmptyLevelSetError : DwgError {
  EmptyLevelSetError(const std::string& msg, int iteration, double iso)
      : DwgError(msg), iteration(iteration), iso(iso) {}
  int iteration;
  double iso;
};

// ---------------------------------------------------------------------------
// Vectors and points

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3() = default;
  constexpr Vec3(double x, double y, double z) : x(x), y(y), z(z) {}

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
  friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend bool operator==(const Vec3& a, const Vec3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
  }
};

using Point3 = Vec3;

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double squared_norm(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(squared_norm(a)); }

inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Returns a/|a|; the zero vector is the caller's problem.
inline Vec3 normalized(const Vec3& a) { return a / norm(a); }

// Unit vector with a normalizing constructor. Rejects vectors too close to
// zero for the direction to be meaningful.
class UnitVector3 {
 public:
  explicit UnitVector3(const Vec3& v) {
    if (!is_finite(v)) throw DwgError("UnitVector3: non-finite input");
    const double n = norm(v);
    if (n < 1e-300) throw DwgError("UnitVector3: zero-length input");
    v_ = v / n;
  }

  const Vec3& vec() const { return v_; }
  operator const Vec3&() const { return v_; }

 private:
  Vec3 v_;
};

// ---------------------------------------------------------------------------
// Point cloud

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // unit length when present
  std::vector<double> areas;  // per-point surface measure weights
  double bbox_diagonal = 0.0; // diagonal before normalization, for noise scaling

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return normals.size() == points.size() && !points.empty(); }
  bool has_areas() const { return areas.size() == points.size() && !points.empty(); }

  // Enforces the full invariant set: matching lengths, finite coordinates,
  // unit normals, non-negative areas with at least one positive.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Normalization to the unit-diagonal frame

// Maps model coordinates to the internal frame: p' = (p - center) * scale.
// Area weights carry dimension length^2 and scale accordingly.
struct CloudTransform {
  Vec3 center{};
  double scale = 1.0;

  Vec3 to_normalized(const Vec3& p) const { return (p - center) * scale; }
  Vec3 to_original(const Vec3& p) const { return p / scale + center; }
  double area_scale() const { return scale * scale; }
};

// Rescales the cloud so its axis-aligned bounding box has unit diagonal and
// is centered at the origin. Throws DegenerateBoundsError when all points
// coincide. bbox_diagonal of the result records the original diagonal.
std::pair<PointCloud, CloudTransform> normalize_cloud(const PointCloud& cloud);

struct Aabb {
  Vec3 min{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
           std::numeric_limits<double>::max()};
  Vec3 max{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
           std::numeric_limits<double>::lowest()};

  void expand(const Vec3& p) {
    min.x = std::min(min.x, p.x); min.y = std::min(min.y, p.y); min.z = std::min(min.z, p.z);
    max.x = std::max(max.x, p.x); max.y = std::max(max.y, p.y); max.z = std::max(max.z, p.z);
  }
  Vec3 center() const { return (min + max) * 0.5; }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return norm(extent()); }
  bool contains(const Vec3& p, double slack = 0.0) const {
    return p.x >= min.x - slack && p.x <= max.x + slack &&
           p.y >= min.y - slack && p.y <= max.y + slack &&
           p.z >= min.z - slack && p.z <= max.z + slack;
  }
};

Aabb bounding_box(const std::vector<Vec3>& points);

// ---------------------------------------------------------------------------
// Triangle mesh

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::int32_t, 3>> faces;
  std::vector<Vec3> face_gradients;  // unnormalized, one per face when present

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }
  bool empty() const { return faces.empty(); }

  // Index ranges and non-degenerate faces (three distinct indices).
  void validate() const;
};

// ---------------------------------------------------------------------------
// Deterministic counter-based randomness

struct RngSeed {
  std::uint64_t value = 0;
};

// Stateless counter-based generator: every draw is a pure function of
// (seed, stream index), so parallel consumers get identical values no matter
// how work is scheduled.
class CounterRng {
 public:
  explicit CounterRng(RngSeed seed) : seed_(seed.value) {}

  std::uint64_t bits(std::uint64_t index) const;

  // Uniform in [0, 1).
  double uniform(std::uint64_t index) const {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on sub-indices (2*index, 2*index+1).
  double normal(std::uint64_t index) const;

  Vec3 gaussian3(std::uint64_t index) const {
    return {normal(3 * index), normal(3 * index + 1), normal(3 * index + 2)};
  }

  // Uniform direction on the unit sphere.
  Vec3 unit3(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Data-parallel loop

unsigned resolve_thread_count(int requested);

namespace detail {
void parallel_for_impl(std::size_t n, unsigned threads,
                       const std::function<void(std::size_t, std::size_t)>& chunk);
}

// Runs f(i) for i in [0, n). `threads` <= 0 picks the hardware count.
// Work is split into contiguous chunks, one per thread.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const unsigned t = resolve_thread_count(threads);
  if (t <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  detail::parallel_for_impl(n, t, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) f(i);
  });
}

}  // namespace dwg
