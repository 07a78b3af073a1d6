#include "dwg/fixtures.hpp"

#include <algorithm>
#include <numbers>

#include "dwg/spatial.hpp"

namespace dwg {

namespace {
constexpr double kPi = std::numbers::pi;
}

PointCloud sample_sphere(std::size_t n, double radius, RngSeed seed) {
  if (n < 4) throw InvalidConfigError("sample_sphere: need n >= 4");
  if (!(radius > 0.0)) throw InvalidConfigError("sample_sphere: radius must be > 0");
  const CounterRng rng(seed);
  PointCloud cloud;
  cloud.points.resize(n);
  cloud.normals.resize(n);
  cloud.areas.assign(n, 4.0 * kPi * radius * radius / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 dir = rng.unit3(i);
    cloud.points[i] = dir * radius;
    cloud.normals[i] = dir;
  }
  cloud.bbox_diagonal = bounding_box(cloud.points).diagonal();
  return cloud;
}

PointCloud sample_torus(std::size_t n, double R, double r, RngSeed seed) {
  if (!(R > r && r > 0.0)) throw InvalidConfigError("sample_torus: need R > r > 0");
  const CounterRng rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  cloud.normals.reserve(n);

  // uniform surface measure: accept theta with probability
  // (R + r cos(theta)) / (R + r)
  std::uint64_t draw = 0;
  while (cloud.points.size() < n) {
    const double theta = 2.0 * kPi * rng.uniform(3 * draw);
    const double phi = 2.0 * kPi * rng.uniform(3 * draw + 1);
    const double accept = rng.uniform(3 * draw + 2);
    ++draw;
    if (accept * (R + r) > R + r * std::cos(theta)) continue;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    cloud.points.push_back({(R + r * ct) * cp, (R + r * ct) * sp, r * st});
    cloud.normals.push_back({ct * cp, ct * sp, st});
  }
  const double area = 4.0 * kPi * kPi * R * r;
  cloud.areas.assign(n, area / static_cast<double>(n));
  cloud.bbox_diagonal = bounding_box(cloud.points).diagonal();
  return cloud;
}

PointCloud sample_thin_plate(std::size_t n, double w, double h, double thickness,
                             RngSeed seed) {
  if (!(thickness > 0.0) || thickness >= std::min(w, h) / 10.0)
    throw InvalidConfigError("sample_thin_plate: thickness must be < min(w, h)/10");
  const CounterRng rng(seed);
  PointCloud cloud;
  cloud.points.resize(n);
  cloud.normals.resize(n);

  // faces of the closed box, area-weighted: top, bottom, four side bands
  struct Face {
    Vec3 origin, u, v;  // corner plus spanning edges
    Vec3 normal;
    double area;
  };
  const double hw = w / 2.0, hh = h / 2.0, ht = thickness / 2.0;
  const std::array<Face, 6> box = {{
      {{-hw, -hh, ht}, {w, 0, 0}, {0, h, 0}, {0, 0, 1}, w * h},
      {{-hw, -hh, -ht}, {0, h, 0}, {w, 0, 0}, {0, 0, -1}, w * h},
      {{hw, -hh, -ht}, {0, h, 0}, {0, 0, thickness}, {1, 0, 0}, h * thickness},
      {{-hw, -hh, -ht}, {0, 0, thickness}, {0, h, 0}, {-1, 0, 0}, h * thickness},
      {{-hw, hh, -ht}, {w, 0, 0}, {0, 0, thickness}, {0, 1, 0}, w * thickness},
      {{-hw, -hh, -ht}, {0, 0, thickness}, {w, 0, 0}, {0, -1, 0}, w * thickness},
  }};
  std::array<double, 6> cumulative{};
  double total = 0.0;
  for (int f = 0; f < 6; ++f) {
    total += box[f].area;
    cumulative[f] = total;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform(3 * i) * total;
    int f = 0;
    while (f < 5 && pick > cumulative[f]) ++f;
    const double s = rng.uniform(3 * i + 1);
    const double t = rng.uniform(3 * i + 2);
    cloud.points[i] = box[f].origin + box[f].u * s + box[f].v * t;
    cloud.normals[i] = box[f].normal;
  }
  cloud.areas.assign(n, total / static_cast<double>(n));
  cloud.bbox_diagonal = bounding_box(cloud.points).diagonal();
  return cloud;
}

// ---------------------------------------------------------------------------
// Corruption

PointCloud add_gaussian_noise(const PointCloud& cloud, double noise_pct, RngSeed seed) {
  if (noise_pct < 0.0) throw InvalidConfigError("add_gaussian_noise: negative level");
  PointCloud out = cloud;
  if (noise_pct == 0.0) return out;
  const double sigma = noise_pct / 100.0 * bounding_box(cloud.points).diagonal();
  const CounterRng rng(seed);
  for (std::size_t i = 0; i < out.points.size(); ++i)
    out.points[i] += rng.gaussian3(i) * sigma;
  out.bbox_diagonal = bounding_box(out.points).diagonal();
  return out;
}

PointCloud add_outliers(const PointCloud& cloud, double outlier_pct, RngSeed seed) {
  if (outlier_pct < 0.0) throw InvalidConfigError("add_outliers: negative ratio");
  PointCloud out = cloud;
  const auto extra = static_cast<std::size_t>(
      std::llround(outlier_pct / 100.0 * static_cast<double>(cloud.points.size())));
  if (extra == 0) return out;

  const Aabb box = bounding_box(cloud.points);
  const Vec3 center = box.center();
  const Vec3 half = box.extent() * (0.5 * 1.1);
  const CounterRng rng(RngSeed{seed.value ^ 0xA02BDBF7BB3C0A7ull});
  for (std::size_t i = 0; i < extra; ++i) {
    const Vec3 u{rng.uniform(3 * i), rng.uniform(3 * i + 1), rng.uniform(3 * i + 2)};
    out.points.push_back({center.x + (2.0 * u.x - 1.0) * half.x,
                          center.y + (2.0 * u.y - 1.0) * half.y,
                          center.z + (2.0 * u.z - 1.0) * half.z});
    if (!cloud.normals.empty()) out.normals.push_back({0.0, 0.0, 1.0});
    if (!cloud.areas.empty()) out.areas.push_back(0.0);
  }
  out.bbox_diagonal = bounding_box(out.points).diagonal();
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation oracle

std::vector<Vec3> sample_mesh_surface(const TriangleMesh& mesh, std::size_t n, RngSeed seed) {
  if (mesh.faces.empty()) throw EmptyInputError("sample_mesh_surface: empty mesh");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    const Vec3& a = mesh.vertices[tri[0]];
    total += 0.5 * norm(cross(mesh.vertices[tri[1]] - a, mesh.vertices[tri[2]] - a));
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw DwgError("sample_mesh_surface: zero total area");

  const CounterRng rng(seed);
  std::vector<Vec3> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform(3 * i) * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
    const auto f = static_cast<std::size_t>(it - cumulative.begin());
    const auto& tri = mesh.faces[std::min(f, mesh.faces.size() - 1)];
    // uniform barycentric point
    double u = rng.uniform(3 * i + 1);
    double v = rng.uniform(3 * i + 2);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3& a = mesh.vertices[tri[0]];
    samples[i] = a + (mesh.vertices[tri[1]] - a) * u + (mesh.vertices[tri[2]] - a) * v;
  }
  return samples;
}

std::vector<Vec3> sample_sphere_surface(std::size_t n, double radius, RngSeed seed) {
  const CounterRng rng(seed);
  std::vector<Vec3> samples(n);
  for (std::size_t i = 0; i < n; ++i) samples[i] = rng.unit3(i) * radius;
  return samples;
}

std::vector<Vec3> sample_torus_surface(std::size_t n, double R, double r, RngSeed seed) {
  return sample_torus(n, R, r, seed).points;
}

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw EmptyInputError("chamfer_distance: empty sample set");
  const KnnIndex ia(a);
  const KnnIndex ib(b);
  auto mean_nn = [](const KnnIndex& index, const std::vector<Vec3>& queries) {
    std::vector<double> dist(queries.size());
    parallel_for(queries.size(), 0, [&](std::size_t i) {
      std::vector<Neighbor> nb;
      index.query(queries[i], 1, nb);
      dist[i] = nb.front().distance;
    });
    double sum = 0.0;
    for (const double d : dist) sum += d;
    return sum / static_cast<double>(queries.size());
  };
  return 0.5 * (mean_nn(ib, a) + mean_nn(ia, b));
}

}  // namespace dwg
