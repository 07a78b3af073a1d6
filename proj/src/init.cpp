#include "dwg/init.hpp"

#include <Eigen/Dense>

namespace dwg {

void init_random(PointCloud& cloud, RngSeed seed) {
  const CounterRng rng(seed);
  cloud.normals.resize(cloud.points.size());
  parallel_for(cloud.points.size(), 0,
               [&](std::size_t i) { cloud.normals[i] = rng.unit3(i); });
}

void init_pca(PointCloud& cloud, const KnnIndex& index, int k,
              std::vector<std::int32_t>* degenerate) {
  const std::size_t n = cloud.points.size();
  if (n <= static_cast<std::size_t>(k))
    throw InvalidConfigError("init_pca: need more points than neighbors");
  if (degenerate) degenerate->clear();

  cloud.normals.resize(n);
  const CounterRng fallback(RngSeed{0x9E3779B97F4A7C15ull});
  std::vector<std::uint8_t> flagged(n, 0);

  parallel_for(n, 0, [&](std::size_t i) {
    const auto nbrs = index.query_excluding(static_cast<std::int32_t>(i), k);
    Vec3 centroid{};
    for (const Neighbor& nb : nbrs) centroid += cloud.points[nb.index];
    centroid = centroid / static_cast<double>(nbrs.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Neighbor& nb : nbrs) {
      const Vec3 d = cloud.points[nb.index] - centroid;
      cov(0, 0) += d.x * d.x; cov(0, 1) += d.x * d.y; cov(0, 2) += d.x * d.z;
      cov(1, 1) += d.y * d.y; cov(1, 2) += d.y * d.z; cov(2, 2) += d.z * d.z;
    }
    cov(1, 0) = cov(0, 1); cov(2, 0) = cov(0, 2); cov(2, 1) = cov(1, 2);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d evals = eig.eigenvalues();
    if (!(evals[2] > 0.0) || !std::isfinite(evals[2])) {
      cloud.normals[i] = fallback.unit3(i);
      flagged[i] = 1;
      return;
    }
    const Eigen::Vector3d v = eig.eigenvectors().col(0);  // smallest eigenvalue
    Vec3 normal{v[0], v[1], v[2]};
    const double len = norm(normal);
    if (!(len > 0.0)) {
      cloud.normals[i] = fallback.unit3(i);
      flagged[i] = 1;
      return;
    }
    normal = normal / len;
    // deterministic sign: make the dominant component positive, ties toward x
    const double ax = std::abs(normal.x), ay = std::abs(normal.y), az = std::abs(normal.z);
    double lead = normal.x;
    if (ay > ax && ay >= az) lead = normal.y;
    else if (az > ax && az > ay) lead = normal.z;
    if (lead < 0.0) normal = -normal;
    cloud.normals[i] = normal;
  });

  if (degenerate)
    for (std::size_t i = 0; i < n; ++i)
      if (flagged[i]) degenerate->push_back(static_cast<std::int32_t>(i));
}

void init_gauss_map(PointCloud& cloud, std::vector<std::int32_t>* at_origin) {
  if (at_origin) at_origin->clear();
  const std::size_t n = cloud.points.size();
  cloud.normals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double len = norm(cloud.points[i]);
    if (len < 1e-9) {
      cloud.normals[i] = {0.0, 0.0, 1.0};
      if (at_origin) at_origin->push_back(static_cast<std::int32_t>(i));
    } else {
      cloud.normals[i] = cloud.points[i] / len;
    }
  }
}

}  // namespace dwg
