#include "dwg/winding.hpp"

#include <algorithm>

namespace dwg {

std::vector<double> compute_deltas(const PointCloud& cloud, const KnnIndex& index,
                                   const KernelConfig& cfg) {
  cfg.validate();
  const std::size_t n = cloud.points.size();
  std::vector<double> deltas(n, cfg.v_min);
  parallel_for(n, 0, [&](std::size_t i) {
    const auto nbrs = index.query_excluding(static_cast<std::int32_t>(i), cfg.knn_k);
    double sum = 0.0;
    int kept = 0;
    for (const Neighbor& nb : nbrs) {
      if (nb.distance < cfg.v_min || nb.distance > cfg.v_max) continue;
      sum += nb.distance;
      ++kept;
    }
    deltas[i] = kept > 0 ? sum / kept : cfg.v_min;
  });
  return deltas;
}

namespace {

double delta_of(const KernelConfig& cfg, std::size_t i) {
  return cfg.delta.empty() ? cfg.v_min : cfg.delta[i];
}

}  // namespace

double gwn_brute(const PointCloud& cloud, const Vec3& q, const KernelConfig& cfg) {
  const double sqrt_lambda = std::sqrt(cfg.lambda);
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    sum += kernel_term(cloud.points[i], cloud.normals[i] * cloud.areas[i], q,
                       delta_of(cfg, i), sqrt_lambda);
  }
  return sum;
}

double gwn_fast(const WindingOctree& tree, const PointCloud& cloud, const Vec3& q,
                const KernelConfig& cfg) {
  const double sqrt_lambda = std::sqrt(cfg.lambda);
  const bool expand_all = !std::isfinite(cfg.beta);
  const auto& nodes = tree.nodes();
  const auto& perm = tree.permutation();

  double sum = 0.0;
  std::int32_t stack[356];  // depth <= 21, at most 8 children pushed per level
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const OctreeNode& node = nodes[stack[--top]];
    if (node.is_leaf()) {
      for (std::int32_t i = node.begin; i < node.end; ++i) {
        const std::int32_t p = perm[i];
        sum += kernel_term(cloud.points[p], cloud.normals[p] * cloud.areas[p], q,
                           delta_of(cfg, p), sqrt_lambda);
      }
      continue;
    }
    const double dist2 = squared_norm(node.mass_center - q);
    const double reach = cfg.beta * node.far_radius;
    if (expand_all || dist2 <= reach * reach) {
      for (int o = 7; o >= 0; --o)  // pop order = octant order
        if (node.children[o] >= 0) stack[top++] = node.children[o];
    } else {
      sum += kernel_term(node.mass_center, node.aggregate_normal, q, 0.0, sqrt_lambda);
    }
  }
  return sum;
}

WindingField evaluate_field(const WindingOctree& tree, const PointCloud& cloud,
                            std::vector<Vec3> queries, const KernelConfig& cfg,
                            int threads) {
  if (queries.empty()) throw EmptyInputError("evaluate_field: no query points");
  WindingField field;
  field.query_points = std::move(queries);
  field.values.resize(field.query_points.size());
  parallel_for(field.query_points.size(), threads, [&](std::size_t i) {
    field.values[i] = gwn_fast(tree, cloud, field.query_points[i], cfg);
  });
  double sum = 0.0;
  for (const double v : field.values) sum += v;
  field.iso_value = sum / static_cast<double>(field.values.size());
  return field;
}

double mean_outward_alignment(const WindingOctree& tree, const PointCloud& cloud,
                              const KernelConfig& cfg, double h, int threads) {
  const std::size_t n = cloud.points.size();
  std::vector<double> dots(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    const Vec3& p = cloud.points[i];
    Vec3 grad;
    grad.x = gwn_fast(tree, cloud, {p.x + h, p.y, p.z}, cfg) -
             gwn_fast(tree, cloud, {p.x - h, p.y, p.z}, cfg);
    grad.y = gwn_fast(tree, cloud, {p.x, p.y + h, p.z}, cfg) -
             gwn_fast(tree, cloud, {p.x, p.y - h, p.z}, cfg);
    grad.z = gwn_fast(tree, cloud, {p.x, p.y, p.z + h}, cfg) -
             gwn_fast(tree, cloud, {p.x, p.y, p.z - h}, cfg);
    const double len = norm(grad);
    if (len == 0.0) return;
    // the field falls from ~1 inside to ~0 outside, so outward is downhill
    dots[i] = dot(cloud.normals[i], grad * (-1.0 / len));
  });
  double sum = 0.0;
  for (const double d : dots) sum += d;
  return sum / static_cast<double>(n);
}

}  // namespace dwg
