#include "dwg/diffusion.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>

namespace dwg {

void DwgConfig::validate() const {
  if (depth < 1 || depth > 18) throw InvalidConfigError("DwgConfig: depth must be in [1, 18]");
  if (lambda < 0.0) throw InvalidConfigError("DwgConfig: lambda must be >= 0");
  if (knn_update_k < 1) throw InvalidConfigError("DwgConfig: knn_update_k must be >= 1");
  if (!(epsilon_deg > 0.0)) throw InvalidConfigError("DwgConfig: epsilon_deg must be > 0");
  if (!(top_fraction > 0.0 && top_fraction <= 1.0))
    throw InvalidConfigError("DwgConfig: top_fraction must be in (0, 1]");
  if (max_iterations < 1) throw InvalidConfigError("DwgConfig: max_iterations must be >= 1");
  if (max_leaf_points < 1) throw InvalidConfigError("DwgConfig: max_leaf_points must be >= 1");
  if (dilation < 0) throw InvalidConfigError("DwgConfig: dilation must be >= 0");
  if (!(v_min < v_max)) throw InvalidConfigError("DwgConfig: need v_min < v_max");
  if (!(beta > 0.0)) throw InvalidConfigError("DwgConfig: beta must be > 0");
}

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

void atomic_add(std::atomic<double>& target, double value) {
  double expected = target.load(std::memory_order_relaxed);
  while (!target.compare_exchange_weak(expected, expected + value,
                                       std::memory_order_relaxed)) {
  }
}

}  // namespace

DwgContext prepare_dwg(PointCloud& cloud, const DwgConfig& cfg) {
  cfg.validate();
  if (cloud.points.empty()) throw EmptyInputError("prepare_dwg: empty cloud");

  DwgContext ctx;
  ctx.knn = std::make_unique<KnnIndex>(cloud.points);

  cloud.areas = compute_area_weights(cloud, *ctx.knn, cfg.area_neighbors, cfg.area_mode);

  switch (cfg.init_mode) {
    case InitMode::Random: init_random(cloud, cfg.seed); break;
    case InitMode::Pca: init_pca(cloud, *ctx.knn); break;
    case InitMode::GaussMap: init_gauss_map(cloud); break;
  }

  ctx.kernel.lambda = cfg.lambda;
  ctx.kernel.v_min = cfg.v_min;
  ctx.kernel.v_max = cfg.v_max;
  ctx.kernel.beta = cfg.beta;
  ctx.kernel.delta = compute_deltas(cloud, *ctx.knn, ctx.kernel);

  ctx.tree = build_octree(cloud, cfg.depth, cfg.max_leaf_points);
  ctx.grid = build_active_grid(ctx.tree, cloud, cfg.dilation);

  ctx.leaf_centers.reserve(ctx.tree.leaf_indices().size());
  for (const std::int32_t leaf : ctx.tree.leaf_indices())
    ctx.leaf_centers.push_back(ctx.tree.node(leaf).box.center());
  return ctx;
}

std::vector<Vec3> scatter_face_gradients(const TriangleMesh& mesh, const KnnIndex& knn,
                                         int k, std::size_t point_count, int threads) {
  if (mesh.face_gradients.size() != mesh.faces.size())
    throw IndexMismatchError("scatter_face_gradients: gradients missing");

  // gather the target points per face in parallel; the k-NN queries dominate
  const std::size_t f_count = mesh.faces.size();
  std::vector<std::int32_t> targets(f_count * static_cast<std::size_t>(k), -1);
  parallel_for(f_count, threads, [&](std::size_t f) {
    const Vec3& g = mesh.face_gradients[f];
    if (g.x == 0.0 && g.y == 0.0 && g.z == 0.0) return;
    const auto& tri = mesh.faces[f];
    const Vec3 centroid = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] +
                           mesh.vertices[tri[2]]) / 3.0;
    std::vector<Neighbor> nbrs;
    knn.query(centroid, k, nbrs);
    for (std::size_t j = 0; j < nbrs.size(); ++j)
      targets[f * k + j] = nbrs[j].index;
  });

  std::vector<Vec3> accum(point_count);
  if (resolve_thread_count(threads) <= 1) {
    // serial reduction in face order: bitwise reproducible
    for (std::size_t f = 0; f < f_count; ++f) {
      const Vec3& g = mesh.face_gradients[f];
      for (int j = 0; j < k; ++j) {
        const std::int32_t p = targets[f * k + j];
        if (p >= 0) accum[p] += g;
      }
    }
    return accum;
  }

  std::vector<std::atomic<double>> bins(3 * point_count);
  for (auto& b : bins) b.store(0.0, std::memory_order_relaxed);
  parallel_for(f_count, threads, [&](std::size_t f) {
    const Vec3& g = mesh.face_gradients[f];
    for (int j = 0; j < k; ++j) {
      const std::int32_t p = targets[f * k + j];
      if (p < 0) continue;
      atomic_add(bins[3 * p], g.x);
      atomic_add(bins[3 * p + 1], g.y);
      atomic_add(bins[3 * p + 2], g.z);
    }
  });
  for (std::size_t p = 0; p < point_count; ++p)
    accum[p] = {bins[3 * p].load(), bins[3 * p + 1].load(), bins[3 * p + 2].load()};
  return accum;
}

void dwg_step(DiffusionState& state, DwgContext& ctx, const DwgConfig& cfg) {
  const std::size_t n = state.cloud.points.size();
  IterationStats stats;
  stats.iteration = state.iteration + 1;

  // screened winding field at leaf centers (iso average) and grid corners
  auto t0 = std::chrono::steady_clock::now();
  const WindingField leaf_field =
      evaluate_field(ctx.tree, state.cloud, ctx.leaf_centers, ctx.kernel, cfg.threads);
  const double iso = leaf_field.iso_value;
  const WindingField corner_field = evaluate_field(
      ctx.tree, state.cloud, ctx.grid.corner_positions(), ctx.kernel, cfg.threads);
  ctx.grid.corner_values = corner_field.values;
  stats.ms_field = ms_since(t0);
  stats.iso = iso;

  // level set and its face gradients
  t0 = std::chrono::steady_clock::now();
  TriangleMesh mesh = marching_cubes(ctx.grid, iso, cfg.threads);
  if (mesh.faces.empty())
    throw EmptyLevelSetError("level set at iteration " + std::to_string(stats.iteration) +
                                 " is empty (iso " + std::to_string(iso) + ")",
                             stats.iteration, iso);
  compute_face_gradients(mesh);
  stats.ms_mc = ms_since(t0);
  stats.faces = mesh.faces.size();

  // diffuse gradients to the nearest points
  t0 = std::chrono::steady_clock::now();
  const std::vector<Vec3> accum =
      scatter_face_gradients(mesh, *ctx.knn, cfg.knn_update_k, n, cfg.threads);

  std::vector<double> change_deg(n, 0.0);
  std::size_t unreached = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double len2 = squared_norm(accum[i]);
    if (len2 == 0.0) {
      ++unreached;  // keeps its previous normal this iteration
      continue;
    }
    const Vec3 updated = accum[i] / std::sqrt(len2);
    const double d = std::clamp(dot(state.cloud.normals[i], updated), -1.0, 1.0);
    change_deg[i] = std::acos(d) * 180.0 / std::numbers::pi;
    state.cloud.normals[i] = updated;
  }
  stats.unreached = unreached;

  // convergence metric: mean of the top fraction of angular changes
  const auto top = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.top_fraction * static_cast<double>(n))));
  std::nth_element(change_deg.begin(), change_deg.begin() + (top - 1), change_deg.end(),
                   std::greater<>());
  double metric = 0.0;
  for (std::size_t i = 0; i < top; ++i) metric += change_deg[i];
  metric /= static_cast<double>(top);
  stats.ms_scatter = ms_since(t0);

  refresh_aggregates(ctx.tree, state.cloud);

  state.iteration = stats.iteration;
  state.last_mesh = std::move(mesh);
  state.convergence_metric = metric;
  stats.metric_deg = metric;
  state.history.push_back(stats);
}

bool finalize_orientation(PointCloud& cloud, DwgContext& ctx, double iso) {
  const Aabb& box = ctx.tree.root_box();
  const Vec3 center = box.center();
  const double reach = 3.0 * 0.5 * box.diagonal();
  std::vector<Vec3> probes;
  probes.reserve(8);
  for (int s = 0; s < 8; ++s) {
    const Vec3 dir{(s & 1) ? 1.0 : -1.0, (s & 2) ? 1.0 : -1.0, (s & 4) ? 1.0 : -1.0};
    probes.push_back(center + normalized(dir) * reach);
  }
  const WindingField outside = evaluate_field(ctx.tree, cloud, probes, ctx.kernel, 1);

  // exterior must read ~0; a mean probe value on the iso side of zero means
  // the two-fold sign ambiguity settled on the inverted solution
  if (outside.iso_value > 0.5 * iso) {
    for (Vec3& normal : cloud.normals) normal = -normal;
    refresh_aggregates(ctx.tree, cloud);
    return true;
  }
  return false;
}

namespace {

void stream_stats(std::ostream* out, const IterationStats& s) {
  if (!out) return;
  *out << "{\"iteration\":" << s.iteration << ",\"iso\":" << s.iso
       << ",\"metric_deg\":" << s.metric_deg << ",\"faces\":" << s.faces
       << ",\"unreached\":" << s.unreached << ",\"ms_field\":" << s.ms_field
       << ",\"ms_mc\":" << s.ms_mc << ",\"ms_scatter\":" << s.ms_scatter << "}\n";
}

}  // namespace

DwgResult run_dwg(const PointCloud& normalized, const DwgConfig& cfg,
                  const CloudTransform* to_original, std::ostream* diagnostics) {
  cfg.validate();

  DiffusionState state;
  state.cloud = normalized;
  DwgContext ctx = prepare_dwg(state.cloud, cfg);

  DwgResult result;
  while (state.iteration < cfg.max_iterations) {
    dwg_step(state, ctx, cfg);
    stream_stats(diagnostics, state.history.back());
    if (state.convergence_metric <= cfg.epsilon_deg) {
      result.converged = true;
      break;
    }
  }
  result.iterations = state.iteration;

  const double last_iso = state.history.back().iso;
  result.flipped = finalize_orientation(state.cloud, ctx, last_iso);

  // final extraction from the settled normals
  const WindingField leaf_field =
      evaluate_field(ctx.tree, state.cloud, ctx.leaf_centers, ctx.kernel, cfg.threads);
  const WindingField corner_field = evaluate_field(
      ctx.tree, state.cloud, ctx.grid.corner_positions(), ctx.kernel, cfg.threads);
  ctx.grid.corner_values = corner_field.values;
  TriangleMesh mesh = marching_cubes(ctx.grid, leaf_field.iso_value, cfg.threads);
  compute_face_gradients(mesh);

  result.cloud = std::move(state.cloud);
  result.mesh = std::move(mesh);
  result.history = std::move(state.history);

  if (to_original) {
    for (Vec3& v : result.mesh.vertices) v = to_original->to_original(v);
    for (Vec3& p : result.cloud.points) p = to_original->to_original(p);
    const double s2 = 1.0 / to_original->area_scale();
    for (double& a : result.cloud.areas) a *= s2;
    for (Vec3& g : result.mesh.face_gradients) g *= s2;  // gradients scale with area
  }
  return result;
}

}  // namespace dwg
