#pragma once

#include <iosfwd>
#include <memory>

#include "dwg/core.hpp"
#include "dwg/init.hpp"
#include "dwg/isosurface.hpp"
#include "dwg/spatial.hpp"
#include "dwg/winding.hpp"

// The diffusion loop: evaluate the screened winding field at leaf centers
// and grid corners, extract the mean-value level set, scatter its face
// gradients back to the k nearest input points as their new normals, and
// repeat until the largest normal changes settle.

namespace dwg {

struct DwgConfig {
  int depth = 8;                 // octree / grid depth
  double lambda = 10.0;          // screening coefficient
  int knn_update_k = 10;         // faces scatter to this many nearest points
  double epsilon_deg = 0.1;      // convergence threshold on the metric below
  double top_fraction = 0.01;    // metric = mean of this fraction of largest angular changes
  int max_iterations = 200;
  InitMode init_mode = InitMode::Random;
  RngSeed seed{1};
  AreaMode area_mode = AreaMode::Voronoi;
  int area_neighbors = 15;
  int max_leaf_points = 8;
  int dilation = 2;
  int threads = 0;  // 0 = hardware count; 1 = fully serial, bitwise reproducible
  double v_min = 0.0015;
  double v_max = 0.015;
  double beta = 2.3;

  void validate() const;
};

struct IterationStats {
  int iteration = 0;
  double iso = 0.0;
  double metric_deg = 0.0;
  std::size_t faces = 0;
  std::size_t unreached = 0;  // points no face reached this iteration
  double ms_field = 0.0;
  double ms_mc = 0.0;
  double ms_scatter = 0.0;
};

struct DiffusionState {
  int iteration = 0;
  PointCloud cloud;  // evolving normals
  TriangleMesh last_mesh;
  double convergence_metric = std::numeric_limits<double>::infinity();
  std::vector<IterationStats> history;
};

// Everything built once per run and shared by all iterations: the octree
// (aggregates refreshed every step), the k-NN index, kernel configuration
// with per-point clamp radii, the active grid, and the iso-average batch of
// leaf-center queries.
struct DwgContext {
  WindingOctree tree;
  std::unique_ptr<KnnIndex> knn;
  KernelConfig kernel;
  ActiveGrid grid;
  std::vector<Vec3> leaf_centers;
};

// Fills areas (per cfg.area_mode) and initial normals (per cfg.init_mode),
// then builds the context. The cloud is expected in the unit-diagonal frame.
DwgContext prepare_dwg(PointCloud& cloud, const DwgConfig& cfg);

// One iteration. Throws EmptyLevelSetError when the level set vanishes.
// Leaves the octree aggregates refreshed for the updated normals.
void dwg_step(DiffusionState& state, DwgContext& ctx, const DwgConfig& cfg);

// Decides the global sign: probes the field far outside the root box, and
// if the exterior does not read near zero relative to the iso value, flips
// every normal (and refreshes aggregates). Returns true when flipped.
bool finalize_orientation(PointCloud& cloud, DwgContext& ctx, double iso);

struct DwgResult {
  PointCloud cloud;          // final normals
  TriangleMesh mesh;         // level set extracted after finalize
  std::vector<IterationStats> history;
  bool converged = false;
  int iterations = 0;
  bool flipped = false;
};

// The full pipeline on a normalized cloud. When `to_original` is given, the
// output mesh and cloud positions are mapped back through it. Per-iteration
// records can be streamed to `diagnostics` as JSON lines.
DwgResult run_dwg(const PointCloud& normalized, const DwgConfig& cfg,
                  const CloudTransform* to_original = nullptr,
                  std::ostream* diagnostics = nullptr);

// Scatter step exposed for tests: adds each face's gradient to the
// accumulators of the knn_update_k points nearest its centroid. Faces with
// zero gradient are skipped. Returns one accumulator per point.
std::vector<Vec3> scatter_face_gradients(const TriangleMesh& mesh, const KnnIndex& knn,
                                         int k, std::size_t point_count, int threads);

}  // namespace dwg
