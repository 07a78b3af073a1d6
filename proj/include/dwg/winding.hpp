#pragma once

#include <vector>

#include "dwg/core.hpp"
#include "dwg/spatial.hpp"

// Screened generalized winding numbers: evaluation by brute force and by
// hierarchical far-field approximation over the octree, both using the
// singularity-free kernel whose denominator is clamped below a per-point
// radius delta_i.

namespace dwg {

struct KernelConfig {
  double lambda = 0.0;       // screening coefficient, >= 0
  int knn_k = 10;            // neighbors used to estimate delta_i
  double v_min = 0.0015;     // neighbor distance filter, unit-diagonal frame
  double v_max = 0.015;
  double beta = 2.3;         // expand a node when |q - m| <= beta * far_radius
  std::vector<double> delta; // per-point clamp radii, filled by compute_deltas

  void validate() const {
    if (lambda < 0.0) throw InvalidConfigError("KernelConfig: lambda must be >= 0");
    if (!(v_min < v_max)) throw InvalidConfigError("KernelConfig: need v_min < v_max");
    if (!(beta > 0.0)) throw InvalidConfigError("KernelConfig: beta must be > 0");
    if (knn_k < 1) throw InvalidConfigError("KernelConfig: knn_k must be >= 1");
  }
};

struct WindingField {
  std::vector<Vec3> query_points;
  std::vector<double> values;
  double iso_value = 0.0;  // arithmetic mean of values
};

// Clamp radius per point: mean distance to the knn_k nearest neighbors whose
// distance falls inside [v_min, v_max]; v_min when the filtered set is empty.
std::vector<double> compute_deltas(const PointCloud& cloud, const KnnIndex& index,
                                   const KernelConfig& cfg);

// The decay factor e^{-r sqrt(lambda)} (r sqrt(lambda) + 1); exactly 1 at
// lambda = 0 and strictly decreasing in lambda for fixed r > 0.
inline double screening_factor(double r, double sqrt_lambda) {
  if (sqrt_lambda == 0.0) return 1.0;
  const double s = r * sqrt_lambda;
  return std::exp(-s) * (s + 1.0);
}

// One kernel term: contribution of a source at `src` carrying the weighted
// normal `weighted_normal` (area already folded in) to the field at `q`.
// The denominator distance is clamped below `clamp_radius`; pass 0 for the
// exact kernel.
inline double kernel_term(const Vec3& src, const Vec3& weighted_normal, const Vec3& q,
                          double clamp_radius, double sqrt_lambda) {
  const Vec3 d = src - q;
  const double r2 = squared_norm(d);
  const double num = dot(weighted_normal, d);
  if (num == 0.0) return 0.0;  // covers q exactly on src
  const double r = std::sqrt(r2);
  const double rc = std::max(r, clamp_radius);
  constexpr double inv4pi = 0.079577471545947667884441881686257;  // 1/(4 pi)
  return screening_factor(r, sqrt_lambda) * num * inv4pi / (rc * rc * rc);
}

// Screened winding number at q by direct summation over all points.
double gwn_brute(const PointCloud& cloud, const Vec3& q, const KernelConfig& cfg);

// Same field through the octree: nodes farther than beta times their
// containment radius contribute a single term through their aggregate;
// leaves enumerate their points with the clamped kernel. Requires aggregates
// refreshed for the cloud's current normals.
double gwn_fast(const WindingOctree& tree, const PointCloud& cloud, const Vec3& q,
                const KernelConfig& cfg);

// Evaluates gwn_fast at every query, data-parallel with one serial
// accumulation per query, so results do not depend on the thread count.
// iso_value is the mean over all queries.
WindingField evaluate_field(const WindingOctree& tree, const PointCloud& cloud,
                            std::vector<Vec3> queries, const KernelConfig& cfg,
                            int threads = 0);

// Diagnostic: mean over points of dot(n_i, u_i) where u_i is the unit
// direction of steepest field decrease at p_i from central differences with
// step h. The field is ~1 inside and ~0 outside, so for consistently outward
// normals this sits near +1.
double mean_outward_alignment(const WindingOctree& tree, const PointCloud& cloud,
                              const KernelConfig& cfg, double h, int threads = 0);

}  // namespace dwg
