#pragma once

#include "dwg/core.hpp"

// Analytic test shapes with exact normals and area weights, input corruption
// (noise, outliers), and the sampled Chamfer-distance oracle. These back the
// acceptance suite and the `fixture`, `corrupt` and `eval` CLI commands.

namespace dwg {

// Uniform samples on a sphere of the given radius centered at the origin,
// with radial normals and equal area weights summing to the exact area.
PointCloud sample_sphere(std::size_t n, double radius, RngSeed seed);

// Uniform-by-area samples on a torus (tube radius r around a circle of
// radius R in the xy plane) via rejection in the angular parameters.
PointCloud sample_torus(std::size_t n, double R, double r, RngSeed seed);

// Closed w x h x thickness box: two large faces plus the four side bands,
// uniform area sampling, outward normals. Centered at the origin with the
// thin dimension along z.
PointCloud sample_thin_plate(std::size_t n, double w, double h, double thickness,
                             RngSeed seed);

// ---------------------------------------------------------------------------
// Corruption

// Adds iid Gaussian noise to every coordinate with sigma =
// noise_pct/100 * bounding-box diagonal.
PointCloud add_gaussian_noise(const PointCloud& cloud, double noise_pct, RngSeed seed);

// Appends round(outlier_pct/100 * n) points drawn uniformly from the
// bounding box scaled by 1.1 about its center. Appended points get zero
// areas and +z normals when the cloud carries them.
PointCloud add_outliers(const PointCloud& cloud, double outlier_pct, RngSeed seed);

// ---------------------------------------------------------------------------
// Evaluation oracle

// n points uniform by area over the mesh surface.
std::vector<Vec3> sample_mesh_surface(const TriangleMesh& mesh, std::size_t n, RngSeed seed);

std::vector<Vec3> sample_sphere_surface(std::size_t n, double radius, RngSeed seed);
std::vector<Vec3> sample_torus_surface(std::size_t n, double R, double r, RngSeed seed);

// Symmetric Chamfer distance: mean nearest-neighbor distance from a to b
// averaged with the reverse direction.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

}  // namespace dwg
