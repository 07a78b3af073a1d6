#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "dwg/core.hpp"
#include "dwg/spatial.hpp"

// Level-set extraction: a sparse uniform grid at octree resolution covering
// the cells near the input points, standard 256-case marching cubes over the
// active cells, and per-face gradient proxies.

namespace dwg {

struct GridCell {
  std::int32_t x = 0, y = 0, z = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

// Cells within `dilation` (Chebyshev) of any point-occupied cell at the
// octree's maximum depth, plus the deduplicated lattice of their corners.
// corner_values is filled by the caller (one field sample per corner) before
// running marching_cubes.
struct ActiveGrid {
  double cell_size = 0.0;
  Vec3 origin{};  // lattice origin = root box min corner
  int depth = 0;
  std::vector<GridCell> cells;    // sorted, unique
  std::vector<GridCell> corners;  // sorted, unique lattice coordinates
  std::vector<double> corner_values;

  Vec3 corner_position(const GridCell& c) const {
    return {origin.x + cell_size * c.x, origin.y + cell_size * c.y,
            origin.z + cell_size * c.z};
  }
  std::vector<Vec3> corner_positions() const;
  std::int32_t corner_index(std::int32_t x, std::int32_t y, std::int32_t z) const;

  // internal: packed corner coordinate -> index into corners
  std::unordered_map<std::int64_t, std::int32_t> corner_lookup;
};

ActiveGrid build_active_grid(const WindingOctree& tree, const PointCloud& cloud,
                             int dilation = 2);

// Standard marching cubes over the active cells at the given iso value.
// Corners whose value equals iso exactly are perturbed by +1e-12*(1+|iso|)
// to break ties deterministically. Faces are wound counter-clockwise seen
// from the lower-value side, so a field that is high inside yields outward
// normals. Vertices are deduplicated by lattice edge, which makes shared
// vertices bitwise identical across cells and the result independent of the
// thread count.
TriangleMesh marching_cubes(const ActiveGrid& grid, double iso, int threads = 0);

// Per-face gradient proxy g = (v1 - v0) x (v2 - v0): the area-weighted face
// normal pointing from the high-value side to the low-value side. Not
// normalized. Zero for degenerate faces.
void compute_face_gradients(TriangleMesh& mesh);

// ---------------------------------------------------------------------------
// Mesh diagnostics

struct MeshStats {
  std::size_t vertices = 0;
  std::size_t faces = 0;
  std::size_t edges = 0;
  std::size_t boundary_edges = 0;     // edges with exactly one incident face
  std::size_t nonmanifold_edges = 0;  // edges with more than two
  std::size_t components = 0;
  std::int64_t euler = 0;  // V - E + F
  bool closed = false;     // every edge shared by exactly two faces

  // genus assuming a single closed component
  double genus() const { return 1.0 - static_cast<double>(euler) / 2.0; }
};

MeshStats analyze_mesh(const TriangleMesh& mesh);

namespace mc {
extern const int kEdgeTable[256];
extern const int kTriTable[256][16];
}  // namespace mc

}  // namespace dwg
