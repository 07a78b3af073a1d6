#include "dwg/isosurface.hpp"

#include <algorithm>
#include <cmath>

namespace dwg {

namespace {

// 20 bits per axis, offset so the small negative indices from dilation pack
// cleanly; leaves 2 bits for the edge axis
constexpr std::int64_t kPackOffset = 1 << 19;
constexpr int kPackBits = 20;
constexpr std::int64_t kPackMask = (std::int64_t{1} << kPackBits) - 1;

std::int64_t pack(std::int32_t x, std::int32_t y, std::int32_t z) {
  const std::int64_t px = x + kPackOffset;
  const std::int64_t py = y + kPackOffset;
  const std::int64_t pz = z + kPackOffset;
  return (px << (2 * kPackBits)) | (py << kPackBits) | pz;
}

bool cell_less(const GridCell& a, const GridCell& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

// corner offsets and edge endpoints of the table convention
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
                               {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1}};
// per edge: lattice offset of the lower corner and the axis (0=x, 1=y, 2=z)
constexpr int kEdgeAnchor[12][4] = {
    {0, 0, 0, 0},  // e0:  (0,0,0) +x
    {1, 0, 0, 2},  // e1:  (1,0,0) +z
    {0, 0, 1, 0},  // e2:  (0,0,1) +x
    {0, 0, 0, 2},  // e3:  (0,0,0) +z
    {0, 1, 0, 0},  // e4:  (0,1,0) +x
    {1, 1, 0, 2},  // e5:  (1,1,0) +z
    {0, 1, 1, 0},  // e6:  (0,1,1) +x
    {0, 1, 0, 2},  // e7:  (0,1,0) +z
    {0, 0, 0, 1},  // e8:  (0,0,0) +y
    {1, 0, 0, 1},  // e9:  (1,0,0) +y
    {1, 0, 1, 1},  // e10: (1,0,1) +y
    {0, 0, 1, 1},  // e11: (0,0,1) +y
};

}  // namespace

std::vector<Vec3> ActiveGrid::corner_positions() const {
  std::vector<Vec3> out;
  out.reserve(corners.size());
  for (const GridCell& c : corners) out.push_back(corner_position(c));
  return out;
}

std::int32_t ActiveGrid::corner_index(std::int32_t x, std::int32_t y, std::int32_t z) const {
  const auto it = corner_lookup.find(pack(x, y, z));
  return it == corner_lookup.end() ? -1 : it->second;
}

ActiveGrid build_active_grid(const WindingOctree& tree, const PointCloud& cloud,
                             int dilation) {
  if (cloud.points.size() != tree.permutation().size())
    throw IndexMismatchError("build_active_grid: cloud does not match tree");
  if (dilation < 0) throw InvalidConfigError("build_active_grid: dilation must be >= 0");
  const int depth = tree.max_depth();
  if (depth > 18) throw InvalidConfigError("build_active_grid: depth > 18 unsupported");

  ActiveGrid grid;
  grid.depth = depth;
  grid.origin = tree.root_box().min;
  const std::int32_t res = std::int32_t{1} << depth;
  grid.cell_size = (tree.root_box().max.x - tree.root_box().min.x) / res;

  // cells occupied by points
  std::vector<GridCell> seeds;
  seeds.reserve(cloud.points.size());
  const double inv = 1.0 / grid.cell_size;
  for (const Vec3& p : cloud.points) {
    auto clampi = [res](double v) {
      return static_cast<std::int32_t>(std::clamp(v, 0.0, static_cast<double>(res - 1)));
    };
    seeds.push_back({clampi(std::floor((p.x - grid.origin.x) * inv)),
                     clampi(std::floor((p.y - grid.origin.y) * inv)),
                     clampi(std::floor((p.z - grid.origin.z) * inv))});
  }
  std::sort(seeds.begin(), seeds.end(), cell_less);
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  grid.cells.reserve(seeds.size() * (2 * dilation + 1));
  for (const GridCell& s : seeds)
    for (int dx = -dilation; dx <= dilation; ++dx)
      for (int dy = -dilation; dy <= dilation; ++dy)
        for (int dz = -dilation; dz <= dilation; ++dz)
          grid.cells.push_back({s.x + dx, s.y + dy, s.z + dz});
  std::sort(grid.cells.begin(), grid.cells.end(), cell_less);
  grid.cells.erase(std::unique(grid.cells.begin(), grid.cells.end()), grid.cells.end());

  grid.corners.reserve(grid.cells.size() * 2);
  for (const GridCell& c : grid.cells)
    for (const auto& o : kCorner)
      grid.corners.push_back({c.x + o[0], c.y + o[1], c.z + o[2]});
  std::sort(grid.corners.begin(), grid.corners.end(), cell_less);
  grid.corners.erase(std::unique(grid.corners.begin(), grid.corners.end()),
                     grid.corners.end());

  grid.corner_lookup.reserve(grid.corners.size() * 2);
  for (std::size_t i = 0; i < grid.corners.size(); ++i) {
    const GridCell& c = grid.corners[i];
    grid.corner_lookup.emplace(pack(c.x, c.y, c.z), static_cast<std::int32_t>(i));
  }
  return grid;
}

TriangleMesh marching_cubes(const ActiveGrid& grid, double iso, int threads) {
  if (grid.corner_values.size() != grid.corners.size())
    throw IndexMismatchError("marching_cubes: corner_values not filled");
  for (const double v : grid.corner_values)
    if (!std::isfinite(v)) throw DwgError("marching_cubes: non-finite corner value");

  const double tie_nudge = 1e-12 * (1.0 + std::abs(iso));
  auto corner_value = [&](std::int32_t x, std::int32_t y, std::int32_t z) {
    const std::int32_t idx = grid.corner_index(x, y, z);
    if (idx < 0) throw DwgError("marching_cubes: corner outside the active grid");
    double v = grid.corner_values[idx];
    if (v == iso) v += tie_nudge;
    return v;
  };

  // pass 1 (parallel): per-cell triangle lists as lattice edge ids
  struct CellTris {
    std::array<std::int64_t, 16> edge_keys;
    int count = 0;  // number of edge references (3 per triangle)
  };
  std::vector<CellTris> emitted(grid.cells.size());
  parallel_for(grid.cells.size(), threads, [&](std::size_t ci) {
    const GridCell& cell = grid.cells[ci];
    double v[8];
    int case_index = 0;
    for (int c = 0; c < 8; ++c) {
      v[c] = corner_value(cell.x + kCorner[c][0], cell.y + kCorner[c][1],
                          cell.z + kCorner[c][2]);
      if (v[c] > iso) case_index |= 1 << c;
    }
    if (mc::kEdgeTable[case_index] == 0) return;
    const int* tris = mc::kTriTable[case_index];
    CellTris& out = emitted[ci];
    for (int t = 0; tris[t] >= 0; ++t) {
      const int* a = kEdgeAnchor[tris[t]];
      const std::int64_t corner_key =
          pack(cell.x + a[0], cell.y + a[1], cell.z + a[2]);
      out.edge_keys[out.count++] = (corner_key << 2) | a[3];
    }
  });

  // pass 2 (serial, cell order): merge with vertices deduplicated by edge key
  TriangleMesh mesh;
  std::unordered_map<std::int64_t, std::int32_t> vertex_of_edge;
  vertex_of_edge.reserve(grid.cells.size());
  auto vertex_index = [&](std::int64_t edge_key) {
    const auto it = vertex_of_edge.find(edge_key);
    if (it != vertex_of_edge.end()) return it->second;
    const int axis = static_cast<int>(edge_key & 3);
    const std::int64_t ck = edge_key >> 2;
    const auto cx = static_cast<std::int32_t>(((ck >> (2 * kPackBits)) & kPackMask) - kPackOffset);
    const auto cy = static_cast<std::int32_t>(((ck >> kPackBits) & kPackMask) - kPackOffset);
    const auto cz = static_cast<std::int32_t>((ck & kPackMask) - kPackOffset);
    const std::int32_t bx = cx + (axis == 0), by = cy + (axis == 1), bz = cz + (axis == 2);
    const double va = corner_value(cx, cy, cz);
    const double vb = corner_value(bx, by, bz);
    const double t = std::clamp((iso - va) / (vb - va), 0.0, 1.0);
    const Vec3 pa = grid.corner_position({cx, cy, cz});
    const Vec3 pb = grid.corner_position({bx, by, bz});
    const auto idx = static_cast<std::int32_t>(mesh.vertices.size());
    mesh.vertices.push_back(pa + (pb - pa) * t);
    vertex_of_edge.emplace(edge_key, idx);
    return idx;
  };
  for (const CellTris& cell : emitted) {
    for (int t = 0; t + 3 <= cell.count; t += 3) {
      const std::int32_t i0 = vertex_index(cell.edge_keys[t]);
      const std::int32_t i1 = vertex_index(cell.edge_keys[t + 1]);
      const std::int32_t i2 = vertex_index(cell.edge_keys[t + 2]);
      if (i0 == i1 || i1 == i2 || i0 == i2) continue;  // collapsed by clamping
      mesh.faces.push_back({i0, i1, i2});
    }
  }
  return mesh;
}

void compute_face_gradients(TriangleMesh& mesh) {
  mesh.face_gradients.resize(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    const Vec3& v0 = mesh.vertices[tri[0]];
    mesh.face_gradients[f] = cross(mesh.vertices[tri[1]] - v0, mesh.vertices[tri[2]] - v0);
  }
}

MeshStats analyze_mesh(const TriangleMesh& mesh) {
  MeshStats stats;
  stats.vertices = mesh.vertices.size();
  stats.faces = mesh.faces.size();

  std::unordered_map<std::int64_t, std::int32_t> edge_count;
  edge_count.reserve(mesh.faces.size() * 2);
  auto edge_key = [](std::int32_t a, std::int32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::int64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  for (const auto& tri : mesh.faces) {
    edge_count[edge_key(tri[0], tri[1])]++;
    edge_count[edge_key(tri[1], tri[2])]++;
    edge_count[edge_key(tri[2], tri[0])]++;
  }
  stats.edges = edge_count.size();
  for (const auto& [key, count] : edge_count) {
    if (count == 1) stats.boundary_edges++;
    if (count > 2) stats.nonmanifold_edges++;
  }
  stats.closed = !mesh.faces.empty() && stats.boundary_edges == 0 &&
                 stats.nonmanifold_edges == 0;
  stats.euler = static_cast<std::int64_t>(stats.vertices) -
                static_cast<std::int64_t>(stats.edges) +
                static_cast<std::int64_t>(stats.faces);

  // connected components over vertices joined by edges
  std::vector<std::int32_t> parent(mesh.vertices.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<std::int32_t>(i);
  std::function<std::int32_t(std::int32_t)> find = [&](std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (const auto& tri : mesh.faces) {
    const std::int32_t r0 = find(tri[0]);
    const std::int32_t r1 = find(tri[1]);
    const std::int32_t r2 = find(tri[2]);
    parent[r1] = r0;
    parent[find(r2)] = find(r0);
  }
  std::size_t components = 0;
  std::vector<bool> referenced(mesh.vertices.size(), false);
  for (const auto& tri : mesh.faces)
    for (const auto v : tri) referenced[v] = true;
  for (std::size_t i = 0; i < parent.size(); ++i)
    if (referenced[i] && find(static_cast<std::int32_t>(i)) == static_cast<std::int32_t>(i))
      components++;
  stats.components = components;
  return stats;
}

}  // namespace dwg
