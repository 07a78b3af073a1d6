#pragma once

#include <filesystem>
#include <string>

#include "dwg/core.hpp"

// Point-cloud and mesh file I/O. XYZ is whitespace-separated
// "x y z [nx ny nz]" with '#' comments; PLY covers ascii and
// binary_little_endian with float or double scalars; OBJ covers v/vn/f.

namespace dwg {

enum class FileFormat { Auto, Xyz, Ply, Obj };

// Loads points and, when present, normals (re-normalized). Unknown vertex
// properties are skipped. Throws ParseError on malformed input and
// EmptyInputError when no points are found.
PointCloud read_point_cloud(const std::filesystem::path& path,
                            FileFormat format = FileFormat::Auto);

TriangleMesh read_mesh(const std::filesystem::path& path,
                       FileFormat format = FileFormat::Auto);

// PLY is binary_little_endian with float32 positions and int32 indices;
// OBJ uses 1-based indices. Coordinates are written as given.
void write_mesh(const TriangleMesh& mesh, const std::filesystem::path& path,
                FileFormat format = FileFormat::Ply);

// Cloud writer used by `corrupt` and `fixture`; includes normals when the
// cloud carries them.
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                       FileFormat format = FileFormat::Auto);

// Binary PLY with x, y, z, nx, ny, nz: the hand-off format for downstream
// surface reconstruction tools that consume oriented points.
void write_oriented_points(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace dwg
