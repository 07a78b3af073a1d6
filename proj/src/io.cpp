#include "dwg/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

namespace dwg {

namespace {

FileFormat detect_format(const std::filesystem::path& path, FileFormat requested) {
  if (requested != FileFormat::Auto) return requested;
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".ply") return FileFormat::Ply;
  if (ext == ".obj") return FileFormat::Obj;
  if (ext == ".xyz" || ext == ".txt" || ext == ".pts") return FileFormat::Xyz;
  // sniff the magic line
  std::ifstream in(path);
  std::string first;
  if (in && std::getline(in, first) && first.rfind("ply", 0) == 0) return FileFormat::Ply;
  return FileFormat::Xyz;
}

void renormalize(std::vector<Vec3>& normals) {
  for (Vec3& n : normals) {
    const double len = norm(n);
    if (len > 1e-12) n = n / len;
  }
}

// ---------------------------------------------------------------------------
// XYZ

void read_xyz(const std::filesystem::path& path, PointCloud& cloud) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  int columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double v[6];
    int got = 0;
    while (got < 6 && (row >> v[got])) ++got;
    std::string trailing;
    if (row >> trailing)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": unexpected token '" + trailing + "'");
    if (got == 0) continue;  // blank or comment-only line
    if (got != 3 && got != 6)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 3 or 6 numbers, got " + std::to_string(got));
    if (columns == 0) columns = got;
    if (got != columns)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": inconsistent column count");
    cloud.points.push_back({v[0], v[1], v[2]});
    if (got == 6) cloud.normals.push_back({v[3], v[4], v[5]});
  }
}

// ---------------------------------------------------------------------------
// PLY

enum class PlyType { Char, UChar, Short, UShort, Int, UInt, Float, Double };

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::Char: case PlyType::UChar: return 1;
    case PlyType::Short: case PlyType::UShort: return 2;
    case PlyType::Int: case PlyType::UInt: case PlyType::Float: return 4;
    case PlyType::Double: return 8;
  }
  return 0;
}

PlyType parse_ply_type(const std::string& s, const std::string& context) {
  if (s == "char" || s == "int8") return PlyType::Char;
  if (s == "uchar" || s == "uint8") return PlyType::UChar;
  if (s == "short" || s == "int16") return PlyType::Short;
  if (s == "ushort" || s == "uint16") return PlyType::UShort;
  if (s == "int" || s == "int32") return PlyType::Int;
  if (s == "uint" || s == "uint32") return PlyType::UInt;
  if (s == "float" || s == "float32") return PlyType::Float;
  if (s == "double" || s == "float64") return PlyType::Double;
  throw ParseError(context + ": unknown PLY type '" + s + "'");
}

double decode_scalar(const char* bytes, PlyType t) {
  auto load = [&]<class T>() {
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return static_cast<double>(v);
  };
  switch (t) {
    case PlyType::Char: return load.operator()<std::int8_t>();
    case PlyType::UChar: return load.operator()<std::uint8_t>();
    case PlyType::Short: return load.operator()<std::int16_t>();
    case PlyType::UShort: return load.operator()<std::uint16_t>();
    case PlyType::Int: return load.operator()<std::int32_t>();
    case PlyType::UInt: return load.operator()<std::uint32_t>();
    case PlyType::Float: return load.operator()<float>();
    case PlyType::Double: return load.operator()<double>();
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float;
  bool is_list = false;
  PlyType count_type = PlyType::UChar;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
};

PlyHeader read_ply_header(const std::filesystem::path& path, std::ifstream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };

  if (!std::getline(in, line)) fail("empty file");
  ++line_no;
  if (line.rfind("ply", 0) != 0) fail("missing 'ply' magic");

  PlyHeader header;
  bool format_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream row(line);
    std::string keyword;
    row >> keyword;
    if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) continue;
    if (keyword == "format") {
      std::string kind, version;
      row >> kind >> version;
      if (kind == "ascii") header.binary = false;
      else if (kind == "binary_little_endian") header.binary = true;
      else fail("unsupported PLY format '" + kind + "'");
      format_seen = true;
    } else if (keyword == "element") {
      PlyElement elem;
      if (!(row >> elem.name >> elem.count)) fail("malformed element line");
      header.elements.push_back(elem);
    } else if (keyword == "property") {
      if (header.elements.empty()) fail("property before any element");
      PlyProperty prop;
      std::string type;
      row >> type;
      if (type == "list") {
        prop.is_list = true;
        std::string count_type, value_type;
        if (!(row >> count_type >> value_type >> prop.name)) fail("malformed list property");
        prop.count_type = parse_ply_type(count_type, path.string());
        prop.type = parse_ply_type(value_type, path.string());
      } else {
        prop.type = parse_ply_type(type, path.string());
        if (!(row >> prop.name)) fail("property missing name");
      }
      header.elements.back().properties.push_back(prop);
    } else if (keyword == "end_header") {
      if (!format_seen) fail("missing format line");
      return header;
    } else {
      fail("unknown header keyword '" + keyword + "'");
    }
  }
  fail("unterminated header");
  return header;
}

// Reads the vertex element into points/normals and, when wanted, the face
// element into faces (fan-triangulated).
void read_ply(const std::filesystem::path& path, std::vector<Vec3>& points,
              std::vector<Vec3>& normals, std::vector<std::array<std::int32_t, 3>>* faces) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const PlyHeader header = read_ply_header(path, in);

  for (const PlyElement& elem : header.elements) {
    const bool is_vertex = elem.name == "vertex";
    const bool is_face = elem.name == "face" && faces != nullptr;

    int idx_x = -1, idx_y = -1, idx_z = -1, idx_nx = -1, idx_ny = -1, idx_nz = -1;
    for (std::size_t p = 0; p < elem.properties.size(); ++p) {
      const std::string& name = elem.properties[p].name;
      if (name == "x") idx_x = static_cast<int>(p);
      else if (name == "y") idx_y = static_cast<int>(p);
      else if (name == "z") idx_z = static_cast<int>(p);
      else if (name == "nx") idx_nx = static_cast<int>(p);
      else if (name == "ny") idx_ny = static_cast<int>(p);
      else if (name == "nz") idx_nz = static_cast<int>(p);
    }
    if (is_vertex && (idx_x < 0 || idx_y < 0 || idx_z < 0))
      throw ParseError(path.string() + ": vertex element lacks x/y/z properties");
    const bool want_normals = is_vertex && idx_nx >= 0 && idx_ny >= 0 && idx_nz >= 0;

    const bool fixed_stride =
        std::none_of(elem.properties.begin(), elem.properties.end(),
                     [](const PlyProperty& p) { return p.is_list; });

    if (header.binary && fixed_stride) {
      std::size_t stride = 0;
      std::vector<std::size_t> offsets;
      for (const PlyProperty& p : elem.properties) {
        offsets.push_back(stride);
        stride += ply_type_size(p.type);
      }
      const std::size_t expected = elem.count * stride;
      std::vector<char> blob(expected);
      in.read(blob.data(), static_cast<std::streamsize>(expected));
      const auto got = static_cast<std::size_t>(in.gcount());
      if (got != expected)
        throw ParseError(path.string() + ": element '" + elem.name + "' truncated: expected " +
                         std::to_string(expected) + " bytes, got " + std::to_string(got));
      if (!is_vertex) continue;  // skipped element, bytes consumed
      points.reserve(points.size() + elem.count);
      for (std::size_t i = 0; i < elem.count; ++i) {
        const char* row = blob.data() + i * stride;
        auto value = [&](int p) {
          return decode_scalar(row + offsets[p], elem.properties[p].type);
        };
        points.push_back({value(idx_x), value(idx_y), value(idx_z)});
        if (want_normals) normals.push_back({value(idx_nx), value(idx_ny), value(idx_nz)});
      }
      continue;
    }

    // row-by-row path: ascii, or binary with list properties
    for (std::size_t i = 0; i < elem.count; ++i) {
      std::vector<double> scalars(elem.properties.size(), 0.0);
      std::vector<std::int64_t> list_values;
      for (std::size_t p = 0; p < elem.properties.size(); ++p) {
        const PlyProperty& prop = elem.properties[p];
        auto read_one = [&](PlyType t) -> double {
          if (header.binary) {
            char bytes[8];
            in.read(bytes, static_cast<std::streamsize>(ply_type_size(t)));
            if (static_cast<std::size_t>(in.gcount()) != ply_type_size(t))
              throw ParseError(path.string() + ": element '" + elem.name +
                               "' truncated: expected " + std::to_string(ply_type_size(t)) +
                               " more bytes in row " + std::to_string(i));
            return decode_scalar(bytes, t);
          }
          double v;
          if (!(in >> v))
            throw ParseError(path.string() + ": element '" + elem.name +
                             "' truncated in row " + std::to_string(i));
          return v;
        };
        if (prop.is_list) {
          const auto count = static_cast<std::size_t>(read_one(prop.count_type));
          for (std::size_t j = 0; j < count; ++j)
            list_values.push_back(static_cast<std::int64_t>(read_one(prop.type)));
        } else {
          scalars[p] = read_one(prop.type);
        }
      }
      if (is_vertex) {
        points.push_back({scalars[idx_x], scalars[idx_y], scalars[idx_z]});
        if (want_normals)
          normals.push_back({scalars[idx_nx], scalars[idx_ny], scalars[idx_nz]});
      } else if (is_face && list_values.size() >= 3) {
        for (std::size_t j = 1; j + 1 < list_values.size(); ++j)
          faces->push_back({static_cast<std::int32_t>(list_values[0]),
                            static_cast<std::int32_t>(list_values[j]),
                            static_cast<std::int32_t>(list_values[j + 1])});
      }
    }
  }
}

// ---------------------------------------------------------------------------
// OBJ

void read_obj(const std::filesystem::path& path, std::vector<Vec3>& points,
              std::vector<Vec3>& normals, std::vector<std::array<std::int32_t, 3>>* faces) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    std::string tag;
    if (!(row >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(row >> p.x >> p.y >> p.z))
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed vertex");
      points.push_back(p);
    } else if (tag == "vn") {
      Vec3 n;
      if (!(row >> n.x >> n.y >> n.z))
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed normal");
      normals.push_back(n);
    } else if (tag == "f" && faces) {
      std::vector<std::int32_t> poly;
      std::string vert;
      while (row >> vert) {
        const auto slash = vert.find('/');
        std::int64_t idx;
        try {
          idx = std::stoll(vert.substr(0, slash));
        } catch (const std::exception&) {
          throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": malformed face corner '" + vert + "'");
        }
        if (idx < 0) idx = static_cast<std::int64_t>(points.size()) + idx + 1;
        poly.push_back(static_cast<std::int32_t>(idx - 1));
      }
      if (poly.size() < 3)
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": face with < 3 corners");
      for (std::size_t j = 1; j + 1 < poly.size(); ++j)
        faces->push_back({poly[0], poly[j], poly[j + 1]});
    }
  }
  // normals pair with vertices by position; a mismatched count means they
  // belong to face corners instead, which the cloud reader does not track
  if (!normals.empty() && normals.size() != points.size()) normals.clear();
}

// ---------------------------------------------------------------------------
// Writers

void write_ply_header(std::ofstream& out, std::size_t vertices, bool with_normals,
                      std::size_t faces, bool with_faces) {
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << vertices << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (with_normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (with_faces) {
    out << "element face " << faces << "\n";
    out << "property list uchar int vertex_indices\n";
  }
  out << "end_header\n";
}

void put_float(std::ofstream& out, double v) {
  const auto f = static_cast<float>(v);
  out.write(reinterpret_cast<const char*>(&f), sizeof(f));
}

}  // namespace

PointCloud read_point_cloud(const std::filesystem::path& path, FileFormat format) {
  const FileFormat fmt = detect_format(path, format);
  PointCloud cloud;
  switch (fmt) {
    case FileFormat::Xyz: read_xyz(path, cloud); break;
    case FileFormat::Ply: read_ply(path, cloud.points, cloud.normals, nullptr); break;
    case FileFormat::Obj: read_obj(path, cloud.points, cloud.normals, nullptr); break;
    case FileFormat::Auto: break;  // unreachable
  }
  if (cloud.points.empty()) throw EmptyInputError(path.string() + ": no points");
  if (!cloud.normals.empty() && cloud.normals.size() != cloud.points.size())
    throw ParseError(path.string() + ": normal count does not match point count");
  renormalize(cloud.normals);
  cloud.bbox_diagonal = bounding_box(cloud.points).diagonal();
  return cloud;
}

TriangleMesh read_mesh(const std::filesystem::path& path, FileFormat format) {
  const FileFormat fmt = detect_format(path, format);
  TriangleMesh mesh;
  std::vector<Vec3> normals;
  switch (fmt) {
    case FileFormat::Ply: read_ply(path, mesh.vertices, normals, &mesh.faces); break;
    case FileFormat::Obj: read_obj(path, mesh.vertices, normals, &mesh.faces); break;
    default: throw ParseError(path.string() + ": meshes must be PLY or OBJ");
  }
  return mesh;
}

void write_mesh(const TriangleMesh& mesh, const std::filesystem::path& path,
                FileFormat format) {
  if (format == FileFormat::Auto) format = detect_format(path, FileFormat::Auto);
  if (format == FileFormat::Obj) {
    std::ofstream out(path);
    if (!out) throw DwgError("cannot write " + path.string());
    out.precision(9);
    for (const Vec3& v : mesh.vertices) out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& f : mesh.faces)
      out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    if (!out) throw DwgError("write failed for " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DwgError("cannot write " + path.string());
  write_ply_header(out, mesh.vertices.size(), false, mesh.faces.size(), true);
  for (const Vec3& v : mesh.vertices) {
    put_float(out, v.x);
    put_float(out, v.y);
    put_float(out, v.z);
  }
  for (const auto& f : mesh.faces) {
    const std::uint8_t count = 3;
    out.write(reinterpret_cast<const char*>(&count), 1);
    out.write(reinterpret_cast<const char*>(f.data()), 3 * sizeof(std::int32_t));
  }
  if (!out) throw DwgError("write failed for " + path.string());
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                       FileFormat format) {
  const FileFormat fmt = detect_format(path, format);
  const bool with_normals = cloud.has_normals();
  if (fmt == FileFormat::Xyz) {
    std::ofstream out(path);
    if (!out) throw DwgError("cannot write " + path.string());
    out.precision(17);
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      const Vec3& p = cloud.points[i];
      out << p.x << " " << p.y << " " << p.z;
      if (with_normals) {
        const Vec3& n = cloud.normals[i];
        out << " " << n.x << " " << n.y << " " << n.z;
      }
      out << "\n";
    }
    if (!out) throw DwgError("write failed for " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DwgError("cannot write " + path.string());
  write_ply_header(out, cloud.points.size(), with_normals, 0, false);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    put_float(out, p.x);
    put_float(out, p.y);
    put_float(out, p.z);
    if (with_normals) {
      const Vec3& n = cloud.normals[i];
      put_float(out, n.x);
      put_float(out, n.y);
      put_float(out, n.z);
    }
  }
  if (!out) throw DwgError("write failed for " + path.string());
}

void write_oriented_points(const PointCloud& cloud, const std::filesystem::path& path) {
  if (!cloud.has_normals())
    throw DwgError("write_oriented_points: cloud has no normals");
  write_point_cloud(cloud, path, FileFormat::Ply);
}

}  // namespace dwg
