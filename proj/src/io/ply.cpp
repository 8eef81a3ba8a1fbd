#include "rdc/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rdc {
namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

ScalarType parse_type(const std::string& t, const fs::path& path) {
  if (t == "char" || t == "int8") return ScalarType::Int8;
  if (t == "uchar" || t == "uint8") return ScalarType::UInt8;
  if (t == "short" || t == "int16") return ScalarType::Int16;
  if (t == "ushort" || t == "uint16") return ScalarType::UInt16;
  if (t == "int" || t == "int32") return ScalarType::Int32;
  if (t == "uint" || t == "uint32") return ScalarType::UInt32;
  if (t == "float" || t == "float32") return ScalarType::Float32;
  if (t == "double" || t == "float64") return ScalarType::Float64;
  throw FormatError(path.string() + ": unsupported PLY property type '" + t + "'");
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::Float32;
  bool is_list = false;
  ScalarType count_type = ScalarType::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

template <typename T>
T read_raw(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

class ValueReader {
 public:
  ValueReader(std::istream& in, bool binary, const fs::path& path)
      : in_(in), binary_(binary), path_(path) {}

  double read(ScalarType t) {
    double v = 0;
    if (binary_) {
      switch (t) {
        case ScalarType::Int8: v = read_raw<std::int8_t>(in_); break;
        case ScalarType::UInt8: v = read_raw<std::uint8_t>(in_); break;
        case ScalarType::Int16: v = read_raw<std::int16_t>(in_); break;
        case ScalarType::UInt16: v = read_raw<std::uint16_t>(in_); break;
        case ScalarType::Int32: v = read_raw<std::int32_t>(in_); break;
        case ScalarType::UInt32: v = read_raw<std::uint32_t>(in_); break;
        case ScalarType::Float32: v = read_raw<float>(in_); break;
        case ScalarType::Float64: v = read_raw<double>(in_); break;
      }
    } else {
      in_ >> v;
    }
    if (!in_) throw FormatError(path_.string() + ": unexpected end of PLY data");
    return v;
  }

 private:
  std::istream& in_;
  bool binary_;
  const fs::path& path_;
};

int find_property(const Element& e, std::initializer_list<const char*> names) {
  for (std::size_t i = 0; i < e.properties.size(); ++i)
    for (const char* n : names)
      if (e.properties[i].name == n) return static_cast<int>(i);
  return -1;
}

}  // namespace

PlyData read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open file");

  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw FormatError(path.string() + ": missing 'ply' magic");

  bool binary = false;
  bool have_format = false;
  std::vector<Element> elements;
  for (;;) {
    if (!std::getline(in, line)) throw FormatError(path.string() + ": header without end_header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") break;
    if (key.empty() || key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw FormatError(path.string() + ": unsupported PLY format '" + fmt + "'");
      }
      have_format = true;
    } else if (key == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (!ls || count < 0) throw FormatError(path.string() + ": malformed element line '" + line + "'");
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (key == "property") {
      if (elements.empty()) throw FormatError(path.string() + ": property before any element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = parse_type(ct, path);
        p.type = parse_type(it, path);
      } else {
        ls >> p.name;
        p.type = parse_type(type, path);
      }
      if (p.name.empty()) throw FormatError(path.string() + ": malformed property line '" + line + "'");
      elements.back().properties.push_back(p);
    } else {
      throw FormatError(path.string() + ": unknown header keyword '" + key + "'");
    }
  }
  if (!have_format) throw FormatError(path.string() + ": missing format line");

  PlyData data;
  ValueReader reader(in, binary, path);
  std::vector<std::vector<int>> polygons;
  for (const Element& e : elements) {
    if (e.name == "vertex") {
      const int ix = find_property(e, {"x"}), iy = find_property(e, {"y"}), iz = find_property(e, {"z"});
      if (ix < 0 || iy < 0 || iz < 0) throw FormatError(path.string() + ": vertex element lacks x/y/z");
      const int inx = find_property(e, {"nx"}), iny = find_property(e, {"ny"}), inz = find_property(e, {"nz"});
      const int ir = find_property(e, {"red", "r"}), ig = find_property(e, {"green", "g"}),
                ib = find_property(e, {"blue", "b"});
      const int ivis = find_property(e, {"visible_frames"});
      const bool normals = inx >= 0 && iny >= 0 && inz >= 0;
      const bool colors = ir >= 0 && ig >= 0 && ib >= 0;
      const auto n = static_cast<Eigen::Index>(e.count);
      PointCloud& c = data.cloud;
      c.points.resize(3, n);
      if (normals) c.normals.resize(3, n);
      if (colors) c.colors.resize(3, n);
      if (ivis >= 0) c.visibility.assign(e.count, {});
      std::vector<double> scalars(e.properties.size());
      for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          const Property& prop = e.properties[p];
          if (prop.is_list) {
            const auto len = static_cast<std::size_t>(reader.read(prop.count_type));
            std::vector<FrameId> items(len);
            for (auto& it : items) it = static_cast<FrameId>(reader.read(prop.type));
            if (static_cast<int>(p) == ivis) c.visibility[static_cast<std::size_t>(i)] = std::move(items);
          } else {
            scalars[p] = reader.read(prop.type);
          }
        }
        c.points.col(i) << scalars[static_cast<std::size_t>(ix)], scalars[static_cast<std::size_t>(iy)],
            scalars[static_cast<std::size_t>(iz)];
        if (normals)
          c.normals.col(i) << scalars[static_cast<std::size_t>(inx)], scalars[static_cast<std::size_t>(iny)],
              scalars[static_cast<std::size_t>(inz)];
        if (colors)
          c.colors.col(i) << static_cast<std::uint8_t>(scalars[static_cast<std::size_t>(ir)]),
              static_cast<std::uint8_t>(scalars[static_cast<std::size_t>(ig)]),
              static_cast<std::uint8_t>(scalars[static_cast<std::size_t>(ib)]);
      }
      // Only visibly non-unit normals are rescaled, so exact files round-trip.
      for (Eigen::Index i = 0; i < c.normals.cols(); ++i) {
        const double len = c.normals.col(i).norm();
        if (len > 0 && std::abs(len - 1.0) > 1e-12) c.normals.col(i) /= len;
      }
    } else if (e.name == "face") {
      const int iv = find_property(e, {"vertex_indices", "vertex_index"});
      if (iv < 0 || !e.properties[static_cast<std::size_t>(iv)].is_list)
        throw FormatError(path.string() + ": face element lacks a vertex_indices list");
      data.has_faces = true;
      for (std::size_t f = 0; f < e.count; ++f) {
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          const Property& prop = e.properties[p];
          if (prop.is_list) {
            const auto len = static_cast<std::size_t>(reader.read(prop.count_type));
            std::vector<int> items(len);
            for (auto& it : items) it = static_cast<int>(reader.read(prop.type));
            if (static_cast<int>(p) == iv) polygons.push_back(std::move(items));
          } else {
            reader.read(prop.type);
          }
        }
      }
    } else {
      // Unknown element: consume and ignore.
      for (std::size_t r = 0; r < e.count; ++r)
        for (const Property& prop : e.properties) {
          if (prop.is_list) {
            const auto len = static_cast<std::size_t>(reader.read(prop.count_type));
            for (std::size_t k = 0; k < len; ++k) reader.read(prop.type);
          } else {
            reader.read(prop.type);
          }
        }
    }
  }

  if (data.has_faces) {
    std::size_t tri_count = 0;
    for (const auto& poly : polygons) tri_count += poly.size() >= 3 ? poly.size() - 2 : 0;
    data.mesh.vertices = data.cloud.points;
    data.mesh.triangles.resize(3, static_cast<Eigen::Index>(tri_count));
    Eigen::Index t = 0;
    for (std::size_t f = 0; f < polygons.size(); ++f) {
      const auto& poly = polygons[f];
      if (poly.size() < 3)
        throw FormatError(path.string() + ": face " + std::to_string(f) + " has fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k)
        data.mesh.triangles.col(t++) << poly[0], poly[k], poly[k + 1];
    }
    try {
      data.mesh.validate();
    } catch (const std::invalid_argument& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    data.mesh.remove_degenerate();
  }
  return data;
}

PointCloud read_point_cloud(const fs::path& path) { return read_ply(path).cloud; }

TriangleMesh read_mesh(const fs::path& path) {
  PlyData d = read_ply(path);
  if (!d.has_faces) throw FormatError(path.string() + ": PLY file has no faces");
  return std::move(d.mesh);
}

namespace {

template <typename T>
void write_value(std::ostream& out, bool binary, T v) {
  if (binary) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  } else if constexpr (std::is_same_v<T, std::uint8_t>) {
    out << static_cast<int>(v);
  } else {
    out << v;
  }
}

void write_header_start(std::ostream& out, PlyFormat format) {
  out << "ply\nformat " << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian")
      << " 1.0\n";
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out.precision(17);
  return out;
}

void write_vertex_properties(std::ostream& out, const PointCloud& c) {
  out << "element vertex " << c.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (c.has_normals()) out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (c.has_colors()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (c.has_visibility()) out << "property list uint int visible_frames\n";
}

void write_vertices(std::ostream& out, const PointCloud& c, bool binary) {
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto sep = [&] { if (!binary) out << ' '; };
    for (int k = 0; k < 3; ++k) {
      if (k) sep();
      write_value<double>(out, binary, c.points(k, i));
    }
    if (c.has_normals())
      for (int k = 0; k < 3; ++k) {
        sep();
        write_value<double>(out, binary, c.normals(k, i));
      }
    if (c.has_colors())
      for (int k = 0; k < 3; ++k) {
        sep();
        write_value<std::uint8_t>(out, binary, c.colors(k, i));
      }
    if (c.has_visibility()) {
      const auto& vis = c.visibility[static_cast<std::size_t>(i)];
      sep();
      write_value<std::uint32_t>(out, binary, static_cast<std::uint32_t>(vis.size()));
      for (FrameId id : vis) {
        sep();
        write_value<std::int32_t>(out, binary, static_cast<std::int32_t>(id));
      }
    }
    if (!binary) out << '\n';
  }
}

}  // namespace

void write_ply(const fs::path& path, const PointCloud& cloud, PlyFormat format) {
  cloud.validate();
  std::ofstream out = open_output(path);
  write_header_start(out, format);
  write_vertex_properties(out, cloud);
  out << "end_header\n";
  write_vertices(out, cloud, format == PlyFormat::BinaryLittleEndian);
  if (!out) throw FormatError(path.string() + ": write failed");
}

void write_ply(const fs::path& path, const TriangleMesh& mesh, PlyFormat format) {
  mesh.validate();
  const bool binary = format == PlyFormat::BinaryLittleEndian;
  std::ofstream out = open_output(path);
  write_header_start(out, format);
  PointCloud verts(mesh.vertices);
  write_vertex_properties(out, verts);
  out << "element face " << mesh.triangles.cols() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  write_vertices(out, verts, binary);
  for (Eigen::Index f = 0; f < mesh.triangles.cols(); ++f) {
    write_value<std::uint8_t>(out, binary, 3);
    for (int k = 0; k < 3; ++k) {
      if (!binary) out << ' ';
      write_value<std::int32_t>(out, binary, mesh.triangles(k, f));
    }
    if (!binary) out << '\n';
  }
  if (!out) throw FormatError(path.string() + ": write failed");
}

}  // namespace rdc
