#include "funcgrasp/mesh_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace funcgrasp {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

void add_polygon(TriangleMesh& mesh, const std::vector<int>& poly) {
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
  }
}

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

PlyType parse_ply_type(const std::string& name, const std::filesystem::path& path) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUint8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUint16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUint32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  throw MeshIoError(path.string() + ": unknown PLY property type '" + name + "'");
}

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8: return 1;
    case PlyType::kInt16:
    case PlyType::kUint16: return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

// Host is assumed little-endian, which every supported target is.
double read_binary(std::istream& in, PlyType t) {
  switch (t) {
    case PlyType::kInt8: return read_raw<std::int8_t>(in);
    case PlyType::kUint8: return read_raw<std::uint8_t>(in);
    case PlyType::kInt16: return read_raw<std::int16_t>(in);
    case PlyType::kUint16: return read_raw<std::uint16_t>(in);
    case PlyType::kInt32: return read_raw<std::int32_t>(in);
    case PlyType::kUint32: return read_raw<std::uint32_t>(in);
    case PlyType::kFloat32: return read_raw<float>(in);
    case PlyType::kFloat64: return read_raw<double>(in);
  }
  return 0.0;
}

}  // namespace

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshIoError("cannot open " + path.string());
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        throw MeshIoError(path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string token;
      while (ls >> token) {
        const int raw = std::stoi(token.substr(0, token.find('/')));
        // Negative indices are relative to the end of the vertex list.
        const int index = raw < 0 ? static_cast<int>(mesh.vertices.size()) + raw : raw - 1;
        poly.push_back(index);
      }
      if (poly.size() < 3) {
        throw MeshIoError(path.string() + ":" + std::to_string(line_no) + ": face with < 3 vertices");
      }
      add_polygon(mesh, poly);
    }
  }
  return mesh;
}

TriangleMesh load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MeshIoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw MeshIoError(path.string() + ": missing 'ply' magic");

  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt != "ascii") {
        throw MeshIoError(path.string() + ": unsupported PLY format '" + fmt + "'");
      }
    } else if (tag == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) throw MeshIoError(path.string() + ": property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(count_type, path);
        p.type = parse_ply_type(item_type, path);
      } else {
        p.type = parse_ply_type(type, path);
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    } else if (tag == "end_header") {
      break;
    }
  }

  TriangleMesh mesh;
  auto read_value = [&](PlyType t) -> double {
    if (binary) return read_binary(in, t);
    double v = 0.0;
    in >> v;
    return v;
  };
  for (const PlyElement& e : elements) {
    for (std::size_t i = 0; i < e.count; ++i) {
      Vec3 v = Vec3::Zero();
      std::vector<int> poly;
      for (const PlyProperty& p : e.properties) {
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(read_value(p.count_type));
          std::vector<int> items(n);
          for (std::size_t k = 0; k < n; ++k) items[k] = static_cast<int>(read_value(p.type));
          if (e.name == "face" && (p.name == "vertex_indices" || p.name == "vertex_index")) {
            poly = std::move(items);
          }
        } else {
          const double value = read_value(p.type);
          if (e.name == "vertex") {
            if (p.name == "x") v.x() = value;
            if (p.name == "y") v.y() = value;
            if (p.name == "z") v.z() = value;
          }
        }
      }
      if (!in) throw MeshIoError(path.string() + ": truncated " + e.name + " data");
      if (e.name == "vertex") mesh.vertices.push_back(v);
      if (e.name == "face") {
        if (poly.size() < 3) throw MeshIoError(path.string() + ": face with < 3 vertices");
        add_polygon(mesh, poly);
      }
    }
  }
  return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshLoadReport* report) {
  const std::string ext = lower_extension(path);
  TriangleMesh mesh;
  if (ext == ".obj") {
    mesh = load_obj(path);
  } else if (ext == ".ply") {
    mesh = load_ply(path);
  } else {
    throw MeshIoError(path.string() + ": unsupported mesh extension '" + ext + "'");
  }
  const std::size_t removed = remove_degenerate_triangles(mesh);
  if (report) report->degenerate_removed = removed;
  if (mesh.empty()) throw MeshIoError(path.string() + ": mesh has no valid triangles");
  return mesh;
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshIoError("cannot write " + path.string());
  out << std::setprecision(9);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

void save_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
              const std::vector<Rgb>& colors) {
  if (!colors.empty() && colors.size() != mesh.vertices.size()) {
    throw MeshIoError("color count does not match vertex count");
  }
  std::ofstream out(path);
  if (!out) throw MeshIoError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (!colors.empty()) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  out << std::setprecision(9);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    out << v.x() << ' ' << v.y() << ' ' << v.z();
    if (!colors.empty()) {
      out << ' ' << int(colors[i][0]) << ' ' << int(colors[i][1]) << ' ' << int(colors[i][2]);
    }
    out << '\n';
  }
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace funcgrasp
