#include "graspkit/mesh_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace graspkit {

namespace {

struct PlyProperty {
  std::string name;
  std::string type;       // scalar type, or list count type
  std::string item_type;  // list item type when is_list
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  int count = 0;
  std::vector<PlyProperty> properties;
};

int scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32") return 4;
  if (type == "double" || type == "float64") return 8;
  throw Error("PLY: unsupported property type " + type);
}

double read_scalar_binary(std::istream& in, const std::string& type) {
  char buf[8];
  in.read(buf, scalar_size(type));
  if (!in) throw Error("PLY: unexpected end of file");
  if (type == "char" || type == "int8") return *reinterpret_cast<int8_t*>(buf);
  if (type == "uchar" || type == "uint8") return *reinterpret_cast<uint8_t*>(buf);
  if (type == "short" || type == "int16") return *reinterpret_cast<int16_t*>(buf);
  if (type == "ushort" || type == "uint16") return *reinterpret_cast<uint16_t*>(buf);
  if (type == "int" || type == "int32") return *reinterpret_cast<int32_t*>(buf);
  if (type == "uint" || type == "uint32") return *reinterpret_cast<uint32_t*>(buf);
  if (type == "float" || type == "float32") {
    float f;
    std::memcpy(&f, buf, 4);
    return f;
  }
  double d;
  std::memcpy(&d, buf, 8);
  return d;
}

struct PlyContents {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;  // empty when absent
  std::vector<double> contact;
  bool has_contact = false;
  std::vector<Face> faces;
};

PlyContents read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw Error(path + ": not a PLY file");

  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment") continue;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") binary = true;
      else if (fmt == "ascii") binary = false;
      else throw Error(path + ": unsupported PLY format " + fmt);
    } else if (word == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      elements.push_back(el);
    } else if (word == "property") {
      if (elements.empty()) throw Error(path + ": property before element");
      PlyProperty prop;
      std::string t;
      ls >> t;
      if (t == "list") {
        prop.is_list = true;
        ls >> prop.type >> prop.item_type >> prop.name;
      } else {
        prop.type = t;
        ls >> prop.name;
      }
      elements.back().properties.push_back(prop);
    } else if (word == "end_header") {
      break;
    }
  }

  PlyContents out;
  for (const PlyElement& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    if (is_vertex) {
      out.vertices.resize(el.count);
      for (const PlyProperty& p : el.properties) {
        if (p.name == "nx") out.normals.resize(el.count);
        if (p.name == "contact") {
          out.contact.resize(el.count);
          out.has_contact = true;
        }
      }
    }
    for (int i = 0; i < el.count; ++i) {
      std::istringstream asc;
      if (!binary) {
        if (!std::getline(in, line)) throw Error(path + ": truncated PLY body");
        asc.str(line);
      }
      auto next_scalar = [&](const std::string& type) {
        if (binary) return read_scalar_binary(in, type);
        double v;
        asc >> v;
        return v;
      };
      if (is_face) {
        // single list property expected
        const PlyProperty& p = el.properties.at(0);
        const int n = static_cast<int>(next_scalar(p.is_list ? p.type : "uchar"));
        std::vector<int> idx(n);
        for (int k = 0; k < n; ++k) idx[k] = static_cast<int>(next_scalar(p.item_type));
        for (int k = 2; k < n; ++k) out.faces.push_back({idx[0], idx[k - 1], idx[k]});
      } else {
        Vec3 v = Vec3::Zero(), nrm = Vec3::Zero();
        double contact = 0;
        for (const PlyProperty& p : el.properties) {
          if (p.is_list) {
            const int n = static_cast<int>(next_scalar(p.type));
            for (int k = 0; k < n; ++k) next_scalar(p.item_type);
            continue;
          }
          const double value = next_scalar(p.type);
          if (!is_vertex) continue;
          if (p.name == "x") v.x() = value;
          else if (p.name == "y") v.y() = value;
          else if (p.name == "z") v.z() = value;
          else if (p.name == "nx") nrm.x() = value;
          else if (p.name == "ny") nrm.y() = value;
          else if (p.name == "nz") nrm.z() = value;
          else if (p.name == "contact") contact = value;
        }
        if (is_vertex) {
          out.vertices[i] = v;
          if (!out.normals.empty()) out.normals[i] = nrm;
          if (out.has_contact) out.contact[i] = contact;
        }
      }
    }
  }
  return out;
}

void write_f32(std::ostream& out, double v) {
  const float f = static_cast<float>(v);
  out.write(reinterpret_cast<const char*>(&f), 4);
}

TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      vertices.push_back(v);
    } else if (word == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // "i", "i/t", "i/t/n", "i//n" — take the vertex index
        idx.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
      }
      for (int k = 2; k < static_cast<int>(idx.size()); ++k) {
        faces.push_back({idx[0], idx[k - 1], idx[k]});
      }
    }
  }
  return TriMesh(std::move(vertices), std::move(faces));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

TriMesh load_mesh(const std::string& path) { return load_mesh_with_contact(path).mesh; }

MeshWithContact load_mesh_with_contact(const std::string& path) {
  if (ends_with(path, ".obj")) {
    return {load_obj(path), std::nullopt};
  }
  PlyContents ply = read_ply(path);
  if (ply.faces.empty()) throw Error(path + ": PLY has no faces; use load_cloud_ply");
  MeshWithContact out{TriMesh(std::move(ply.vertices), std::move(ply.faces)), std::nullopt};
  if (ply.has_contact) out.contact = std::move(ply.contact);
  return out;
}

CloudWithContact load_cloud_ply(const std::string& path) {
  PlyContents ply = read_ply(path);
  if (ply.normals.empty()) throw Error(path + ": point cloud PLY requires normals");
  for (Vec3& n : ply.normals) {
    const double len = n.norm();
    if (len > 1e-12) n /= len;  // absorb float32 rounding
    else n = Vec3::UnitZ();
  }
  CloudWithContact out{PointCloud(std::move(ply.vertices), std::move(ply.normals)), std::nullopt};
  if (ply.has_contact) out.contact = std::move(ply.contact);
  return out;
}

void save_mesh_obj(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(9);
  for (const Vec3& v : mesh.vertices()) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const Face& f : mesh.faces()) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

void save_mesh_ply(const std::string& path, const TriMesh& mesh,
                   const std::vector<double>* contact) {
  if (contact && contact->size() != mesh.vertices().size()) {
    throw Error("save_mesh_ply: contact length mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << mesh.vertices().size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (contact) out << "property float contact\n";
  out << "element face " << mesh.faces().size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  for (size_t i = 0; i < mesh.vertices().size(); ++i) {
    const Vec3& v = mesh.vertices()[i];
    write_f32(out, v.x());
    write_f32(out, v.y());
    write_f32(out, v.z());
    if (contact) write_f32(out, (*contact)[i]);
  }
  for (const Face& f : mesh.faces()) {
    const uint8_t n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    for (int idx : f) {
      const int32_t i32 = idx;
      out.write(reinterpret_cast<const char*>(&i32), 4);
    }
  }
}

void save_cloud_ply(const std::string& path, const PointCloud& cloud,
                    const std::vector<double>* contact) {
  if (contact && static_cast<int>(contact->size()) != cloud.size()) {
    throw Error("save_cloud_ply: contact length mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (contact) out << "property float contact\n";
  out << "end_header\n";
  for (int i = 0; i < cloud.size(); ++i) {
    write_f32(out, cloud.points[i].x());
    write_f32(out, cloud.points[i].y());
    write_f32(out, cloud.points[i].z());
    write_f32(out, cloud.normals[i].x());
    write_f32(out, cloud.normals[i].y());
    write_f32(out, cloud.normals[i].z());
    if (contact) write_f32(out, (*contact)[i]);
  }
}

}  // namespace graspkit
