#include <Eigen/Geometry>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "geolift/gis_map.hpp"

namespace geolift {

using json = nlohmann::ordered_json;

Triangle LabeledMesh::triangle(std::size_t i) const {
  const auto& t = triangles[i];
  Triangle out;
  out.v0 = vertices[t.v[0]];
  out.v1 = vertices[t.v[1]];
  out.v2 = vertices[t.v[2]];
  out.label = t.label;
  out.polygon_id = t.polygon_id;
  out.walkable = t.walkable;
  return out;
}

Vec3 LabeledMesh::normal(std::size_t i) const {
  const auto& t = triangles[i];
  const Vec3& a = vertices[t.v[0]];
  return (vertices[t.v[1]] - a).cross(vertices[t.v[2]] - a).normalized();
}

double LabeledMesh::area(std::size_t i) const {
  const auto& t = triangles[i];
  const Vec3& a = vertices[t.v[0]];
  return 0.5 * (vertices[t.v[1]] - a).cross(vertices[t.v[2]] - a).norm();
}

void LabeledMesh::validate() const {
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    for (auto v : triangles[i].v) {
      if (v >= vertices.size()) {
        throw ValidationError("mesh: triangle " + std::to_string(i) + " references vertex " +
                              std::to_string(v) + " out of range");
      }
    }
    if (!(area(i) > 1e-12)) throw ValidationError("mesh: triangle " + std::to_string(i) + " is degenerate");
  }
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw ValidationError("mesh: non-finite vertex");
  }
}

std::string mesh_to_json(const LabeledMesh& mesh) {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : mesh.vertices) j["vertices"].push_back({v.x(), v.y(), v.z()});
  j["triangles"] = json::array();
  for (const auto& t : mesh.triangles) {
    json jt;
    jt["v"] = {t.v[0], t.v[1], t.v[2]};
    jt["label"] = std::string(to_string(t.label));
    jt["polygon_id"] = t.polygon_id;
    jt["walkable"] = t.walkable;
    j["triangles"].push_back(std::move(jt));
  }
  return j.dump() + "\n";
}

LabeledMesh parse_mesh(std::string_view text) {
  LabeledMesh mesh;
  try {
    const json j = json::parse(text);
    for (const auto& v : j.at("vertices")) {
      if (!v.is_array() || v.size() != 3) throw ValidationError("mesh.json: vertices: expected [x,y,z]");
      mesh.vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    for (const auto& jt : j.at("triangles")) {
      MeshTriangle t;
      const auto& v = jt.at("v");
      if (!v.is_array() || v.size() != 3) throw ValidationError("mesh.json: triangles: expected v:[i,j,k]");
      for (int k = 0; k < 3; ++k) t.v[k] = v[k].get<std::uint32_t>();
      const auto name = jt.at("label").get<std::string>();
      const auto label = parse_semantic_label(name);
      if (!label) throw ValidationError("mesh.json: unknown label '" + name + "'");
      t.label = *label;
      t.polygon_id = jt.value("polygon_id", std::string());
      t.walkable = jt.value("walkable", false);
      mesh.triangles.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mesh.json: ") + e.what());
  }
  mesh.validate();
  return mesh;
}

std::string mesh_to_obj(const LabeledMesh& mesh) {
  std::ostringstream os;
  os.precision(17);
  os << "# geolift labeled mesh\n";
  for (const auto& v : mesh.vertices) os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  int current = -1;
  for (const auto& t : mesh.triangles) {
    if (code(t.label) != current) {
      current = code(t.label);
      os << "usemtl " << to_string(t.label) << '\n';
    }
    os << "f " << t.v[0] + 1 << ' ' << t.v[1] + 1 << ' ' << t.v[2] + 1 << '\n';
  }
  return os.str();
}

}  // namespace geolift
