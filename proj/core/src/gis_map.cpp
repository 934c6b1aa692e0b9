#include "geolift/gis_map.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

namespace geolift {

using json = nlohmann::ordered_json;

namespace {

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

int orientation(const Vec2& o, const Vec2& a, const Vec2& b) {
  const double c = cross2(o, a, b);
  return (c > 0) - (c < 0);
}

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

// Closed-segment intersection, touching and collinear overlap included.
bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(q1, p1, p2)) return true;
  if (o2 == 0 && on_segment(q2, p1, p2)) return true;
  if (o3 == 0 && on_segment(p1, q1, q2)) return true;
  if (o4 == 0 && on_segment(p2, q1, q2)) return true;
  return false;
}

bool point_on_ring_boundary(const Vec2& p, const std::vector<Vec2>& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[(i + 1) % n];
    if (orientation(a, b, p) == 0 && on_segment(p, a, b)) return true;
  }
  return false;
}

struct Box2 {
  Vec2 lo, hi;
};

Box2 ring_box(const std::vector<Vec2>& ring) {
  Box2 b{ring.front(), ring.front()};
  for (const auto& p : ring) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  return b;
}

// A lies inside B: nothing of A strictly outside B, something strictly inside.
bool ring_nested_in(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  bool some_inside = false;
  for (const auto& p : a) {
    if (point_on_ring_boundary(p, b)) continue;
    if (!point_in_ring(p, b)) return false;
    some_inside = true;
  }
  if (some_inside) return true;
  Vec2 c = Vec2::Zero();
  for (const auto& p : a) c += p;
  c /= static_cast<double>(a.size());
  return !point_on_ring_boundary(c, b) && point_in_ring(c, b);
}

Vec3 read_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(what + ": expected [x,y,z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

// z = a x + b y + c through three anchors; nullopt when collinear in (x, y).
std::optional<Eigen::Vector3d> plane_through(const std::array<Vec3, 3>& anchors) {
  Eigen::Matrix3d A;
  Eigen::Vector3d z;
  for (int i = 0; i < 3; ++i) {
    A.row(i) << anchors[i].x(), anchors[i].y(), 1.0;
    z[i] = anchors[i].z();
  }
  const Vec2 e1 = anchors[1].head<2>() - anchors[0].head<2>();
  const Vec2 e2 = anchors[2].head<2>() - anchors[0].head<2>();
  const double area2 = e1.x() * e2.y() - e1.y() * e2.x();
  if (std::abs(area2) <= 1e-9 * std::max(1.0, e1.squaredNorm() + e2.squaredNorm())) {
    return std::nullopt;
  }
  return A.partialPivLu().solve(z);
}

}  // namespace

const GisPolygon* GisMap::find(std::string_view id) const {
  for (const auto& p : polygons) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

double signed_area(const std::vector<Vec2>& ring) {
  double a = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = ring[i];
    const Vec2& q = ring[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return a;
}

bool ring_is_simple(const std::vector<Vec2>& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (ring[i] == ring[(i + 1) % n]) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a1 = ring[i];
    const Vec2& a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2& b1 = ring[j];
      const Vec2& b2 = ring[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Neighbouring edges may only share their common vertex.
        const Vec2& shared = (j == i + 1) ? a2 : a1;
        const Vec2& other_a = (j == i + 1) ? a1 : a2;
        const Vec2& other_b = (j == i + 1) ? b2 : b1;
        if (orientation(shared, other_a, other_b) == 0 &&
            (other_a - shared).dot(other_b - shared) > 0) {
          return false;
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

bool point_in_ring(const Vec2& p, const std::vector<Vec2>& ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

void validate_map(GisMap& map, Diagnostics* diag) {
  if (map.polygons.empty()) throw ValidationError("map: at least one polygon required");
  std::set<std::string> ids;
  for (auto& poly : map.polygons) {
    if (poly.id.empty()) throw ValidationError("map: polygon with empty id");
    if (!ids.insert(poly.id).second) throw ValidationError("map: duplicate polygon id '" + poly.id + "'");
    if (poly.ring.size() >= 2 && poly.ring.front() == poly.ring.back()) {
      poly.ring.pop_back();
      if (diag) diag->warn("map: polygon '" + poly.id + "' repeats its first vertex; dropped");
    }
    if (poly.ring.size() < 3) throw ValidationError("map: polygon '" + poly.id + "' has fewer than 3 vertices");
    for (const auto& p : poly.ring) {
      if (!p.allFinite()) throw ValidationError("map: polygon '" + poly.id + "' has a non-finite vertex");
    }
    if (!ring_is_simple(poly.ring)) {
      throw ValidationError("map: polygon '" + poly.id + "' ring self-intersects");
    }
    const double a2 = signed_area(poly.ring);
    if (std::abs(a2) <= 2e-12) throw ValidationError("map: polygon '" + poly.id + "' has zero area");
    if (a2 < 0) {
      std::reverse(poly.ring.begin(), poly.ring.end());
      if (diag) diag->warn("map: polygon '" + poly.id + "' was clockwise; reversed to CCW");
    }
  }
  // Holes are unsupported: reject any ring lying inside another.
  std::vector<Box2> boxes;
  boxes.reserve(map.polygons.size());
  for (const auto& p : map.polygons) boxes.push_back(ring_box(p.ring));
  for (std::size_t a = 0; a < map.polygons.size(); ++a) {
    for (std::size_t b = 0; b < map.polygons.size(); ++b) {
      if (a == b) continue;
      const Box2& ba = boxes[a];
      const Box2& bb = boxes[b];
      if ((ba.lo.array() < bb.lo.array()).any() || (ba.hi.array() > bb.hi.array()).any()) continue;
      if (ring_nested_in(map.polygons[a].ring, map.polygons[b].ring)) {
        throw ValidationError("map: polygon '" + map.polygons[a].id + "' is nested inside '" +
                              map.polygons[b].id + "' (holes are not supported)");
      }
    }
  }
}

GisMap parse_map(std::string_view text, Diagnostics* diag) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("map.json: ") + e.what());
  }
  GisMap map;
  try {
    if (j.contains("crs") && j["crs"].get<std::string>() != "local-meters") {
      throw ValidationError("map.json: unsupported crs '" + j["crs"].get<std::string>() + "'");
    }
    const auto& polys = j.at("polygons");
    if (!polys.is_array()) throw ValidationError("map.json: polygons must be an array");
    for (std::size_t i = 0; i < polys.size(); ++i) {
      const auto& jp = polys[i];
      GisPolygon p;
      p.id = jp.at("id").get<std::string>();
      const auto label_name = jp.at("label").get<std::string>();
      const auto label = parse_semantic_label(label_name);
      if (!label) {
        throw ValidationError("map.json: polygons[" + std::to_string(i) + "].label: unknown label '" +
                              label_name + "'");
      }
      p.label = *label;
      p.walkable = jp.at("walkable").get<bool>();
      for (const auto& v : jp.at("ring")) {
        if (!v.is_array() || v.size() != 2) {
          throw ValidationError("map.json: polygons[" + std::to_string(i) + "].ring: expected [x,y]");
        }
        p.ring.emplace_back(v[0].get<double>(), v[1].get<double>());
      }
      map.polygons.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("map.json: ") + e.what());
  }
  validate_map(map, diag);
  return map;
}

std::string map_to_json(const GisMap& map) {
  json j;
  j["crs"] = "local-meters";
  j["polygons"] = json::array();
  for (const auto& p : map.polygons) {
    json jp;
    jp["id"] = p.id;
    jp["label"] = std::string(to_string(p.label));
    jp["walkable"] = p.walkable;
    json ring = json::array();
    for (const auto& v : p.ring) ring.push_back({v.x(), v.y()});
    jp["ring"] = ring;
    j["polygons"].push_back(jp);
  }
  return j.dump(2) + "\n";
}

void validate_liftspec(const LiftSpec& spec, const GisMap& map) {
  if (!std::isfinite(spec.ground_elevation)) throw ValidationError("lift: ground_elevation must be finite");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < spec.ops.size(); ++i) {
    const auto& op = spec.ops[i];
    const std::string where = "lift: ops[" + std::to_string(i) + "]";
    if (!map.find(op.polygon_id)) throw ValidationError(where + ": unknown polygon '" + op.polygon_id + "'");
    if (!seen.insert(op.polygon_id).second) {
      throw ValidationError(where + ": polygon '" + op.polygon_id + "' already has an op");
    }
    if (const auto* e = std::get_if<ExtrudeOp>(&op.op)) {
      if (!(std::isfinite(e->height) && e->height > 0)) throw ValidationError(where + ": extrude height must be > 0");
    } else if (const auto* c = std::get_if<CarveOp>(&op.op)) {
      if (!(std::isfinite(c->depth) && c->depth > 0)) throw ValidationError(where + ": carve depth must be > 0");
    } else if (const auto* t = std::get_if<TiltOp>(&op.op)) {
      for (const auto& a : t->anchors) {
        if (!a.allFinite()) throw ValidationError(where + ": tilt anchors must be finite");
      }
      if (!plane_through(t->anchors)) throw ValidationError(where + ": tilt anchors are collinear");
    }
  }
}

LiftSpec parse_liftspec(std::string_view text, const GisMap& map) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("lift.json: ") + e.what());
  }
  LiftSpec spec;
  try {
    spec.ground_elevation = j.value("ground_elevation", 0.0);
    if (j.contains("ops")) {
      for (std::size_t i = 0; i < j["ops"].size(); ++i) {
        const auto& jo = j["ops"][i];
        const std::string where = "lift.json: ops[" + std::to_string(i) + "]";
        LiftOp op;
        op.polygon_id = jo.at("polygon").get<std::string>();
        const auto kind = jo.at("op").get<std::string>();
        if (kind == "extrude") {
          op.op = ExtrudeOp{jo.at("height").get<double>()};
        } else if (kind == "carve") {
          op.op = CarveOp{jo.at("depth").get<double>()};
        } else if (kind == "tilt") {
          const auto& ja = jo.at("anchors");
          if (!ja.is_array() || ja.size() != 3) throw ValidationError(where + ".anchors: expected 3 points");
          TiltOp t;
          for (int k = 0; k < 3; ++k) t.anchors[k] = read_vec3(ja[k], where + ".anchors");
          op.op = t;
        } else {
          throw ValidationError(where + ".op: unknown op '" + kind + "'");
        }
        spec.ops.push_back(std::move(op));
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("lift.json: ") + e.what());
  }
  validate_liftspec(spec, map);
  return spec;
}

std::string liftspec_to_json(const LiftSpec& spec) {
  json j;
  j["ground_elevation"] = spec.ground_elevation;
  j["ops"] = json::array();
  for (const auto& op : spec.ops) {
    json jo;
    jo["polygon"] = op.polygon_id;
    if (const auto* e = std::get_if<ExtrudeOp>(&op.op)) {
      jo["op"] = "extrude";
      jo["height"] = e->height;
    } else if (const auto* c = std::get_if<CarveOp>(&op.op)) {
      jo["op"] = "carve";
      jo["depth"] = c->depth;
    } else {
      const auto& t = std::get<TiltOp>(op.op);
      jo["op"] = "tilt";
      jo["anchors"] = json::array();
      for (const auto& a : t.anchors) jo["anchors"].push_back({a.x(), a.y(), a.z()});
    }
    j["ops"].push_back(jo);
  }
  return j.dump(2) + "\n";
}

std::vector<std::array<int, 3>> triangulate_polygon(const GisPolygon& poly) {
  const auto& ring = poly.ring;
  const int n = static_cast<int>(ring.size());
  if (n < 3 || std::abs(signed_area(ring)) <= 2e-12) {
    throw ValidationError("triangulate: polygon '" + poly.id + "' is degenerate");
  }
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  if (signed_area(ring) < 0) std::reverse(idx.begin(), idx.end());

  std::vector<std::array<int, 3>> tris;
  tris.reserve(n - 2);

  auto is_ear = [&](int pos, bool allow_flat) {
    const int m = static_cast<int>(idx.size());
    const int ip = idx[(pos + m - 1) % m];
    const int ic = idx[pos];
    const int in = idx[(pos + 1) % m];
    const Vec2& a = ring[ip];
    const Vec2& b = ring[ic];
    const Vec2& c = ring[in];
    const double turn = cross2(a, b, c);
    if (allow_flat ? turn < 0 : turn <= 0) return false;
    for (int k = 0; k < m; ++k) {
      const int iv = idx[k];
      if (iv == ip || iv == ic || iv == in) continue;
      const Vec2& p = ring[iv];
      if (p == a || p == b || p == c) continue;
      if (cross2(a, b, p) >= 0 && cross2(b, c, p) >= 0 && cross2(c, a, p) >= 0) return false;
    }
    return true;
  };

  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    int ear = -1;
    for (int pos = 0; pos < m && ear < 0; ++pos) {
      if (is_ear(pos, false)) ear = pos;
    }
    // Only collinear vertices left as candidates: clip a flat ear.
    for (int pos = 0; pos < m && ear < 0; ++pos) {
      if (is_ear(pos, true)) ear = pos;
    }
    if (ear < 0) ear = 0;
    tris.push_back({idx[(ear + m - 1) % m], idx[ear], idx[(ear + 1) % m]});
    idx.erase(idx.begin() + ear);
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

namespace {

class MeshBuilder {
 public:
  std::uint32_t vertex(const Vec3& p) {
    mesh_.vertices.push_back(p);
    return static_cast<std::uint32_t>(mesh_.vertices.size() - 1);
  }

  void triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c, const GisPolygon& poly,
                bool walkable) {
    const Vec3& p0 = mesh_.vertices[a];
    const Vec3& p1 = mesh_.vertices[b];
    const Vec3& p2 = mesh_.vertices[c];
    if (0.5 * (p1 - p0).cross(p2 - p0).norm() <= 1e-12) return;
    mesh_.triangles.push_back({{a, b, c}, poly.label, poly.id, walkable});
  }

  LabeledMesh take() { return std::move(mesh_); }

 private:
  LabeledMesh mesh_;
};

// Horizontal or planar cap over the footprint; CCW seen from +z.
void add_cap(MeshBuilder& mb, const GisPolygon& poly, const std::vector<std::array<int, 3>>& tris,
             const std::function<double(const Vec2&)>& height, bool walkable) {
  std::vector<std::uint32_t> ids;
  ids.reserve(poly.ring.size());
  for (const auto& p : poly.ring) ids.push_back(mb.vertex(Vec3(p.x(), p.y(), height(p))));
  for (const auto& t : tris) mb.triangle(ids[t[0]], ids[t[1]], ids[t[2]], poly, walkable);
}

// Vertical walls between z_lo and z_hi along the ring; outward normals unless
// inward is set (pits are seen from inside).
void add_walls(MeshBuilder& mb, const GisPolygon& poly, double z_lo, double z_hi, bool inward) {
  const std::size_t n = poly.ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly.ring[i];
    const Vec2& b = poly.ring[(i + 1) % n];
    const auto a0 = mb.vertex(Vec3(a.x(), a.y(), z_lo));
    const auto b0 = mb.vertex(Vec3(b.x(), b.y(), z_lo));
    const auto b1 = mb.vertex(Vec3(b.x(), b.y(), z_hi));
    const auto a1 = mb.vertex(Vec3(a.x(), a.y(), z_hi));
    if (inward) {
      mb.triangle(a0, b1, b0, poly, false);
      mb.triangle(a0, a1, b1, poly, false);
    } else {
      mb.triangle(a0, b0, b1, poly, false);
      mb.triangle(a0, b1, a1, poly, false);
    }
  }
}

}  // namespace

LabeledMesh lift(const GisMap& map, const LiftSpec& spec) {
  validate_liftspec(spec, map);
  std::map<std::string, const LiftOp*> ops;
  for (const auto& op : spec.ops) ops[op.polygon_id] = &op;

  const double g = spec.ground_elevation;
  MeshBuilder mb;
  for (const auto& poly : map.polygons) {
    const auto tris = triangulate_polygon(poly);
    const auto it = ops.find(poly.id);
    const auto flat = [](double z) { return [z](const Vec2&) { return z; }; };
    if (it == ops.end()) {
      add_cap(mb, poly, tris, flat(g), poly.walkable);
      continue;
    }
    const auto& op = it->second->op;
    if (const auto* e = std::get_if<ExtrudeOp>(&op)) {
      add_cap(mb, poly, tris, flat(g), poly.walkable);
      add_cap(mb, poly, tris, flat(g + e->height), poly.walkable);
      add_walls(mb, poly, g, g + e->height, false);
    } else if (const auto* c = std::get_if<CarveOp>(&op)) {
      add_cap(mb, poly, tris, flat(g - c->depth), poly.walkable);
      add_walls(mb, poly, g - c->depth, g, true);
    } else {
      const auto plane = *plane_through(std::get<TiltOp>(op).anchors);
      add_cap(mb, poly, tris,
              [plane](const Vec2& p) { return plane[0] * p.x() + plane[1] * p.y() + plane[2]; },
              poly.walkable);
    }
  }
  return mb.take();
}

}  // namespace geolift
