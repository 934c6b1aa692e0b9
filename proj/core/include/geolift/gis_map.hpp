#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geolift/error.hpp"
#include "geolift/geometry.hpp"
#include "geolift/labels.hpp"

namespace geolift {

struct GisPolygon {
  std::string id;
  // CCW, first vertex not repeated at the end.
  std::vector<Vec2> ring;
  SemanticLabel label = SemanticLabel::kUnknown;
  bool walkable = false;
};

struct GisMap {
  std::vector<GisPolygon> polygons;

  const GisPolygon* find(std::string_view id) const;
};

struct ExtrudeOp {
  double height = 0.0;
};
struct CarveOp {
  double depth = 0.0;
};
struct TiltOp {
  std::array<Vec3, 3> anchors;
};

struct LiftOp {
  std::string polygon_id;
  std::variant<ExtrudeOp, CarveOp, TiltOp> op;
};

struct LiftSpec {
  double ground_elevation = 0.0;
  std::vector<LiftOp> ops;
};

struct MeshTriangle {
  std::array<std::uint32_t, 3> v{};
  SemanticLabel label = SemanticLabel::kUnknown;
  std::string polygon_id;
  bool walkable = false;
};

struct LabeledMesh {
  std::vector<Vec3> vertices;
  std::vector<MeshTriangle> triangles;

  std::size_t size() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }
  Triangle triangle(std::size_t i) const;
  Vec3 normal(std::size_t i) const;
  double area(std::size_t i) const;
  // Indices in range and no degenerate triangles; throws ValidationError.
  void validate() const;
};

// Twice the signed area; positive for CCW rings.
double signed_area(const std::vector<Vec2>& ring);
bool ring_is_simple(const std::vector<Vec2>& ring);
bool point_in_ring(const Vec2& p, const std::vector<Vec2>& ring);

// map.json. CW rings are reversed and reported through diag.
GisMap parse_map(std::string_view text, Diagnostics* diag = nullptr);
std::string map_to_json(const GisMap& map);
// Checks the GisMap invariants; throws ValidationError.
void validate_map(GisMap& map, Diagnostics* diag = nullptr);

// lift.json, validated against map.
LiftSpec parse_liftspec(std::string_view text, const GisMap& map);
std::string liftspec_to_json(const LiftSpec& spec);
void validate_liftspec(const LiftSpec& spec, const GisMap& map);

// Ear clipping of a simple CCW polygon: exactly n - 2 index triples, each
// wound CCW. Throws ValidationError on a zero-area ring.
std::vector<std::array<int, 3>> triangulate_polygon(const GisPolygon& poly);

LabeledMesh lift(const GisMap& map, const LiftSpec& spec);

// mesh.json
std::string mesh_to_json(const LabeledMesh& mesh);
LabeledMesh parse_mesh(std::string_view text);
// Wavefront OBJ with one material per semantic label.
std::string mesh_to_obj(const LabeledMesh& mesh);

}  // namespace geolift
