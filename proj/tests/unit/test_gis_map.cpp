#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "geolift/gis_map.hpp"
#include "geolift/render.hpp"

namespace geolift {
namespace {

double shoelace(const std::vector<Vec2>& ring) {
  double a = 0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec2& p = ring[i];
    const Vec2& q = ring[(i + 1) % ring.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double tri_area(const std::vector<Vec2>& ring, const std::array<int, 3>& t) {
  const Vec2 a = ring[t[0]], b = ring[t[1]], c = ring[t[2]];
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

double mesh_area(const LabeledMesh& m) {
  double a = 0;
  for (std::size_t i = 0; i < m.size(); ++i) a += m.area(i);
  return a;
}

const char* kUnitSquare = R"({"crs":"local-meters","polygons":[
  {"id":"P","label":"pavement","walkable":true,"ring":[[0,0],[1,0],[1,1],[0,1]]}]})";

TEST(ParseMap, UnitSquare) {
  const GisMap m = parse_map(kUnitSquare);
  ASSERT_EQ(m.polygons.size(), 1u);
  EXPECT_EQ(m.polygons[0].label, SemanticLabel::kPavement);
  EXPECT_TRUE(m.polygons[0].walkable);
  EXPECT_DOUBLE_EQ(signed_area(m.polygons[0].ring) / 2.0, 1.0);
}

TEST(ParseMap, ClockwiseRingIsReversedWithWarning) {
  Diagnostics diag;
  const GisMap m = parse_map(R"({"polygons":[
    {"id":"P","label":"plants","walkable":false,"ring":[[0,0],[0,1],[1,1],[1,0]]}]})",
                             &diag);
  EXPECT_GT(signed_area(m.polygons[0].ring), 0);
  EXPECT_FALSE(diag.empty());
}

TEST(ParseMap, BowTieRejected) {
  EXPECT_THROW(parse_map(R"({"polygons":[
    {"id":"P","label":"plants","walkable":false,"ring":[[0,0],[1,1],[1,0],[0,1]]}]})"),
               ValidationError);
}

TEST(ParseMap, DuplicateIdUnknownLabelAndBadJson) {
  EXPECT_THROW(parse_map(R"({"polygons":[
    {"id":"P","label":"plants","walkable":false,"ring":[[0,0],[1,0],[0,1]]},
    {"id":"P","label":"plants","walkable":false,"ring":[[5,5],[6,5],[5,6]]}]})"),
               ValidationError);
  EXPECT_THROW(parse_map(R"({"polygons":[
    {"id":"P","label":"lava","walkable":false,"ring":[[0,0],[1,0],[0,1]]}]})"),
               ValidationError);
  EXPECT_THROW(parse_map("{"), ValidationError);
  EXPECT_THROW(parse_map(R"({"polygons":[]})"), ValidationError);
}

TEST(ParseMap, NestedRingRejected) {
  EXPECT_THROW(parse_map(R"({"polygons":[
    {"id":"A","label":"plants","walkable":false,"ring":[[0,0],[10,0],[10,10],[0,10]]},
    {"id":"B","label":"building","walkable":false,"ring":[[2,2],[4,2],[4,4],[2,4]]}]})"),
               ValidationError);
}

TEST(ParseMap, JsonRoundTrip) {
  const GisMap m = parse_map(kUnitSquare);
  EXPECT_EQ(map_to_json(parse_map(map_to_json(m))), map_to_json(m));
}

GisMap b1_map() {
  GisMap m;
  m.polygons.push_back(fixture::rect("B1", 0, 0, 1, 1, SemanticLabel::kBuilding, false));
  return m;
}

TEST(ParseLiftSpec, SingleExtrude) {
  const LiftSpec s = parse_liftspec(R"({"ops":[{"polygon":"B1","op":"extrude","height":12.0}]})", b1_map());
  ASSERT_EQ(s.ops.size(), 1u);
  EXPECT_EQ(s.ops[0].polygon_id, "B1");
  EXPECT_DOUBLE_EQ(std::get<ExtrudeOp>(s.ops[0].op).height, 12.0);
  EXPECT_DOUBLE_EQ(s.ground_elevation, 0.0);
}

TEST(ParseLiftSpec, Errors) {
  const GisMap m = b1_map();
  EXPECT_THROW(parse_liftspec(R"({"ops":[{"polygon":"B1","op":"extrude","height":-3}]})", m), ValidationError);
  EXPECT_THROW(parse_liftspec(R"({"ops":[{"polygon":"B1","op":"carve","depth":0}]})", m), ValidationError);
  EXPECT_THROW(parse_liftspec(R"({"ops":[{"polygon":"ZZ","op":"extrude","height":3}]})", m), ValidationError);
  EXPECT_THROW(parse_liftspec(R"({"ops":[{"polygon":"B1","op":"tilt","anchors":[[0,0,0],[1,1,0],[2,2,1]]}]})", m),
               ValidationError);
  EXPECT_THROW(parse_liftspec(R"({"ops":[{"polygon":"B1","op":"twist"}]})", m), ValidationError);
}

TEST(ParseLiftSpec, JsonRoundTrip) {
  const GisMap m = b1_map();
  const LiftSpec s = parse_liftspec(
      R"({"ground_elevation":2.5,"ops":[{"polygon":"B1","op":"tilt","anchors":[[0,0,0],[1,0,0],[0,1,1]]}]})", m);
  EXPECT_EQ(liftspec_to_json(parse_liftspec(liftspec_to_json(s), m)), liftspec_to_json(s));
}

TEST(Triangulate, UnitSquare) {
  const GisPolygon p = fixture::rect("S", 0, 0, 1, 1, SemanticLabel::kPlants, false);
  const auto tris = triangulate_polygon(p);
  ASSERT_EQ(tris.size(), 2u);
  double a = 0;
  for (const auto& t : tris) a += tri_area(p.ring, t);
  EXPECT_NEAR(a, 1.0, 1e-12);
}

TEST(Triangulate, RegularHexagon) {
  GisPolygon p;
  p.id = "H";
  for (int i = 0; i < 6; ++i) p.ring.emplace_back(std::cos(i * M_PI / 3), std::sin(i * M_PI / 3));
  const auto tris = triangulate_polygon(p);
  ASSERT_EQ(tris.size(), 4u);
  double a = 0;
  for (const auto& t : tris) {
    EXPECT_GT(tri_area(p.ring, t), 0);
    a += tri_area(p.ring, t);
  }
  EXPECT_NEAR(a, 3 * std::sqrt(3.0) / 2, 1e-12);
}

TEST(Triangulate, LShapeMatchesShoelace) {
  GisPolygon p;
  p.id = "L";
  p.ring = {Vec2(0, 0), Vec2(2, 0), Vec2(2, 1), Vec2(1, 1), Vec2(1, 2), Vec2(0, 2)};
  const auto tris = triangulate_polygon(p);
  ASSERT_EQ(tris.size(), 4u);
  double a = 0;
  for (const auto& t : tris) {
    EXPECT_GT(tri_area(p.ring, t), 0);
    a += tri_area(p.ring, t);
  }
  EXPECT_NEAR(a, shoelace(p.ring), 1e-12 * shoelace(p.ring));
  EXPECT_NEAR(a, 3.0, 1e-12);
}

TEST(Triangulate, RandomStarPolygonsMatchShoelace) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    GisPolygon p;
    p.id = "S";
    const int n = 3 + static_cast<int>(rng.index(30));
    for (int i = 0; i < n; ++i) {
      const double r = rng.uniform(0.3, 2.0);
      const double th = 2 * M_PI * (i + rng.uniform(0.05, 0.95)) / n;
      p.ring.emplace_back(r * std::cos(th), r * std::sin(th));
    }
    const auto tris = triangulate_polygon(p);
    ASSERT_EQ(static_cast<int>(tris.size()), n - 2);
    double a = 0;
    for (const auto& t : tris) a += tri_area(p.ring, t);
    EXPECT_NEAR(a, shoelace(p.ring), 1e-9 * shoelace(p.ring));
  }
}

TEST(Triangulate, ZeroAreaRejected) {
  GisPolygon p;
  p.id = "Z";
  p.ring = {Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)};
  EXPECT_THROW(triangulate_polygon(p), ValidationError);
}

TEST(Lift, ExtrudedUnitSquare) {
  const GisMap m = b1_map();
  LiftSpec s;
  s.ops.push_back({"B1", ExtrudeOp{2.0}});
  const LabeledMesh mesh = lift(m, s);
  mesh.validate();
  double top = 0, walls = 0, floor = 0;
  int n_top = 0, n_wall = 0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const Vec3 n = mesh.normal(i);
    EXPECT_EQ(mesh.triangles[i].label, SemanticLabel::kBuilding);
    EXPECT_FALSE(mesh.triangles[i].walkable);
    const double z = mesh.vertices[mesh.triangles[i].v[0]].z();
    if (n.z() > 0.5 && z == 2.0) {
      top += mesh.area(i);
      ++n_top;
      for (auto v : mesh.triangles[i].v) EXPECT_DOUBLE_EQ(mesh.vertices[v].z(), 2.0);
    } else if (n.z() > 0.5) {
      floor += mesh.area(i);
      for (auto v : mesh.triangles[i].v) EXPECT_DOUBLE_EQ(mesh.vertices[v].z(), 0.0);
    } else {
      EXPECT_NEAR(n.z(), 0.0, 1e-15);
      walls += mesh.area(i);
      ++n_wall;
    }
  }
  EXPECT_EQ(n_top, 2);
  EXPECT_EQ(n_wall, 8);
  EXPECT_NEAR(top, 1.0, 1e-12);
  EXPECT_NEAR(walls, 8.0, 1e-12);
  EXPECT_NEAR(top + walls, 9.0, 1e-12);
  EXPECT_NEAR(floor, 1.0, 1e-12);
}

TEST(Lift, PrismSideEdgesSharedByTwoFaces) {
  GisMap m;
  GisPolygon p;
  p.id = "L";
  p.label = SemanticLabel::kBuilding;
  p.ring = {Vec2(0, 0), Vec2(2, 0), Vec2(2, 1), Vec2(1, 1), Vec2(1, 2), Vec2(0, 2)};
  m.polygons.push_back(p);
  LiftSpec s;
  s.ops.push_back({"L", ExtrudeOp{3.0}});
  const LabeledMesh mesh = lift(m, s);
  // Faces carry their own vertex copies, so match edges by position.
  using Key = std::array<double, 3>;
  auto key = [&](std::uint32_t i) {
    const Vec3& v = mesh.vertices[i];
    return Key{v.x(), v.y(), v.z()};
  };
  std::map<std::pair<Key, Key>, int> edges;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      Key a = key(t.v[k]), b = key(t.v[(k + 1) % 3]);
      if (b < a) std::swap(a, b);
      ++edges[{a, b}];
    }
  }
  for (const auto& [e, count] : edges) EXPECT_EQ(count, 2);
}

TEST(Lift, FlatFloorWithoutOps) {
  GisMap m;
  m.polygons.push_back(fixture::rect("F", 0, 0, 1, 1, SemanticLabel::kPavement, true));
  LiftSpec s;
  s.ground_elevation = 0.0;
  const LabeledMesh mesh = lift(m, s);
  ASSERT_EQ(mesh.size(), 2u);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    EXPECT_NEAR((mesh.normal(i) - Vec3(0, 0, 1)).norm(), 0, 1e-15);
    EXPECT_TRUE(mesh.triangles[i].walkable);
    EXPECT_EQ(mesh.triangles[i].polygon_id, "F");
    for (auto v : mesh.triangles[i].v) EXPECT_EQ(mesh.vertices[v].z(), 0.0);
  }
}

TEST(Lift, TiltThroughAnchors) {
  GisMap m;
  m.polygons.push_back(fixture::rect("R", 0, 0, 1, 1, SemanticLabel::kPavement, true));
  LiftSpec s;
  s.ops.push_back({"R", TiltOp{{Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 1)}}});
  const LabeledMesh mesh = lift(m, s);
  double zmax = -1;
  for (const auto& v : mesh.vertices) {
    zmax = std::max(zmax, v.z());
    EXPECT_NEAR(v.z(), v.x(), 1e-12);
  }
  EXPECT_DOUBLE_EQ(zmax, 1.0);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    EXPECT_NEAR(mesh.normal(i).z(), std::cos(M_PI / 4), 1e-12);
    EXPECT_TRUE(mesh.triangles[i].walkable);
  }
}

TEST(Lift, CarveSinksFloorAndKeepsWalkable) {
  GisMap m;
  m.polygons.push_back(fixture::rect("C", 0, 0, 2, 2, SemanticLabel::kPavement, true));
  LiftSpec s;
  s.ground_elevation = 1.0;
  s.ops.push_back({"C", CarveOp{0.5}});
  const LabeledMesh mesh = lift(m, s);
  bool sunken = false;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const Vec3 n = mesh.normal(i);
    if (n.z() > 0.5) {
      for (auto v : mesh.triangles[i].v) EXPECT_DOUBLE_EQ(mesh.vertices[v].z(), 0.5);
      EXPECT_TRUE(mesh.triangles[i].walkable);
      sunken = true;
    } else if (std::abs(n.z()) < 0.5) {
      EXPECT_FALSE(mesh.triangles[i].walkable);
    }
  }
  EXPECT_TRUE(sunken);
}

TEST(Lift, DownwardRayHitsTopFace) {
  GisMap m;
  m.polygons.push_back(fixture::rect("G", -10, -10, 10, 0, SemanticLabel::kPavement, true));
  m.polygons.push_back(fixture::rect("B", -3, 1, 3, 5, SemanticLabel::kBuilding, false));
  LiftSpec s;
  s.ground_elevation = 0.25;
  s.ops.push_back({"B", ExtrudeOp{7.0}});
  const LabeledMesh mesh = lift(m, s);
  const Bvh bvh = build_bvh(mesh);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vec3 o(rng.uniform(-2.9, 2.9), rng.uniform(1.1, 4.9), 50);
    const auto hit = raycast(bvh, mesh, Ray(o, Vec3(0, 0, -1)));
    ASSERT_TRUE(hit);
    EXPECT_NEAR(hit->point.z(), 7.25, 1e-12);
    EXPECT_EQ(mesh.triangles[hit->tri_index].polygon_id, "B");
  }
}

TEST(Lift, DeterministicSerialization) {
  const GisMap m = b1_map();
  LiftSpec s;
  s.ops.push_back({"B1", ExtrudeOp{2.0}});
  EXPECT_EQ(mesh_to_json(lift(m, s)), mesh_to_json(lift(m, s)));
  const LabeledMesh mesh = lift(m, s);
  EXPECT_EQ(mesh_to_json(parse_mesh(mesh_to_json(mesh))), mesh_to_json(mesh));
  EXPECT_NE(mesh_to_obj(mesh).find("usemtl building"), std::string::npos);
  EXPECT_NEAR(mesh_area(mesh), 10.0, 1e-12);
}

TEST(Mesh, ParseRejectsBadIndex) {
  EXPECT_THROW(parse_mesh(R"({"vertices":[[0,0,0],[1,0,0],[0,1,0]],
    "triangles":[{"v":[0,1,5],"label":"pavement","polygon_id":"x","walkable":true}]})"),
               ValidationError);
}

}  // namespace
}  // namespace geolift
