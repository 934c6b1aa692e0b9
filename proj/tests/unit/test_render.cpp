#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

#include "fixtures.hpp"
#include "geolift/render.hpp"
#include "geolift/synth.hpp"
#include "oracles.hpp"

namespace geolift {
namespace {

LabeledMesh big_scene(std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  spec.extent = 140;
  spec.tile = 2;
  spec.buildings = 400;
  return make_scene(spec).mesh;
}

void check_structure(const Bvh& bvh, std::size_t triangles) {
  std::vector<int> seen(triangles, 0);
  std::function<void(int)> walk = [&](int i) {
    const BvhNode& n = bvh.nodes()[i];
    if (n.is_leaf()) {
      EXPECT_LE(n.count, Bvh::kMaxLeafSize);
      for (int s = n.first; s < n.first + n.count; ++s) ++seen[bvh.order()[s]];
      return;
    }
    ASSERT_GE(n.left, 0);
    ASSERT_GE(n.right, 0);
    EXPECT_TRUE(n.box.contains(bvh.nodes()[n.left].box, 1e-9));
    EXPECT_TRUE(n.box.contains(bvh.nodes()[n.right].box, 1e-9));
    walk(n.left);
    walk(n.right);
  };
  walk(0);
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Bvh, SingleTriangleIsOneLeaf) {
  LabeledMesh m = fixture::floor_mesh(1);
  m.triangles.pop_back();
  const Bvh bvh = build_bvh(m);
  ASSERT_EQ(bvh.nodes().size(), 1u);
  EXPECT_TRUE(bvh.nodes()[0].is_leaf());
}

TEST(Bvh, DisjointClustersSplitAtRoot) {
  // Two triangles fit one leaf, so each cluster holds more than a leaf.
  LabeledMesh low = fixture::floor_mesh(1);
  LabeledMesh high = fixture::floor_mesh(1, 10);
  LabeledMesh m = fixture::merge(fixture::merge(low, low), fixture::merge(high, high));
  const Bvh bvh = build_bvh(m);
  check_structure(bvh, m.size());
  const BvhNode& root = bvh.nodes()[0];
  ASSERT_FALSE(root.is_leaf());
  const Aabb& l = bvh.nodes()[root.left].box;
  const Aabb& r = bvh.nodes()[root.right].box;
  EXPECT_TRUE(l.max.z() < r.min.z() || r.max.z() < l.min.z());
  EXPECT_TRUE(bvh.nodes()[root.left].is_leaf());
  EXPECT_TRUE(bvh.nodes()[root.right].is_leaf());
}

TEST(Bvh, EmptyMeshRejected) { EXPECT_THROW(build_bvh(LabeledMesh{}), ValidationError); }

TEST(Bvh, LargeSceneEveryTriangleOnce) {
  const LabeledMesh m = big_scene(1);
  EXPECT_GE(m.size(), 10000u);
  check_structure(build_bvh(m), m.size());
}

TEST(Raycast, DownOntoFloor) {
  const LabeledMesh m = fixture::floor_mesh(5, 0, SemanticLabel::kPlants);
  const Bvh bvh = build_bvh(m);
  const auto hit = raycast(bvh, m, Ray(Vec3(0.3, 0.2, 10), Vec3(0, 0, -1)));
  ASSERT_TRUE(hit);
  EXPECT_DOUBLE_EQ(hit->t, 10.0);
  EXPECT_EQ(hit->label, SemanticLabel::kPlants);
}

TEST(Raycast, EscapingRayMisses) {
  const LabeledMesh m = fixture::floor_mesh(5);
  const Bvh bvh = build_bvh(m);
  EXPECT_FALSE(raycast(bvh, m, Ray(Vec3(0, 0, 10), Vec3(0, 0.1, 1))));
  EXPECT_TRUE(raycast_all(bvh, m, Ray(Vec3(0, 0, 10), Vec3(0, 0.1, 1))).empty());
}

TEST(RaycastAll, StackedFloorsInDepthOrder) {
  const LabeledMesh m = fixture::merge(fixture::floor_mesh(5, 0), fixture::floor_mesh(5, 3, SemanticLabel::kBuilding));
  const Bvh bvh = build_bvh(m);
  const auto hits = raycast_all(bvh, m, Ray(Vec3(0.1, 0.2, 10), Vec3(0, 0, -1)));
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_DOUBLE_EQ(hits[0].t, 7.0);
  EXPECT_DOUBLE_EQ(hits[1].t, 10.0);
  EXPECT_EQ(hits[0].label, SemanticLabel::kBuilding);
}

TEST(Raycast, MatchesBruteForceOnLargeScene) {
  const LabeledMesh m = big_scene(2);
  const Bvh bvh = build_bvh(m);
  Rng rng(7);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 o(rng.uniform(-10, 150), rng.uniform(-10, 150), rng.uniform(0.5, 30));
    const Ray ray(o, Vec3(rng.normal(), rng.normal(), rng.normal() - 0.5));
    const auto fast = raycast(bvh, m, ray);
    const auto slow = raycast_brute_force(m, ray);
    ASSERT_EQ(fast.has_value(), slow.has_value());
    if (!fast) continue;
    ++hits;
    EXPECT_EQ(fast->tri_index, slow->tri_index);
    EXPECT_NEAR(fast->t, slow->t, 1e-9);
    EXPECT_LT((fast->point - ray.point_at(fast->t)).norm(), 1e-9);
  }
  EXPECT_GT(hits, 5000);
}

TEST(RaycastAll, MatchesIndependentEnumeration) {
  SceneSpec spec;
  spec.seed = 3;
  const LabeledMesh m = make_scene(spec).mesh;
  const Bvh bvh = build_bvh(m);
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 o(rng.uniform(-5, 53), rng.uniform(-5, 53), rng.uniform(0.5, 25));
    const Ray ray(o, Vec3(rng.normal(), rng.normal(), rng.normal()));
    const auto mine = raycast_all(bvh, m, ray);
    const auto ref = oracle::all_hits(m, ray.origin, ray.dir);
    std::multiset<int> a, b;
    for (const auto& h : mine) a.insert(h.tri_index);
    for (const auto& h : ref) b.insert(h.tri);
    ASSERT_EQ(a, b);
    for (std::size_t k = 1; k < mine.size(); ++k) EXPECT_LE(mine[k - 1].t, mine[k].t);
    const auto first = raycast(bvh, m, ray);
    if (!mine.empty()) {
      ASSERT_TRUE(first);
      EXPECT_EQ(first->tri_index, mine[0].tri_index);
    }
  }
}

TEST(DiscretizeNormal, Bins) {
  EXPECT_EQ(discretize_normal(Vec3(0, 0, 1)), NormalBin::kGround);
  EXPECT_EQ(discretize_normal(Vec3(1, 0, 0)), NormalBin::kWall);
  EXPECT_EQ(discretize_normal(Vec3(0.6, 0, 0.8)), NormalBin::kGround);
  EXPECT_EQ(discretize_normal(Vec3(0, 0, -1)), NormalBin::kCeiling);
  EXPECT_EQ(discretize_normal(Vec3(0.8, 0, 0.6)), NormalBin::kNone);
  EXPECT_THROW(discretize_normal(Vec3(0, 0, 2)), ValidationError);
}

TEST(RenderContext, NadirOverFloor) {
  const LabeledMesh m = fixture::floor_mesh(1e4, 0, SemanticLabel::kPavement);
  const Bvh bvh = build_bvh(m);
  const Intrinsics k{100, 32, 24, 64, 48};
  const ContextMaps maps = render_context(fixture::nadir_camera(k, 10), bvh, m);
  const Camera cam = fixture::nadir_camera(k, 10);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 64; ++x) {
      EXPECT_NEAR(maps.zdepth(x, y), 10.0, 1e-9);
      const Ray r = cast_ray(cam, pixel_center(x, y));
      EXPECT_NEAR(maps.depth(x, y), 10.0 / -r.dir.z(), 1e-9);
      EXPECT_EQ(maps.labels(x, y), code(SemanticLabel::kPavement));
      EXPECT_EQ(maps.normals(x, y), code(NormalBin::kGround));
    }
  }
}

TEST(RenderContext, OpenSky) {
  const LabeledMesh m = fixture::floor_mesh(10);
  const Bvh bvh = build_bvh(m);
  const Intrinsics k{100, 32, 24, 64, 48};
  const Camera cam = fixture::make_camera(k, fixture::look(0, -M_PI / 3), Vec3(0, 0, 5));
  const ContextMaps maps = render_context(cam, bvh, m);
  for (std::size_t i = 0; i < maps.depth.data.size(); ++i) {
    EXPECT_TRUE(std::isinf(maps.depth.data[i]));
    EXPECT_EQ(maps.labels.data[i], code(SemanticLabel::kSky));
    EXPECT_EQ(maps.normals.data[i], code(NormalBin::kNone));
  }
}

TEST(RenderContext, CourtyardMatchesBruteForce) {
  SceneSpec spec;
  spec.seed = 9;
  const Scene scene = make_scene(spec);
  const Bvh bvh = build_bvh(scene.mesh);
  const Camera cam = sample_plausible_camera(scene.mesh, bvh, 9);
  const ContextMaps maps = render_context(cam, bvh, scene.mesh);
  const DepthRaster brute = brute_force_depth(cam, scene.mesh);
  int hits = 0;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const double d = maps.depth(x, y);
      ASSERT_EQ(std::isinf(d), std::isinf(brute(x, y)));
      if (std::isinf(d)) {
        EXPECT_EQ(maps.labels(x, y), code(SemanticLabel::kSky));
        continue;
      }
      ++hits;
      EXPECT_NEAR(d, brute(x, y), 1e-9);
      EXPECT_NE(maps.labels(x, y), code(SemanticLabel::kSky));
      const Ray r = cast_ray(cam, pixel_center(x, y));
      EXPECT_NEAR((r.point_at(d) - cam.center()).norm(), d, 1e-6);
      EXPECT_NEAR(maps.zdepth(x, y), d * r.dir.dot(cam.optical_axis()), 1e-9);
      if (y % 8 == 0 && x % 8 == 0) {
        const auto ref = oracle::nearest_hit(scene.mesh, r.origin, r.dir);
        ASSERT_TRUE(ref);
        EXPECT_NEAR(ref->t, d, 1e-9);
      }
    }
  }
  EXPECT_GT(hits, cam.width * cam.height / 2);
}

TEST(RenderContext, IndependentOfThreadCount) {
  SceneSpec spec;
  spec.seed = 4;
  const Scene scene = make_scene(spec);
  const Bvh bvh = build_bvh(scene.mesh);
  const Camera cam = sample_plausible_camera(scene.mesh, bvh, 4);
  const ContextMaps a = render_context(cam, bvh, scene.mesh, 1);
  const ContextMaps b = render_context(cam, bvh, scene.mesh, 3);
  EXPECT_EQ(encode_pfm(a.depth), encode_pfm(b.depth));
  EXPECT_EQ(encode_pfm(a.zdepth), encode_pfm(b.zdepth));
  EXPECT_EQ(encode_pgm(a.labels), encode_pgm(b.labels));
  EXPECT_EQ(encode_pgm(a.normals), encode_pgm(b.normals));
}

TEST(Raster, PfmRoundTripKeepsInfinity) {
  DepthRaster r(3, 2, 1.5);
  r(1, 0) = std::numeric_limits<double>::infinity();
  r(2, 1) = 0.25;
  const DepthRaster back = decode_pfm(encode_pfm(r));
  EXPECT_EQ(back.width, 3);
  EXPECT_TRUE(std::isinf(back(1, 0)));
  EXPECT_EQ(back(2, 1), 0.25);
  EXPECT_EQ(back(0, 0), 1.5);
  EXPECT_EQ(encode_pfm(r).substr(0, 3), "Pf\n");
}

TEST(Raster, PgmAndFeatureStackRoundTrip) {
  CodeRaster c(4, 3, 2);
  c(3, 2) = 255;
  const CodeRaster cb = decode_pgm(encode_pgm(c));
  EXPECT_EQ(cb.data, c.data);
  FeatureStack s(2, 2, {"a", "b"});
  for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] = 0.5f * static_cast<float>(i);
  const FeatureStack sb = decode_feature_stack(encode_feature_stack(s));
  EXPECT_EQ(sb.names, s.names);
  EXPECT_EQ(sb.data, s.data);
  EXPECT_THROW(decode_pgm("P2\n1 1\n255\n0"), ValidationError);
  EXPECT_THROW(decode_feature_stack("GLFEAT1\n{}\n"), ValidationError);
}

}  // namespace
}  // namespace geolift
