#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "geolift/alignment.hpp"
#include "geolift/random.hpp"
#include "geolift/synth.hpp"

namespace geolift {
namespace {

Vec2 apply_sim(double s, double th, const Vec2& t, const Vec2& p) {
  return s * Vec2(std::cos(th) * p.x() - std::sin(th) * p.y(), std::sin(th) * p.x() + std::cos(th) * p.y()) + t;
}

TEST(Procrustes, IdentityWhenEqual) {
  const std::vector<Vec2> pts{Vec2(0, 0), Vec2(3, 1), Vec2(-1, 4), Vec2(2, 2)};
  const auto r = procrustes2d(pts, pts);
  EXPECT_NEAR(r.transform.s, 1.0, 1e-12);
  EXPECT_NEAR(r.transform.theta, 0.0, 1e-12);
  EXPECT_NEAR(r.transform.t.norm(), 0.0, 1e-12);
  EXPECT_NEAR(r.rms, 0.0, 1e-12);
}

TEST(Procrustes, ScaleTwoRotate90) {
  const std::vector<Vec2> src{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  std::vector<Vec2> dst;
  for (const auto& p : src) dst.push_back(apply_sim(2.0, M_PI / 2, Vec2(1, 2), p));
  const auto r = procrustes2d(src, dst);
  EXPECT_NEAR(r.transform.s, 2.0, 1e-9);
  EXPECT_NEAR(r.transform.theta, M_PI / 2, 1e-9);
  EXPECT_NEAR(r.transform.t.x(), 1.0, 1e-9);
  EXPECT_NEAR(r.transform.t.y(), 2.0, 1e-9);
}

TEST(Procrustes, NoisyFitBeatsGrid) {
  Rng rng(17);
  std::vector<Vec2> src, dst;
  const double s0 = 1.7, th0 = 0.4;
  const Vec2 t0(3, -2);
  for (int i = 0; i < 12; ++i) {
    src.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5));
    dst.push_back(apply_sim(s0, th0, t0, src.back()) + Vec2(rng.normal(0, 0.01), rng.normal(0, 0.01)));
  }
  const auto r = procrustes2d(src, dst);
  const double best = similarity_cost(r.transform, src, dst);
  double grid_min = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 20; ++a) {
    for (int b = 0; b < 20; ++b) {
      for (int c = 0; c < 20; ++c) {
        for (int d = 0; d < 20; ++d) {
          Similarity2D g;
          g.s = s0 + (a - 9.5) * 0.002;
          g.theta = th0 + (b - 9.5) * 0.002;
          g.t = t0 + Vec2((c - 9.5) * 0.005, (d - 9.5) * 0.005);
          grid_min = std::min(grid_min, similarity_cost(g, src, dst));
        }
      }
    }
  }
  EXPECT_LE(best, grid_min);
  EXPECT_NEAR(r.rms, std::sqrt(best / src.size()), 1e-12);
}

TEST(Procrustes, Errors) {
  const std::vector<Vec2> two{Vec2(0, 0), Vec2(1, 1)};
  EXPECT_THROW(procrustes2d(two, two), ValidationError);
  const std::vector<Vec2> same{Vec2(1, 1), Vec2(1, 1), Vec2(1, 1)};
  EXPECT_THROW(procrustes2d(same, same), ValidationError);
  const std::vector<Vec2> three{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  EXPECT_THROW(procrustes2d(three, two), ValidationError);
}

TEST(Procrustes, PairsJsonRoundTrip) {
  PointPairs pp;
  pp.src = {Vec2(0, 0), Vec2(1, 0.5), Vec2(0.25, 1)};
  pp.dst = {Vec2(1, 1), Vec2(2, 0.5), Vec2(0.125, 3)};
  const PointPairs back = parse_pairs(pairs_to_json(pp));
  ASSERT_EQ(back.src.size(), 3u);
  EXPECT_EQ(back.dst[2], pp.dst[2]);
  EXPECT_THROW(parse_pairs(R"({"src":[[0,0]],"dst":[]})"), ValidationError);
}

TEST(ClosestPoint, OnTriangleIsZero) {
  const LabeledMesh m = fixture::floor_mesh(1.0);
  const auto c = closest_point_on_mesh(Vec3(0.3, -0.2, 0), m);
  EXPECT_NEAR(c.distance, 0, 1e-15);
}

TEST(ClosestPoint, AboveFloor) {
  const LabeledMesh m = fixture::floor_mesh(1.0);
  const auto c = closest_point_on_mesh(Vec3(0, 0, 1), m);
  EXPECT_NEAR(c.distance, 1.0, 1e-15);
  EXPECT_NEAR((c.point - Vec3(0, 0, 0)).norm(), 0, 1e-15);
  const Bvh bvh = build_bvh(m);
  const auto b = closest_point_on_mesh(Vec3(0, 0, 1), bvh);
  EXPECT_EQ(b.tri_index, c.tri_index);
}

TEST(ClosestPoint, EmptyMeshRejected) {
  EXPECT_THROW(closest_point_on_mesh(Vec3(0, 0, 0), LabeledMesh{}), ValidationError);
}

// Independent reference: the minimum over the face interior projection,
// the three edges and the three vertices.
double brute_distance(const Vec3& p, const LabeledMesh& m) {
  double best = std::numeric_limits<double>::infinity();
  auto seg = [&](const Vec3& a, const Vec3& b) {
    const double t = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
    return (a + t * (b - a) - p).norm();
  };
  for (const auto& t : m.triangles) {
    const Vec3 a = m.vertices[t.v[0]], b = m.vertices[t.v[1]], c = m.vertices[t.v[2]];
    const Vec3 n = (b - a).cross(c - a).normalized();
    const Vec3 q = p - n * n.dot(p - a);
    const double d0 = (b - a).cross(q - a).dot(n), d1 = (c - b).cross(q - b).dot(n), d2 = (a - c).cross(q - c).dot(n);
    if (d0 >= 0 && d1 >= 0 && d2 >= 0) best = std::min(best, std::abs(n.dot(p - a)));
    best = std::min({best, seg(a, b), seg(b, c), seg(c, a)});
  }
  return best;
}

TEST(ClosestPoint, MatchesBruteForceOnScene) {
  SceneSpec spec;
  spec.seed = 5;
  const Scene scene = make_scene(spec);
  const Bvh bvh = build_bvh(scene.mesh);
  Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 p(rng.uniform(-5, 53), rng.uniform(-5, 53), rng.uniform(-3, 20));
    const auto exhaustive = closest_point_on_mesh(p, scene.mesh);
    const auto fast = closest_point_on_mesh(p, bvh);
    const double ref = brute_distance(p, scene.mesh);
    ASSERT_NEAR(exhaustive.distance, ref, 1e-9);
    ASSERT_NEAR(fast.distance, ref, 1e-9);
    EXPECT_NEAR((exhaustive.point - p).norm(), exhaustive.distance, 1e-9);
    EXPECT_NEAR(brute_distance(exhaustive.point, scene.mesh), 0.0, 1e-9);
  }
}

TEST(FitRigid, RecoversTransform) {
  Rng rng(2);
  const Mat3 R = fixture::random_rotation(rng);
  const Vec3 t(4, -1, 2);
  std::vector<Vec3> src, dst;
  for (int i = 0; i < 10; ++i) {
    src.emplace_back(rng.normal(), rng.normal(), rng.normal());
    dst.push_back(R * src.back() + t);
  }
  const auto T = fit_rigid(src, dst);
  EXPECT_LT((T.R - R).norm(), 1e-12);
  EXPECT_LT((T.t - t).norm(), 1e-12);
  EXPECT_NEAR(T.R.determinant(), 1.0, 1e-12);
}

struct IcpCase {
  LabeledMesh mesh;
  Bvh bvh;
  std::vector<Vec3> cloud;
};

IcpCase icp_case(std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  IcpCase c;
  c.mesh = make_scene(spec).mesh;
  c.bvh = build_bvh(c.mesh);
  c.cloud = sample_surface_points(c.mesh, 2000, seed);
  return c;
}

void expect_monotone(const std::vector<double>& rms) {
  for (std::size_t i = 1; i < rms.size(); ++i) EXPECT_LE(rms[i], rms[i - 1]);
}

TEST(Icp, FixedPointAtIdentity) {
  const IcpCase c = icp_case(1);
  const auto r = icp_refine(c.cloud, c.mesh, c.bvh, RigidTransform3D{});
  EXPECT_LT((r.transform.R - Mat3::Identity()).norm(), 1e-9);
  EXPECT_LT(r.transform.t.norm(), 1e-9);
  EXPECT_LT(r.rms.back(), 1e-9);
}

TEST(Icp, RecoversFiveDegreeHalfMeterPerturbation) {
  const IcpCase c = icp_case(2);
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : c.cloud) centroid += p;
  centroid /= static_cast<double>(c.cloud.size());
  RigidTransform3D P;
  P.R = axis_angle(Vec3(0.3, -0.5, 1.0).normalized(), 5.0 * M_PI / 180);
  P.t = centroid - P.R * centroid + Vec3(0.3, -0.3, 0.2).normalized() * 0.5;
  std::vector<Vec3> moved;
  for (const auto& p : c.cloud) moved.push_back(P.apply(p));
  const auto r = icp_refine(moved, c.mesh, c.bvh, RigidTransform3D{});
  expect_monotone(r.rms);
  EXPECT_LE(r.iterations, 50);
  EXPECT_LT(r.rms.back(), 1e-3);
  const RigidTransform3D back = r.transform * P;
  double err = 0;
  for (const auto& p : c.cloud) err += (back.apply(p) - p).squaredNorm();
  EXPECT_LT(std::sqrt(err / c.cloud.size()), 1e-3);
}

TEST(Icp, FarCloudStaysMonotone) {
  const IcpCase c = icp_case(3);
  std::vector<Vec3> far;
  for (const auto& p : c.cloud) far.push_back(p + Vec3(1000, 0, 0));
  const auto r = icp_refine(far, c.mesh, c.bvh, RigidTransform3D{});
  ASSERT_FALSE(r.rms.empty());
  expect_monotone(r.rms);
}

TEST(Icp, DegenerateCloudReturnsInit) {
  const IcpCase c = icp_case(1);
  std::vector<Vec3> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(i, 5, 0.5);
  Diagnostics diag;
  RigidTransform3D init;
  init.t = Vec3(0.1, 0, 0);
  const auto r = icp_refine(line, c.mesh, c.bvh, init, {}, &diag);
  EXPECT_FALSE(diag.empty());
  EXPECT_EQ(r.transform.t, init.t);
}

TEST(Icp, TrimmedRunIsMonotone) {
  const IcpCase c = icp_case(4);
  std::vector<Vec3> moved;
  RigidTransform3D P;
  P.t = Vec3(0.2, 0.1, 0);
  for (const auto& p : c.cloud) moved.push_back(P.apply(p));
  for (int i = 0; i < 100; ++i) moved.push_back(Vec3(10 + i, 10, 30));
  IcpOptions opt;
  opt.trim_fraction = 0.1;
  const auto r = icp_refine(moved, c.mesh, c.bvh, RigidTransform3D{}, opt);
  expect_monotone(r.rms);
}

TEST(Icp, ThreadCountDoesNotChangeResult) {
  const IcpCase c = icp_case(5);
  std::vector<Vec3> moved;
  RigidTransform3D P;
  P.R = axis_angle(Vec3::UnitZ(), 0.03);
  for (const auto& p : c.cloud) moved.push_back(P.apply(p));
  IcpOptions one, four;
  one.threads = 1;
  four.threads = 4;
  const auto a = icp_refine(moved, c.mesh, c.bvh, RigidTransform3D{}, one);
  const auto b = icp_refine(moved, c.mesh, c.bvh, RigidTransform3D{}, four);
  EXPECT_EQ(a.rms, b.rms);
  EXPECT_EQ(a.transform.R, b.transform.R);
}

}  // namespace
}  // namespace geolift
