#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geolift/error.hpp"
#include "geolift/geometry.hpp"
#include "geolift/gis_map.hpp"
#include "geolift/render.hpp"

namespace geolift {

// p -> s * R(theta) * p + t
struct Similarity2D {
  double s = 1.0;
  double theta = 0.0;
  Vec2 t = Vec2::Zero();

  Vec2 apply(const Vec2& p) const;
};

struct RigidTransform3D {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return R * p + t; }
  RigidTransform3D inverse() const;
  RigidTransform3D operator*(const RigidTransform3D& rhs) const;
};

struct ProcrustesResult {
  Similarity2D transform;
  double rms = 0.0;
};

// Closed-form least-squares similarity mapping src onto dst.
// Throws ValidationError with fewer than 3 pairs, mismatched sizes, or
// coincident source points.
ProcrustesResult procrustes2d(std::span<const Vec2> src, std::span<const Vec2> dst);

// Sum of squared residuals of t applied to src against dst.
double similarity_cost(const Similarity2D& t, std::span<const Vec2> src,
                       std::span<const Vec2> dst);

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
  int tri_index = -1;
};

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Exhaustive over all triangles; ties resolve to the lower triangle index.
// Throws ValidationError on an empty mesh.
ClosestPoint closest_point_on_mesh(const Vec3& p, const LabeledMesh& mesh);
// Same result through BVH pruning.
ClosestPoint closest_point_on_mesh(const Vec3& p, const Bvh& bvh);

struct IcpOptions {
  int max_iters = 50;
  // Stop once an iteration improves the RMS by less than this (meters).
  double tol = 1e-6;
  // Fraction of worst correspondences discarded per iteration, in [0, 1).
  double trim_fraction = 0.0;
  int threads = 0;
};

struct IcpResult {
  RigidTransform3D transform;
  // rms[0] is the RMS at the initial transform; one entry per accepted update.
  std::vector<double> rms;
  int iterations = 0;
  bool converged = false;
};

// Rigid point-to-point ICP of cloud against mesh starting from init.
// A cloud with rank-deficient spread returns init unchanged plus a diagnostic.
IcpResult icp_refine(std::span<const Vec3> cloud, const LabeledMesh& mesh, const Bvh& bvh,
                     const RigidTransform3D& init, const IcpOptions& options = {},
                     Diagnostics* diag = nullptr);

// Kabsch: rigid transform minimizing sum |R src_i + t - dst_i|^2.
RigidTransform3D fit_rigid(std::span<const Vec3> src, std::span<const Vec3> dst);

// pairs.json {"src":[[x,y]...],"dst":[[x,y]...]}; cloud.json {"points":[[x,y,z]...]}
struct PointPairs {
  std::vector<Vec2> src;
  std::vector<Vec2> dst;
};
PointPairs parse_pairs(std::string_view text);
std::string pairs_to_json(const PointPairs& pairs);
std::vector<Vec3> parse_cloud(std::string_view text);
std::string cloud_to_json(std::span<const Vec3> points);

}  // namespace geolift
