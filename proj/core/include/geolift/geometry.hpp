#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "geolift/labels.hpp"

namespace geolift {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rays with t at or below this are treated as re-hitting their origin surface.
inline constexpr double kRayEpsilon = 1e-7;

// World-to-camera rigid transform: x_cam = R * x_world + t.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return R * x + t; }
  // Camera center in world coordinates.
  Vec3 center() const { return -R.transpose() * t; }
  Pose inverse() const;
  // (a * b).apply(x) == a.apply(b.apply(x))
  Pose operator*(const Pose& rhs) const;
  bool is_valid(double tol = 1e-9) const;

  static Pose from_center(const Mat3& R, const Vec3& center);
};

// Rotation angle of R_a * R_b^T, radians.
double rotation_distance(const Mat3& a, const Mat3& b);
// Nearest rotation in the Frobenius sense.
Mat3 orthonormalize(const Mat3& m);
Mat3 axis_angle(const Vec3& axis, double angle);

struct Intrinsics {
  double f = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
};

// Pinhole camera. Camera frame: x right, y down, z forward. World up is +z.
struct Camera {
  double f = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  Pose pose;

  // Throws ValidationError if the intrinsics or rotation are invalid.
  void validate() const;
  Vec3 center() const { return pose.center(); }
  // Principal (optical) axis in world coordinates.
  Vec3 optical_axis() const { return pose.R.row(2).transpose(); }
  Intrinsics intrinsics() const { return {f, cx, cy, width, height}; }

  static Camera make(const Intrinsics& k, const Pose& pose);
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();

  Ray() = default;
  // dir is normalized.
  Ray(const Vec3& origin, const Vec3& direction);
  Vec3 point_at(double s) const { return origin + s * dir; }
};

struct Triangle {
  Vec3 v0 = Vec3::Zero();
  Vec3 v1 = Vec3::Zero();
  Vec3 v2 = Vec3::Zero();
  SemanticLabel label = SemanticLabel::kUnknown;
  std::string polygon_id;
  bool walkable = false;

  double area() const;
  // Unit normal from CCW winding (v0, v1, v2).
  Vec3 normal() const;
  bool degenerate() const { return area() <= 1e-12; }
};

struct Hit {
  double t = 0.0;
  Vec3 point = Vec3::Zero();
  int tri_index = -1;
  SemanticLabel label = SemanticLabel::kUnknown;
  Vec3 normal = Vec3::UnitZ();
};

// Pixel of X, or nullopt when X is not strictly in front of the camera.
std::optional<Vec2> project(const Camera& camera, const Vec3& X);

// World-frame ray from the camera center through pixel (u, v).
Ray cast_ray(const Camera& camera, const Vec2& pixel);

// Moller-Trumbore ray parameter for the triangle (v0, v1, v2); nullopt on a
// miss, a parallel ray, or t <= kRayEpsilon. Shared by every intersection
// routine so BVH and exhaustive searches agree bit for bit.
std::optional<double> ray_triangle_t(const Vec3& origin, const Vec3& dir,
                                     const Vec3& v0, const Vec3& v1,
                                     const Vec3& v2);

std::optional<Hit> intersect_triangle(const Ray& ray, const Triangle& tri,
                                      int tri_index = -1);

// camera.json: {"width","height","f","cx","cy","R":[9 row-major],"t":[3]}
Camera parse_camera(std::string_view text);
std::string camera_to_json(const Camera& camera);

}  // namespace geolift
