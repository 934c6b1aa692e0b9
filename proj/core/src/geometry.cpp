#include "geolift/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <nlohmann/json.hpp>

#include "geolift/error.hpp"

namespace geolift {

using json = nlohmann::json;

std::string_view to_string(SemanticLabel label) {
  switch (label) {
    case SemanticLabel::kBuilding: return "building";
    case SemanticLabel::kPlants: return "plants";
    case SemanticLabel::kPavement: return "pavement";
    case SemanticLabel::kSky: return "sky";
    case SemanticLabel::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(NormalBin bin) {
  switch (bin) {
    case NormalBin::kGround: return "ground";
    case NormalBin::kCeiling: return "ceiling";
    case NormalBin::kWall: return "wall";
    case NormalBin::kNone: return "none";
  }
  return "none";
}

std::optional<SemanticLabel> parse_semantic_label(std::string_view name) {
  for (int i = 0; i < kNumSemanticLabels; ++i) {
    const auto l = static_cast<SemanticLabel>(i);
    if (to_string(l) == name) return l;
  }
  return std::nullopt;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.R = R.transpose();
  inv.t = -inv.R * t;
  return inv;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.R = R * rhs.R;
  out.t = R * rhs.t + t;
  return out;
}

bool Pose::is_valid(double tol) const {
  if (!R.allFinite() || !t.allFinite()) return false;
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(R.determinant() - 1.0) <= tol;
}

Pose Pose::from_center(const Mat3& R, const Vec3& center) {
  Pose p;
  p.R = R;
  p.t = -R * center;
  return p;
}

double rotation_distance(const Mat3& a, const Mat3& b) {
  const Eigen::AngleAxisd aa(Mat3(a * b.transpose()));
  return std::abs(aa.angle());
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

void Camera::validate() const {
  if (!(std::isfinite(f) && f > 0)) throw ValidationError("camera: focal length must be > 0");
  if (width < 1 || height < 1) throw ValidationError("camera: width and height must be >= 1");
  if (!(cx >= 0 && cx <= width) || !(cy >= 0 && cy <= height)) {
    throw ValidationError("camera: principal point outside the image");
  }
  if (!pose.is_valid(1e-9)) throw ValidationError("camera: R is not a rotation");
}

Camera Camera::make(const Intrinsics& k, const Pose& pose) {
  Camera c;
  c.f = k.f;
  c.cx = k.cx;
  c.cy = k.cy;
  c.width = k.width;
  c.height = k.height;
  c.pose = pose;
  return c;
}

Ray::Ray(const Vec3& o, const Vec3& direction) : origin(o), dir(direction.normalized()) {}

double Triangle::area() const { return 0.5 * (v1 - v0).cross(v2 - v0).norm(); }

Vec3 Triangle::normal() const { return (v1 - v0).cross(v2 - v0).normalized(); }

std::optional<Vec2> project(const Camera& camera, const Vec3& X) {
  const Vec3 xc = camera.pose.apply(X);
  if (!(xc.z() > 0)) return std::nullopt;
  return Vec2(camera.f * xc.x() / xc.z() + camera.cx, camera.f * xc.y() / xc.z() + camera.cy);
}

Ray cast_ray(const Camera& camera, const Vec2& pixel) {
  const Vec3 d_cam((pixel.x() - camera.cx) / camera.f, (pixel.y() - camera.cy) / camera.f, 1.0);
  return Ray(camera.center(), camera.pose.R.transpose() * d_cam);
}

std::optional<double> ray_triangle_t(const Vec3& origin, const Vec3& dir, const Vec3& v0,
                                     const Vec3& v1, const Vec3& v2) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  // |det| = |dir . (e1 x e2)|; parallel when the ray lies in the plane.
  if (std::abs(det) <= 1e-12 * e1.cross(e2).norm() * dir.norm()) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - v0;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (!(t > kRayEpsilon)) return std::nullopt;
  return t;
}

std::optional<Hit> intersect_triangle(const Ray& ray, const Triangle& tri, int tri_index) {
  const auto t = ray_triangle_t(ray.origin, ray.dir, tri.v0, tri.v1, tri.v2);
  if (!t) return std::nullopt;
  Hit h;
  h.t = *t;
  h.point = ray.point_at(*t);
  h.tri_index = tri_index;
  h.label = tri.label;
  h.normal = tri.normal();
  return h;
}

Camera parse_camera(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("camera.json: ") + e.what());
  }
  Camera c;
  try {
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.f = j.at("f").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    const auto R = j.at("R").get<std::vector<double>>();
    const auto t = j.at("t").get<std::vector<double>>();
    if (R.size() != 9 || t.size() != 3) throw ValidationError("camera.json: R needs 9 and t 3 values");
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) c.pose.R(r, col) = R[3 * r + col];
      c.pose.t[r] = t[r];
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("camera.json: ") + e.what());
  }
  c.validate();
  return c;
}

std::string camera_to_json(const Camera& camera) {
  json j;
  j["width"] = camera.width;
  j["height"] = camera.height;
  j["f"] = camera.f;
  j["cx"] = camera.cx;
  j["cy"] = camera.cy;
  std::vector<double> R(9), t(3);
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) R[3 * r + col] = camera.pose.R(r, col);
    t[r] = camera.pose.t[r];
  }
  j["R"] = R;
  j["t"] = t;
  return j.dump(2) + "\n";
}

}  // namespace geolift
