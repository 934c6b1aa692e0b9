#include "fixtures.hpp"

#include <unistd.h>

#include <Eigen/Geometry>
#include <cmath>
#include <filesystem>

namespace geolift::fixture {

GisPolygon rect(const std::string& id, double x0, double y0, double x1, double y1, SemanticLabel label,
                bool walkable) {
  GisPolygon p;
  p.id = id;
  p.ring = {Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1)};
  p.label = label;
  p.walkable = walkable;
  return p;
}

LabeledMesh floor_mesh(double half, double z, SemanticLabel label, bool walkable) {
  LabeledMesh m;
  m.vertices = {Vec3(-half, -half, z), Vec3(half, -half, z), Vec3(half, half, z), Vec3(-half, half, z)};
  m.triangles.push_back({{0, 1, 2}, label, "floor", walkable});
  m.triangles.push_back({{0, 2, 3}, label, "floor", walkable});
  return m;
}

LabeledMesh wall_mesh(double x0, double y0, double y1, double z0, double z1, SemanticLabel label) {
  LabeledMesh m;
  m.vertices = {Vec3(x0, y0, z0), Vec3(x0, y1, z0), Vec3(x0, y1, z1), Vec3(x0, y0, z1)};
  m.triangles.push_back({{0, 1, 2}, label, "wall", false});
  m.triangles.push_back({{0, 2, 3}, label, "wall", false});
  return m;
}

LabeledMesh merge(const LabeledMesh& a, const LabeledMesh& b) {
  LabeledMesh m = a;
  const auto off = static_cast<std::uint32_t>(a.vertices.size());
  m.vertices.insert(m.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (auto t : b.triangles) {
    for (auto& v : t.v) v += off;
    m.triangles.push_back(t);
  }
  return m;
}

Mat3 look(double yaw, double pitch_down) {
  const Vec3 d(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 right = d.cross(Vec3::UnitZ()).normalized();
  const Vec3 fwd = std::cos(pitch_down) * d - std::sin(pitch_down) * Vec3::UnitZ();
  Mat3 R;
  R.row(0) = right.transpose();
  R.row(1) = fwd.cross(right).transpose();
  R.row(2) = fwd.transpose();
  return R;
}

Camera make_camera(const Intrinsics& k, const Mat3& R, const Vec3& center) {
  return Camera::make(k, Pose::from_center(R, center));
}

Camera nadir_camera(const Intrinsics& k, double height) {
  Mat3 R;
  R << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  return make_camera(k, R, Vec3(0, 0, height));
}

Mat3 random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

std::string temp_dir(const std::string& name) {
  // Per process, so tests running in parallel never share a directory.
  const auto dir = std::filesystem::temp_directory_path() /
                   ("geolift_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace geolift::fixture
