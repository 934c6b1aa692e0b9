#include <cmath>
#include <numbers>

#include "geolift/parallel.hpp"
#include "geolift/render.hpp"

namespace geolift {

NormalBin discretize_normal(const Vec3& n) {
  if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6) {
    throw ValidationError("discretize_normal: input is not a unit vector");
  }
  static const double kCos45 = std::cos(std::numbers::pi / 4.0);
  static const double kSin15 = std::sin(std::numbers::pi / 12.0);
  if (n.z() >= kCos45) return NormalBin::kGround;
  if (n.z() <= -kCos45) return NormalBin::kCeiling;
  if (std::abs(n.z()) <= kSin15) return NormalBin::kWall;
  return NormalBin::kNone;
}

Vec2 pixel_center(int i, int j) { return Vec2(i + 0.5, j + 0.5); }

ContextMaps render_context(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh,
                           int threads) {
  const int W = camera.width;
  const int H = camera.height;
  const double inf = std::numeric_limits<double>::infinity();
  ContextMaps maps{DepthRaster(W, H, inf), DepthRaster(W, H, inf),
                   CodeRaster(W, H, static_cast<std::uint8_t>(SemanticLabel::kSky)),
                   CodeRaster(W, H, static_cast<std::uint8_t>(NormalBin::kNone))};
  const Vec3 axis = camera.optical_axis();
  parallel_for(
      H,
      [&](int y) {
        for (int x = 0; x < W; ++x) {
          const Ray ray = cast_ray(camera, pixel_center(x, y));
          const auto hit = raycast(bvh, mesh, ray);
          if (!hit) continue;
          maps.depth(x, y) = hit->t;
          maps.zdepth(x, y) = hit->t * ray.dir.dot(axis);
          maps.labels(x, y) = static_cast<std::uint8_t>(hit->label);
          maps.normals(x, y) = static_cast<std::uint8_t>(discretize_normal(hit->normal));
        }
      },
      threads);
  return maps;
}

}  // namespace geolift
