#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "geolift/geometry.hpp"
#include "geolift/gis_map.hpp"
#include "geolift/raster.hpp"

namespace geolift {

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  bool contains(const Aabb& b, double tol = 0.0) const {
    return (b.min.array() >= min.array() - tol).all() &&
           (b.max.array() <= max.array() + tol).all();
  }
  Vec3 extent() const { return max - min; }
  // Squared distance from p to the box (0 inside).
  double squared_distance(const Vec3& p) const;
};

struct BvhNode {
  Aabb box;
  // Interior: children indices. Leaf: count > 0 and [first, first + count)
  // indexes Bvh::order().
  int left = -1;
  int right = -1;
  int first = 0;
  int count = 0;

  bool is_leaf() const { return count > 0; }
};

class Bvh {
 public:
  static constexpr int kMaxLeafSize = 4;

  const std::vector<BvhNode>& nodes() const { return nodes_; }
  // Leaf slot -> mesh triangle index.
  const std::vector<int>& order() const { return order_; }
  // Triangle vertices in slot order.
  const Vec3& vertex(int slot, int k) const { return verts_[3 * slot + k]; }
  std::size_t triangle_count() const { return order_.size(); }

 private:
  friend Bvh build_bvh(const LabeledMesh& mesh);
  std::vector<BvhNode> nodes_;
  std::vector<int> order_;
  std::vector<Vec3> verts_;
};

// Median split on the longest axis of the node's centroid bounds, leaves of at
// most Bvh::kMaxLeafSize triangles. Throws ValidationError on an empty mesh.
Bvh build_bvh(const LabeledMesh& mesh);

// Nearest hit with t > kRayEpsilon. Hits within 1e-10 * max(1, t) of the
// nearest are ties and resolve to the lower triangle index.
std::optional<Hit> raycast(const Bvh& bvh, const LabeledMesh& mesh, const Ray& ray);
// Every hit with t > kRayEpsilon, ascending by (t, triangle index).
std::vector<Hit> raycast_all(const Bvh& bvh, const LabeledMesh& mesh, const Ray& ray);
// Exhaustive loop over all triangles, same tie rule as raycast.
std::optional<Hit> raycast_brute_force(const LabeledMesh& mesh, const Ray& ray);

// ground: n_z >= cos 45; ceiling: n_z <= -cos 45; wall: |n_z| <= sin 15.
// Throws ValidationError unless |n| = 1 within 1e-6.
NormalBin discretize_normal(const Vec3& n);

struct ContextMaps {
  // Euclidean distance along the pixel ray, +inf where nothing is hit.
  DepthRaster depth;
  // Distance along the optical axis: depth * (dir . axis).
  DepthRaster zdepth;
  CodeRaster labels;
  CodeRaster normals;
};

// Pixel (i, j) samples the ray through its center (i + 0.5, j + 0.5).
Vec2 pixel_center(int i, int j);

ContextMaps render_context(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh,
                           int threads = 0);

}  // namespace geolift
