#include <algorithm>
#include <cmath>
#include <numeric>

#include "geolift/render.hpp"

namespace geolift {

double Aabb::squared_distance(const Vec3& p) const {
  const Vec3 d = (min - p).cwiseMax(Vec3::Zero()).cwiseMax(p - max);
  return d.squaredNorm();
}

namespace {

struct Builder {
  const std::vector<Aabb>& tri_boxes;
  const std::vector<Vec3>& centroids;
  std::vector<int>& idx;
  std::vector<BvhNode>& nodes;
  double pad;

  int build(int begin, int end) {
    const int node = static_cast<int>(nodes.size());
    nodes.emplace_back();
    Aabb box, cbox;
    for (int i = begin; i < end; ++i) {
      box.extend(tri_boxes[idx[i]]);
      cbox.extend(centroids[idx[i]]);
    }
    box.min.array() -= pad;
    box.max.array() += pad;
    nodes[node].box = box;
    if (end - begin <= Bvh::kMaxLeafSize) {
      nodes[node].first = begin;
      nodes[node].count = end - begin;
      return node;
    }
    int axis = 0;
    const Vec3 ext = cbox.extent();
    if (ext[1] > ext[axis]) axis = 1;
    if (ext[2] > ext[axis]) axis = 2;
    const int mid = begin + (end - begin) / 2;
    std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end, [&](int a, int b) {
      const double ca = centroids[a][axis];
      const double cb = centroids[b][axis];
      return ca < cb || (ca == cb && a < b);
    });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes[node].left = left;
    nodes[node].right = right;
    return node;
  }
};

// Entry/exit parameters of the ray against the box; false on a miss.
bool slab(const Aabb& box, const Vec3& o, const Vec3& d, const Vec3& inv, double& t0, double& t1) {
  t0 = -std::numeric_limits<double>::infinity();
  t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return false;
      continue;
    }
    double ta = (box.min[a] - o[a]) * inv[a];
    double tb = (box.max[a] - o[a]) * inv[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return t1 >= 0.0;
}

Hit make_hit(const LabeledMesh& mesh, const Ray& ray, double t, int tri) {
  Hit h;
  h.t = t;
  h.point = ray.point_at(t);
  h.tri_index = tri;
  h.label = mesh.triangles[tri].label;
  h.normal = mesh.normal(tri);
  return h;
}

}  // namespace

Bvh build_bvh(const LabeledMesh& mesh) {
  if (mesh.empty()) throw ValidationError("bvh: mesh has no triangles");
  const int n = static_cast<int>(mesh.size());
  std::vector<Aabb> boxes(n);
  std::vector<Vec3> centroids(n);
  double scale = 1.0;
  for (int i = 0; i < n; ++i) {
    const auto& t = mesh.triangles[i];
    Vec3 c = Vec3::Zero();
    for (auto v : t.v) {
      boxes[i].extend(mesh.vertices[v]);
      c += mesh.vertices[v];
      scale = std::max(scale, mesh.vertices[v].cwiseAbs().maxCoeff());
    }
    centroids[i] = c / 3.0;
  }
  Bvh bvh;
  bvh.order_.resize(n);
  std::iota(bvh.order_.begin(), bvh.order_.end(), 0);
  bvh.nodes_.reserve(2 * n);
  Builder b{boxes, centroids, bvh.order_, bvh.nodes_, 1e-9 * scale};
  b.build(0, n);
  bvh.verts_.resize(3 * static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const auto& t = mesh.triangles[bvh.order_[s]];
    for (int k = 0; k < 3; ++k) bvh.verts_[3 * s + k] = mesh.vertices[t.v[k]];
  }
  return bvh;
}

namespace {

// Hits within this distance of the nearest one count as ties.
double tie_window(double t) { return 1e-10 * std::max(1.0, t); }

// Order-independent nearest selection: the smallest t, then the lowest
// triangle index among hits inside its tie window.
struct Nearest {
  double best_t = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, int>> near;

  double limit() const { return best_t + tie_window(best_t); }

  void offer(double t, int tri) {
    if (t > limit()) return;
    best_t = std::min(best_t, t);
    near.emplace_back(t, tri);
  }

  int pick(double& t) const {
    int tri = -1;
    for (const auto& [ht, hi] : near) {
      if (ht <= limit() && (tri < 0 || hi < tri)) {
        tri = hi;
        t = ht;
      }
    }
    return tri;
  }
};

}  // namespace

std::optional<Hit> raycast(const Bvh& bvh, const LabeledMesh& mesh, const Ray& ray) {
  const auto& nodes = bvh.nodes();
  const Vec3 inv = ray.dir.cwiseInverse();
  Nearest nearest;

  struct Entry {
    int node;
    double tnear;
  };
  Entry stack[128];
  int top = 0;
  double t0, t1;
  if (!slab(nodes[0].box, ray.origin, ray.dir, inv, t0, t1)) return std::nullopt;
  stack[top++] = {0, t0};
  while (top > 0) {
    const Entry e = stack[--top];
    if (e.tnear > nearest.limit()) continue;
    const BvhNode& node = nodes[e.node];
    if (node.is_leaf()) {
      for (int s = node.first; s < node.first + node.count; ++s) {
        const auto t = ray_triangle_t(ray.origin, ray.dir, bvh.vertex(s, 0), bvh.vertex(s, 1),
                                      bvh.vertex(s, 2));
        if (t) nearest.offer(*t, bvh.order()[s]);
      }
      continue;
    }
    double la, lb, ra, rb;
    const bool hl = slab(nodes[node.left].box, ray.origin, ray.dir, inv, la, lb) && la <= nearest.limit();
    const bool hr = slab(nodes[node.right].box, ray.origin, ray.dir, inv, ra, rb) && ra <= nearest.limit();
    if (hl && hr) {
      if (la <= ra) {
        stack[top++] = {node.right, ra};
        stack[top++] = {node.left, la};
      } else {
        stack[top++] = {node.left, la};
        stack[top++] = {node.right, ra};
      }
    } else if (hl) {
      stack[top++] = {node.left, la};
    } else if (hr) {
      stack[top++] = {node.right, ra};
    }
  }
  double t = 0;
  const int tri = nearest.pick(t);
  if (tri < 0) return std::nullopt;
  return make_hit(mesh, ray, t, tri);
}

std::vector<Hit> raycast_all(const Bvh& bvh, const LabeledMesh& mesh, const Ray& ray) {
  const auto& nodes = bvh.nodes();
  const Vec3 inv = ray.dir.cwiseInverse();
  std::vector<std::pair<double, int>> found;
  std::vector<int> stack{0};
  double t0, t1;
  while (!stack.empty()) {
    const int ni = stack.back();
    stack.pop_back();
    const BvhNode& node = nodes[ni];
    if (!slab(node.box, ray.origin, ray.dir, inv, t0, t1)) continue;
    if (node.is_leaf()) {
      for (int s = node.first; s < node.first + node.count; ++s) {
        const auto t = ray_triangle_t(ray.origin, ray.dir, bvh.vertex(s, 0), bvh.vertex(s, 1),
                                      bvh.vertex(s, 2));
        if (t) found.emplace_back(*t, bvh.order()[s]);
      }
    } else {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<Hit> hits;
  hits.reserve(found.size());
  for (const auto& [t, tri] : found) hits.push_back(make_hit(mesh, ray, t, tri));
  return hits;
}

std::optional<Hit> raycast_brute_force(const LabeledMesh& mesh, const Ray& ray) {
  Nearest nearest;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto& t = mesh.triangles[i];
    const auto hit = ray_triangle_t(ray.origin, ray.dir, mesh.vertices[t.v[0]], mesh.vertices[t.v[1]],
                                    mesh.vertices[t.v[2]]);
    if (hit) nearest.offer(*hit, static_cast<int>(i));
  }
  double t = 0;
  const int tri = nearest.pick(t);
  if (tri < 0) return std::nullopt;
  return make_hit(mesh, ray, t, tri);
}

}  // namespace geolift
