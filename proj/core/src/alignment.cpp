#include "geolift/alignment.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "geolift/parallel.hpp"

namespace geolift {

using json = nlohmann::ordered_json;

Vec2 Similarity2D::apply(const Vec2& p) const {
  const double c = std::cos(theta), s_ = std::sin(theta);
  return s * Vec2(c * p.x() - s_ * p.y(), s_ * p.x() + c * p.y()) + t;
}

RigidTransform3D RigidTransform3D::inverse() const {
  RigidTransform3D inv;
  inv.R = R.transpose();
  inv.t = -inv.R * t;
  return inv;
}

RigidTransform3D RigidTransform3D::operator*(const RigidTransform3D& rhs) const {
  RigidTransform3D out;
  out.R = R * rhs.R;
  out.t = R * rhs.t + t;
  return out;
}

double similarity_cost(const Similarity2D& t, std::span<const Vec2> src, std::span<const Vec2> dst) {
  double cost = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) cost += (t.apply(src[i]) - dst[i]).squaredNorm();
  return cost;
}

ProcrustesResult procrustes2d(std::span<const Vec2> src, std::span<const Vec2> dst) {
  if (src.size() != dst.size()) throw ValidationError("procrustes: src and dst differ in size");
  if (src.size() < 3) throw ValidationError("procrustes: at least 3 point pairs required");
  const double n = static_cast<double>(src.size());
  Vec2 ms = Vec2::Zero(), md = Vec2::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms /= n;
  md /= n;
  double var = 0.0, a = 0.0, b = 0.0, scale2 = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec2 p = src[i] - ms;
    const Vec2 q = dst[i] - md;
    var += p.squaredNorm();
    a += p.dot(q);
    b += p.x() * q.y() - p.y() * q.x();
    scale2 = std::max(scale2, src[i].squaredNorm());
  }
  if (var <= 1e-24 * std::max(1.0, scale2) * n) {
    throw ValidationError("procrustes: source points are coincident");
  }
  ProcrustesResult r;
  r.transform.s = std::hypot(a, b) / var;
  r.transform.theta = std::atan2(b, a);
  const double c = std::cos(r.transform.theta), s = std::sin(r.transform.theta);
  r.transform.t = md - r.transform.s * Vec2(c * ms.x() - s * ms.y(), s * ms.x() + c * ms.y());
  if (!(r.transform.s > 0)) throw ValidationError("procrustes: degenerate correspondence");
  r.rms = std::sqrt(similarity_cost(r.transform, src, dst) / n);
  return r;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

ClosestPoint closest_point_on_mesh(const Vec3& p, const LabeledMesh& mesh) {
  if (mesh.empty()) throw ValidationError("closest_point_on_mesh: empty mesh");
  ClosestPoint best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto& t = mesh.triangles[i];
    const Vec3 q = closest_point_on_triangle(p, mesh.vertices[t.v[0]], mesh.vertices[t.v[1]],
                                             mesh.vertices[t.v[2]]);
    const double d2 = (q - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.point = q;
      best.tri_index = static_cast<int>(i);
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

ClosestPoint closest_point_on_mesh(const Vec3& p, const Bvh& bvh) {
  const auto& nodes = bvh.nodes();
  ClosestPoint best;
  double best_d2 = std::numeric_limits<double>::infinity();
  struct Entry {
    int node;
    double d2;
  };
  std::vector<Entry> stack;
  stack.reserve(64);
  stack.push_back({0, nodes[0].box.squared_distance(p)});
  while (!stack.empty()) {
    const Entry e = stack.back();
    stack.pop_back();
    if (e.d2 > best_d2) continue;
    const BvhNode& node = nodes[e.node];
    if (node.is_leaf()) {
      for (int s = node.first; s < node.first + node.count; ++s) {
        const Vec3 q = closest_point_on_triangle(p, bvh.vertex(s, 0), bvh.vertex(s, 1), bvh.vertex(s, 2));
        const double d2 = (q - p).squaredNorm();
        const int tri = bvh.order()[s];
        if (d2 < best_d2 || (d2 == best_d2 && tri < best.tri_index)) {
          best_d2 = d2;
          best.point = q;
          best.tri_index = tri;
        }
      }
      continue;
    }
    const double dl = nodes[node.left].box.squared_distance(p);
    const double dr = nodes[node.right].box.squared_distance(p);
    // Nearer child on top of the stack.
    if (dl <= dr) {
      if (dr <= best_d2) stack.push_back({node.right, dr});
      if (dl <= best_d2) stack.push_back({node.left, dl});
    } else {
      if (dl <= best_d2) stack.push_back({node.left, dl});
      if (dr <= best_d2) stack.push_back({node.right, dr});
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

RigidTransform3D fit_rigid(std::span<const Vec3> src, std::span<const Vec3> dst) {
  const double n = static_cast<double>(src.size());
  Vec3 ms = Vec3::Zero(), md = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    ms += src[i];
    md += dst[i];
  }
  ms /= n;
  md /= n;
  Mat3 H = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) H += (src[i] - ms) * (dst[i] - md).transpose();
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) D(2, 2) = -1.0;
  RigidTransform3D T;
  T.R = svd.matrixV() * D * svd.matrixU().transpose();
  T.t = md - T.R * ms;
  return T;
}

namespace {

struct Matches {
  std::vector<Vec3> targets;
  std::vector<double> d2;
};

Matches correspond(std::span<const Vec3> cloud, const Bvh& bvh, const RigidTransform3D& T,
                   int threads) {
  Matches m;
  m.targets.resize(cloud.size());
  m.d2.resize(cloud.size());
  parallel_for(
      static_cast<int>(cloud.size()),
      [&](int i) {
        const Vec3 p = T.apply(cloud[i]);
        const auto cp = closest_point_on_mesh(p, bvh);
        m.targets[i] = cp.point;
        m.d2[i] = (cp.point - p).squaredNorm();
      },
      threads);
  return m;
}

// Indices of the (1 - trim) best matches, ordered by (distance, index).
std::vector<int> kept_indices(const Matches& m, double trim) {
  std::vector<int> idx(m.d2.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (trim <= 0.0) return idx;
  const std::size_t keep = std::max<std::size_t>(
      3, static_cast<std::size_t>(std::ceil((1.0 - trim) * static_cast<double>(idx.size()))));
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return m.d2[a] < m.d2[b]; });
  idx.resize(std::min(keep, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

double rms_of(const Matches& m, const std::vector<int>& idx) {
  double s = 0.0;
  for (int i : idx) s += m.d2[i];
  return std::sqrt(s / static_cast<double>(idx.size()));
}

}  // namespace

IcpResult icp_refine(std::span<const Vec3> cloud, const LabeledMesh& mesh, const Bvh& bvh,
                     const RigidTransform3D& init, const IcpOptions& options, Diagnostics* diag) {
  if (cloud.size() < 3) throw ValidationError("icp: at least 3 cloud points required");
  if (mesh.empty()) throw ValidationError("icp: empty mesh");
  if (!(options.trim_fraction >= 0.0 && options.trim_fraction < 1.0)) {
    throw ValidationError("icp: trim fraction must be in [0, 1)");
  }
  IcpResult result;
  result.transform = init;

  Matches m = correspond(cloud, bvh, init, options.threads);
  std::vector<int> kept = kept_indices(m, options.trim_fraction);
  double rms = rms_of(m, kept);
  result.rms.push_back(rms);

  Vec3 mean = Vec3::Zero();
  for (const auto& p : cloud) mean += p;
  mean /= static_cast<double>(cloud.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : cloud) cov += (p - mean) * (p - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmax > 0) || eig.eigenvalues().minCoeff() <= 1e-12 * lmax) {
    if (diag) diag->warn("icp: cloud spread has rank < 3; returning the initial transform");
    return result;
  }

  std::vector<Vec3> src, dst;
  for (int it = 0; it < options.max_iters; ++it) {
    src.clear();
    dst.clear();
    for (int i : kept) {
      src.push_back(cloud[i]);
      dst.push_back(m.targets[i]);
    }
    const RigidTransform3D next = fit_rigid(src, dst);
    Matches nm = correspond(cloud, bvh, next, options.threads);
    std::vector<int> nkept = kept_indices(nm, options.trim_fraction);
    const double nrms = rms_of(nm, nkept);
    result.iterations = it + 1;
    if (nrms > rms) {
      // Rounding at the fixed point; keep the previous estimate.
      result.converged = true;
      break;
    }
    result.transform = next;
    result.rms.push_back(nrms);
    const double gain = rms - nrms;
    m = std::move(nm);
    kept = std::move(nkept);
    rms = nrms;
    if (gain < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

PointPairs parse_pairs(std::string_view text) {
  PointPairs pp;
  try {
    const auto j = json::parse(text);
    for (const auto* key : {"src", "dst"}) {
      auto& out = std::string_view(key) == "src" ? pp.src : pp.dst;
      for (const auto& v : j.at(key)) {
        if (!v.is_array() || v.size() != 2) throw ValidationError(std::string("pairs.json: ") + key + ": expected [x,y]");
        out.emplace_back(v[0].get<double>(), v[1].get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("pairs.json: ") + e.what());
  }
  if (pp.src.size() != pp.dst.size()) throw ValidationError("pairs.json: src and dst differ in length");
  return pp;
}

std::string pairs_to_json(const PointPairs& pairs) {
  json j;
  j["src"] = json::array();
  j["dst"] = json::array();
  for (const auto& p : pairs.src) j["src"].push_back({p.x(), p.y()});
  for (const auto& p : pairs.dst) j["dst"].push_back({p.x(), p.y()});
  return j.dump(2) + "\n";
}

std::vector<Vec3> parse_cloud(std::string_view text) {
  std::vector<Vec3> pts;
  try {
    const auto j = json::parse(text);
    for (const auto& v : j.at("points")) {
      if (!v.is_array() || v.size() != 3) throw ValidationError("cloud.json: points: expected [x,y,z]");
      pts.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("cloud.json: ") + e.what());
  }
  return pts;
}

std::string cloud_to_json(std::span<const Vec3> points) {
  json j;
  j["points"] = json::array();
  for (const auto& p : points) j["points"].push_back({p.x(), p.y(), p.z()});
  return j.dump() + "\n";
}

}  // namespace geolift
