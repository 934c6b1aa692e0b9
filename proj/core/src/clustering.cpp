#include <algorithm>
#include <limits>
#include <set>

#include "geolift/random.hpp"
#include "geolift/resection.hpp"

namespace geolift {

namespace {

int nearest(const Vec3& p, const std::vector<Vec3>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = (p - centroids[c]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

double clustering_sse(std::span<const Vec3> positions, std::span<const int> assignments, int k) {
  if (positions.size() != assignments.size()) throw ValidationError("clustering_sse: size mismatch");
  std::vector<Vec3> sum(k, Vec3::Zero());
  std::vector<int> count(k, 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const int a = assignments[i];
    if (a < 0 || a >= k) throw ValidationError("clustering_sse: assignment out of range");
    sum[a] += positions[i];
    ++count[a];
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const int a = assignments[i];
    sse += (positions[i] - sum[a] / count[a]).squaredNorm();
  }
  return sse;
}

ClusterIndex cluster_cameras(std::span<const Vec3> positions, int k, std::uint64_t seed,
                             const std::vector<std::vector<int>>& visibility) {
  if (k < 1) throw ValidationError("cluster_cameras: k must be >= 1");
  const std::size_t n = positions.size();
  if (n < static_cast<std::size_t>(k)) throw ValidationError("cluster_cameras: fewer cameras than k");
  if (!visibility.empty() && visibility.size() != n) {
    throw ValidationError("cluster_cameras: visibility list count differs from camera count");
  }
  for (const auto& p : positions) {
    if (!p.allFinite()) throw ValidationError("cluster_cameras: non-finite camera position");
  }

  Rng rng(seed);
  std::vector<Vec3> centroids;
  centroids.push_back(positions[rng.index(n)]);
  std::vector<double> d2(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = (positions[i] - centroids[nearest(positions[i], centroids)]).squaredNorm();
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (r < acc && d2[i] > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(n);
    }
    centroids.push_back(positions[pick]);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 1000; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int a = nearest(positions[i], centroids);
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Vec3> sum(k, Vec3::Zero());
    std::vector<int> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[assign[i]] += positions[i];
      ++count[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] > 0) centroids[c] = sum[c] / count[c];
    }
  }

  ClusterIndex idx;
  idx.k = k;
  idx.assignments = assign;
  idx.centroids = centroids;
  idx.sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) idx.sse += (positions[i] - centroids[assign[i]]).squaredNorm();
  std::vector<std::set<int>> pts(k);
  for (std::size_t i = 0; i < visibility.size(); ++i) {
    for (int p : visibility[i]) pts[assign[i]].insert(p);
  }
  idx.points.resize(k);
  for (int c = 0; c < k; ++c) idx.points[c].assign(pts[c].begin(), pts[c].end());
  return idx;
}

}  // namespace geolift
