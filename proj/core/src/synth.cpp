#include "geolift/synth.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "geolift/parallel.hpp"
#include "geolift/random.hpp"

namespace geolift {

namespace {

constexpr double kPlatformHeight = 1.2;

Mat3 look_rotation(double yaw, double pitch_down) {
  const Vec3 d(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 up(0, 0, 1);
  const Vec3 right = d.cross(up).normalized();
  const Vec3 forward = std::cos(pitch_down) * d - std::sin(pitch_down) * up;
  const Vec3 down = forward.cross(right);
  Mat3 R;
  R.row(0) = right.transpose();
  R.row(1) = down.transpose();
  R.row(2) = forward.transpose();
  return R;
}

Vec3 sample_in_triangle(const Triangle& tri, Rng& rng) {
  double a = rng.uniform(), b = rng.uniform();
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  return tri.v0 + a * (tri.v1 - tri.v0) + b * (tri.v2 - tri.v0);
}

struct WeightedTriangles {
  std::vector<std::size_t> ids;
  std::vector<double> cumulative;

  bool empty() const { return ids.empty() || cumulative.back() <= 0; }
  std::size_t pick(Rng& rng) const {
    const double r = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    return ids[std::min<std::size_t>(it - cumulative.begin(), ids.size() - 1)];
  }
};

template <typename Weight>
WeightedTriangles weighted(const LabeledMesh& mesh, Weight weight) {
  WeightedTriangles w;
  double acc = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const double wi = weight(i);
    if (wi <= 0) continue;
    acc += wi;
    w.ids.push_back(i);
    w.cumulative.push_back(acc);
  }
  return w;
}

bool is_ground(const LabeledMesh& mesh, std::size_t i) {
  return discretize_normal(mesh.normal(i)) == NormalBin::kGround;
}

double axis_depth(const Camera& cam, const Vec3& p) { return cam.pose.apply(p).z(); }

// Hit fraction with early exit once the 50% question is settled.
bool half_hits(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh) {
  const long total = static_cast<long>(camera.width) * camera.height;
  const long need = (total + 1) / 2;
  long hits = 0, misses = 0;
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      if (raycast(bvh, mesh, cast_ray(camera, pixel_center(x, y)))) {
        if (++hits >= need) return true;
      } else if (++misses > total - need) {
        return false;
      }
    }
  }
  return hits >= need;
}

// At least a tenth of a coarse pixel grid lands on walkable ground 3-40 m out.
bool sees_walkable_ground(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh) {
  constexpr int kGx = 16, kGy = 12;
  int good = 0;
  for (int gy = 0; gy < kGy; ++gy) {
    for (int gx = 0; gx < kGx; ++gx) {
      const Vec2 px((gx + 0.5) * camera.width / kGx, (gy + 0.5) * camera.height / kGy);
      const auto hit = raycast(bvh, mesh, cast_ray(camera, px));
      if (!hit || !mesh.triangles[hit->tri_index].walkable) continue;
      if (discretize_normal(hit->normal) != NormalBin::kGround) continue;
      const double z = axis_depth(camera, hit->point);
      good += z >= 3.0 && z <= 40.0;
    }
  }
  return good * 10 >= kGx * kGy;
}

bool in_image(const Camera& cam, const BBox& b) {
  return b.x1 >= 0 && b.y1 >= 0 && b.x2 <= cam.width && b.y2 <= cam.height;
}

// First surface along the ray towards p lies at p (within a relative 1e-6).
bool visible(const Camera& cam, const Bvh& bvh, const LabeledMesh& mesh, const Vec3& p) {
  const Vec3 C = cam.center();
  const double dist = (p - C).norm();
  const auto hit = raycast(bvh, mesh, Ray(C, p - C));
  return !hit || hit->t >= dist * (1.0 - 1e-6);
}

// Upright 1.7 m person box whose feet project to the foot point.
std::optional<BBox> person_box(const Camera& cam, const Vec3& foot, double scale_depth) {
  const auto px = project(cam, foot);
  if (!px) return std::nullopt;
  const double z = scale_depth;
  if (!(z > 0)) return std::nullopt;
  const double h = cam.f * kHumanHeight / z;
  const double w = 0.4 * h;
  return BBox{px->x() - 0.5 * w, px->y() - h, px->x() + 0.5 * w, px->y()};
}

}  // namespace

void SceneSpec::validate() const {
  if (!(extent > 0) || !std::isfinite(extent)) throw ValidationError("scene: extent must be > 0");
  if (!(tile > 0) || tile > extent) throw ValidationError("scene: tile must lie in (0, extent]");
  if (buildings < 0) throw ValidationError("scene: building count must be >= 0");
  if (!(min_height > 0) || !(max_height >= min_height)) {
    throw ValidationError("scene: heights must satisfy 0 < min_height <= max_height");
  }
  if (!(walkable_fraction >= 0 && walkable_fraction <= 1)) {
    throw ValidationError("scene: walkable_fraction must lie in [0, 1]");
  }
}

Scene make_scene(const SceneSpec& spec) {
  spec.validate();
  const int nt = static_cast<int>(std::floor(spec.extent / spec.tile + 1e-9));
  const int tiles = nt * nt;
  const int reserved = spec.two_level_ground ? 2 : 0;
  if (spec.two_level_ground && nt < 2) throw ValidationError("scene: two-level ground needs at least 2x2 tiles");
  if (spec.buildings > tiles - reserved) {
    throw ValidationError("scene: " + std::to_string(spec.buildings) + " buildings do not fit in " +
                          std::to_string(tiles - reserved) + " free tiles");
  }
  Rng rng(spec.seed);
  enum class Kind { kFloor, kBuilding, kPlatform, kRamp };
  std::vector<Kind> kind(tiles, Kind::kFloor);
  if (spec.two_level_ground) {
    const int pi = 1 + static_cast<int>(rng.index(nt - 1));
    const int pj = static_cast<int>(rng.index(nt));
    kind[pj * nt + pi] = Kind::kPlatform;
    kind[pj * nt + pi - 1] = Kind::kRamp;
  }
  std::vector<int> free;
  for (int t = 0; t < tiles; ++t) {
    if (kind[t] == Kind::kFloor) free.push_back(t);
  }
  for (int b = 0; b < spec.buildings; ++b) {
    const std::size_t k = b + rng.index(free.size() - b);
    std::swap(free[b], free[k]);
    kind[free[b]] = Kind::kBuilding;
  }

  Scene scene;
  scene.lift.ground_elevation = 0.0;
  for (int j = 0; j < nt; ++j) {
    for (int i = 0; i < nt; ++i) {
      const int t = j * nt + i;
      const double x0 = i * spec.tile, y0 = j * spec.tile, x1 = x0 + spec.tile, y1 = y0 + spec.tile;
      GisPolygon poly;
      poly.id = "t" + std::to_string(i) + "_" + std::to_string(j);
      poly.ring = {Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1)};
      const double draw = rng.uniform();
      switch (kind[t]) {
        case Kind::kBuilding: {
          poly.label = SemanticLabel::kBuilding;
          poly.walkable = false;
          const double h = rng.uniform(spec.min_height, spec.max_height);
          scene.lift.ops.push_back({poly.id, ExtrudeOp{h}});
          break;
        }
        case Kind::kPlatform:
          poly.label = SemanticLabel::kPavement;
          poly.walkable = true;
          scene.lift.ops.push_back({poly.id, ExtrudeOp{kPlatformHeight}});
          break;
        case Kind::kRamp:
          poly.label = SemanticLabel::kPavement;
          poly.walkable = true;
          scene.lift.ops.push_back(
              {poly.id, TiltOp{{Vec3(x0, y0, 0.0), Vec3(x0, y1, 0.0), Vec3(x1, y0, kPlatformHeight)}}});
          break;
        case Kind::kFloor:
          if (draw < spec.walkable_fraction) {
            poly.label = SemanticLabel::kPavement;
            poly.walkable = true;
          } else {
            poly.label = SemanticLabel::kPlants;
            poly.walkable = false;
          }
          break;
      }
      scene.map.polygons.push_back(std::move(poly));
    }
  }
  validate_map(scene.map);
  validate_liftspec(scene.lift, scene.map);
  scene.mesh = lift(scene.map, scene.lift);
  return scene;
}

Intrinsics default_intrinsics() { return Intrinsics{300.0, 160.0, 120.0, 320, 240}; }

double hit_fraction(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh) {
  long hits = 0;
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      hits += raycast(bvh, mesh, cast_ray(camera, pixel_center(x, y))).has_value();
    }
  }
  return static_cast<double>(hits) / (static_cast<double>(camera.width) * camera.height);
}

Camera sample_plausible_camera(const LabeledMesh& mesh, const Bvh& bvh, std::uint64_t seed, const Intrinsics& k) {
  const auto ground = weighted(mesh, [&](std::size_t i) {
    return mesh.triangles[i].walkable && is_ground(mesh, i) ? mesh.area(i) : 0.0;
  });
  if (ground.empty()) throw ComputationError("sample_plausible_camera: mesh has no walkable ground");
  Rng rng(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::size_t tri = ground.pick(rng);
    const Vec3 p = sample_in_triangle(mesh.triangle(tri), rng);
    const double h = rng.uniform(1.4, 1.8);
    const double yaw = rng.uniform(0.0, 2.0 * M_PI);
    const double pitch = rng.uniform(-2.0, 18.0) * M_PI / 180.0;
    const Vec3 C = p + Vec3(0, 0, h);
    const auto down = raycast(bvh, mesh, Ray(C, Vec3(0, 0, -1)));
    if (!down || std::abs(down->t - h) > 1e-6 || !mesh.triangles[down->tri_index].walkable) continue;
    if (raycast(bvh, mesh, Ray(C, Vec3(0, 0, 1)))) continue;
    const Camera cam = Camera::make(k, Pose::from_center(look_rotation(yaw, pitch), C));
    if (!half_hits(cam, bvh, mesh) || !sees_walkable_ground(cam, bvh, mesh)) continue;
    return cam;
  }
  throw ComputationError("sample_plausible_camera: no plausible camera after 1000 tries");
}

void NoiseParams::validate() const {
  if (count < 4) throw ValidationError("noise: count must be >= 4");
  if (!(pixel_noise_sigma >= 0) || !std::isfinite(pixel_noise_sigma)) {
    throw ValidationError("noise: pixel_noise_sigma must be >= 0");
  }
  if (!(outlier_fraction >= 0 && outlier_fraction < 1)) {
    throw ValidationError("noise: outlier_fraction must lie in [0, 1)");
  }
}

SynthCorrespondences synth_correspondences(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh,
                                           const NoiseParams& noise) {
  noise.validate();
  camera.validate();
  Rng rng(noise.seed);
  SynthCorrespondences out;
  const long max_tries = 200L * noise.count;
  for (long tries = 0; static_cast<int>(out.corrs.size()) < noise.count && tries < max_tries; ++tries) {
    const Vec2 px(rng.uniform(0.0, camera.width), rng.uniform(0.0, camera.height));
    const auto hit = raycast(bvh, mesh, cast_ray(camera, px));
    if (!hit) continue;
    const auto proj = project(camera, hit->point);
    if (!proj) continue;
    Correspondence c;
    c.X = hit->point;
    c.px = *proj;
    out.corrs.push_back(c);
  }
  if (static_cast<int>(out.corrs.size()) < noise.count) {
    throw ComputationError("synth_correspondences: camera sees too little of the model");
  }
  for (auto& c : out.corrs) {
    if (noise.pixel_noise_sigma > 0) {
      c.px.x() += noise.pixel_noise_sigma * rng.normal();
      c.px.y() += noise.pixel_noise_sigma * rng.normal();
    }
  }
  const int n_out = static_cast<int>(std::lround(noise.outlier_fraction * noise.count));
  std::vector<int> order(noise.count);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < n_out; ++i) {
    const std::size_t k = i + rng.index(order.size() - i);
    std::swap(order[i], order[k]);
  }
  out.is_outlier.assign(noise.count, false);
  for (int i = 0; i < n_out; ++i) {
    auto& c = out.corrs[order[i]];
    c.px = Vec2(rng.uniform(0.0, camera.width), rng.uniform(0.0, camera.height));
    out.is_outlier[order[i]] = true;
  }
  return out;
}

PedestrianSet synth_pedestrians(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh, int n,
                                std::uint64_t seed) {
  camera.validate();
  if (n < 1) throw ValidationError("synth_pedestrians: n must be >= 1");
  const Vec3 C = camera.center();
  Rng rng(seed);
  PedestrianSet set;

  // Visible horizontal surface points, found by casting random pixel rays.
  auto visible_ground = [&](bool want_walkable) -> std::optional<Hit> {
    for (int tries = 0; tries < 400; ++tries) {
      const Vec2 px(rng.uniform(0.0, camera.width), rng.uniform(0.0, camera.height));
      const auto hit = raycast(bvh, mesh, cast_ray(camera, px));
      if (!hit || discretize_normal(hit->normal) != NormalBin::kGround) continue;
      if (mesh.triangles[hit->tri_index].walkable != want_walkable) continue;
      return hit;
    }
    return std::nullopt;
  };

  const auto walk = weighted(mesh, [&](std::size_t i) {
    return mesh.triangles[i].walkable && is_ground(mesh, i) ? mesh.area(i) : 0.0;
  });
  if (walk.empty()) throw ComputationError("synth_pedestrians: mesh has no walkable ground");

  for (int tries = 0; static_cast<int>(set.gt.size()) < n && tries < 400 * n; ++tries) {
    const Vec3 foot = sample_in_triangle(mesh.triangle(walk.pick(rng)), rng);
    const double z = axis_depth(camera, foot);
    if (z < 3.0 || z > 40.0) continue;
    const auto box = person_box(camera, foot, z);
    if (!box || !in_image(camera, *box) || box->height() < 12.0) continue;
    const Vec3 head = foot + Vec3(0, 0, kHumanHeight);
    if (!visible(camera, bvh, mesh, head)) continue;
    const bool feet_seen = visible(camera, bvh, mesh, foot);
    if (!feet_seen && !visible(camera, bvh, mesh, foot + Vec3(0, 0, 0.5 * kHumanHeight))) continue;
    set.gt.push_back(*box);
    set.gt_feet.push_back(foot);
    Detection d;
    d.mixture = feet_seen ? 1 : 2;
    d.bbox = *box;
    if (d.mixture == 2) d.bbox.y2 = d.bbox.y1 + 0.5 * box->height();
    d.score = rng.normal(1.0, 0.7);
    set.candidates.push_back(d);
    set.candidate_labels.push_back(1);
  }
  if (set.gt.empty()) throw ComputationError("synth_pedestrians: no visible walkable ground");

  const int n_fp = static_cast<int>(set.gt.size());
  for (int f = 0, tries = 0; f < n_fp && tries < 400 * n_fp; ++tries) {
    std::optional<BBox> box;
    const bool off_walkable = (f % 2) == 1;
    std::optional<Hit> g;
    if (off_walkable) g = visible_ground(false);
    if (g) {
      const double z = axis_depth(camera, g->point);
      if (z < 3.0 || z > 40.0) continue;
      if (!visible(camera, bvh, mesh, g->point + Vec3(0, 0, kHumanHeight))) continue;
      box = person_box(camera, g->point, z);
    } else {
      // Floating: the feet sit in mid-air on the ray to a ground point.
      g = visible_ground(true);
      if (!g) continue;
      const double ratio = rng.uniform(1.5, 3.0);
      const double zg = axis_depth(camera, g->point);
      const Vec3 foot = C + (g->point - C) / ratio;
      if (zg / ratio < 2.0) continue;
      box = person_box(camera, foot, zg / ratio);
    }
    if (!box || !in_image(camera, *box) || box->height() < 12.0) continue;
    Detection d;
    d.bbox = *box;
    d.mixture = 1;
    d.score = rng.normal(0.6, 0.7);
    set.candidates.push_back(d);
    set.candidate_labels.push_back(-1);
    ++f;
  }
  return set;
}

std::vector<std::string> seg_class_names() {
  return {"building", "plants", "pavement", "sky", "pedestrian", "ped-sit", "bicycle", "bench", "wall"};
}

CodeRaster synth_segmentation_gt(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh,
                                 const ContextMaps& maps, const PedestrianSet& peds, std::uint64_t seed) {
  const int W = maps.labels.width, H = maps.labels.height;
  CodeRaster gt(W, H, 255);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const auto label = static_cast<SemanticLabel>(maps.labels(x, y));
      const auto bin = static_cast<NormalBin>(maps.normals(x, y));
      if (label == SemanticLabel::kUnknown) continue;
      if (label != SemanticLabel::kBuilding && label != SemanticLabel::kSky && bin == NormalBin::kWall) {
        gt(x, y) = 8;
      } else {
        gt(x, y) = static_cast<std::uint8_t>(code(label));
      }
    }
  }
  // Paints an upright w x h (meters) object standing at foot as a box.
  auto paint = [&](const Vec3& foot, double width_m, double height_m, std::uint8_t cls) {
    const double z = axis_depth(camera, foot);
    if (!(z > 0.5)) return;
    const auto px = project(camera, foot);
    if (!px) return;
    const double h = camera.f * height_m / z, w = camera.f * width_m / z;
    const PixelSpan s = covered_pixels(BBox{px->x() - 0.5 * w, px->y() - h, px->x() + 0.5 * w, px->y()});
    for (int y = std::max(0, s.y0); y < std::min(H, s.y1); ++y) {
      for (int x = std::max(0, s.x0); x < std::min(W, s.x1); ++x) {
        if (maps.zdepth(x, y) > z) gt(x, y) = cls;
      }
    }
  };
  const auto walk = weighted(mesh, [&](std::size_t i) {
    return mesh.triangles[i].walkable && is_ground(mesh, i) ? mesh.area(i) : 0.0;
  });
  Rng rng(seed);
  if (!walk.empty()) {
    const double sizes[3][2] = {{0.6, 1.1}, {1.7, 1.0}, {1.8, 0.8}};
    for (int obj = 0; obj < 6; ++obj) {
      for (int tries = 0; tries < 100; ++tries) {
        const Vec3 foot = sample_in_triangle(mesh.triangle(walk.pick(rng)), rng);
        const double z = axis_depth(camera, foot);
        if (z < 3.0 || z > 30.0 || !visible(camera, bvh, mesh, foot + Vec3(0, 0, 0.3))) continue;
        const int kind = obj % 3;
        paint(foot, sizes[kind][0], sizes[kind][1], static_cast<std::uint8_t>(5 + kind));
        break;
      }
    }
  }
  for (const auto& foot : peds.gt_feet) paint(foot, 0.4 * kHumanHeight, kHumanHeight, 4);
  return gt;
}

DepthRaster brute_force_depth(const Camera& camera, const LabeledMesh& mesh) {
  camera.validate();
  DepthRaster depth(camera.width, camera.height, std::numeric_limits<double>::infinity());
  parallel_for(camera.height, [&](int y) {
    for (int x = 0; x < camera.width; ++x) {
      const Ray ray = cast_ray(camera, pixel_center(x, y));
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < mesh.size(); ++i) {
        const auto& t = mesh.triangles[i];
        const auto hit = ray_triangle_t(ray.origin, ray.dir, mesh.vertices[t.v[0]], mesh.vertices[t.v[1]],
                                        mesh.vertices[t.v[2]]);
        if (hit && *hit < best) best = *hit;
      }
      depth(x, y) = best;
    }
  });
  return depth;
}

std::vector<Vec3> sample_surface_points(const LabeledMesh& mesh, int n, std::uint64_t seed, double wall_weight) {
  if (n < 0) throw ValidationError("sample_surface_points: n must be >= 0");
  if (!(wall_weight > 0)) throw ValidationError("sample_surface_points: wall_weight must be > 0");
  const auto w = weighted(mesh, [&](std::size_t i) {
    const bool flat = std::abs(mesh.normal(i).z()) > 1.0 - 1e-9;
    return mesh.area(i) * (flat ? 1.0 : wall_weight);
  });
  if (w.empty()) throw ValidationError("sample_surface_points: mesh has no area");
  Rng rng(seed);
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.push_back(sample_in_triangle(mesh.triangle(w.pick(rng)), rng));
  return pts;
}

}  // namespace geolift
