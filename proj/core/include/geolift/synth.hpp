#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geolift/detect_context.hpp"
#include "geolift/gis_map.hpp"
#include "geolift/raster.hpp"
#include "geolift/render.hpp"
#include "geolift/resection.hpp"

namespace geolift {

struct SceneSpec {
  std::uint64_t seed = 0;
  // Courtyard is [0, extent]^2, tiled in square cells.
  double extent = 48.0;
  double tile = 8.0;
  int buildings = 4;
  double min_height = 6.0;
  double max_height = 16.0;
  // Adds a raised walkable platform and a tilted ramp.
  bool two_level_ground = true;
  // Fraction of non-building tiles that are walkable pavement (rest plants).
  double walkable_fraction = 0.7;

  void validate() const;
};

struct Scene {
  GisMap map;
  LiftSpec lift;
  LabeledMesh mesh;
};

// Deterministic in spec.seed. Throws ValidationError when the buildings do not
// fit the tile grid.
Scene make_scene(const SceneSpec& spec);

// 320x240, f = 300, principal point at the image center.
Intrinsics default_intrinsics();

// Camera 1.4-1.8 m above a walkable point, tilt <= 20 deg, at least half of
// the pixels hitting the model and some walkable ground 3-40 m ahead.
// Throws ComputationError after 1000 tries.
Camera sample_plausible_camera(const LabeledMesh& mesh, const Bvh& bvh, std::uint64_t seed,
                               const Intrinsics& k = default_intrinsics());

// Fraction of pixels whose ray hits the model.
double hit_fraction(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh);

struct NoiseParams {
  double pixel_noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  int count = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthCorrespondences {
  std::vector<Correspondence> corrs;
  std::vector<bool> is_outlier;
};

// Points on surfaces visible from camera; exactly round(fraction * count)
// pixels replaced by uniform in-image pixels.
SynthCorrespondences synth_correspondences(const Camera& camera, const Bvh& bvh,
                                           const LabeledMesh& mesh, const NoiseParams& noise);

struct PedestrianSet {
  std::vector<BBox> gt;
  std::vector<Detection> candidates;
  // +1 for candidates derived from a GT box, -1 for synthetic false positives.
  std::vector<int> candidate_labels;
  std::vector<Vec3> gt_feet;
};

// Throws ComputationError when no walkable ground is visible.
PedestrianSet synth_pedestrians(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh,
                                int n, std::uint64_t seed);

// Segmentation classes: building, plants, pavement, sky, pedestrian,
// ped-sit, bicycle, bench, wall.
inline constexpr int kNumSegClasses = 9;
std::vector<std::string> seg_class_names();

// Ground-truth labels from a render at the true pose: GIS labels map to the
// first four classes, non-building vertical faces to wall, unknown to 255.
// Pedestrians from `peds` and a few seeded sitting people, bicycles and
// benches on visible walkable ground are painted where nothing nearer
// occludes them.
CodeRaster synth_segmentation_gt(const Camera& camera, const Bvh& bvh, const LabeledMesh& mesh,
                                 const ContextMaps& maps, const PedestrianSet& peds, std::uint64_t seed);

// Exhaustive per-pixel nearest-hit depth; independent of the BVH.
DepthRaster brute_force_depth(const Camera& camera, const LabeledMesh& mesh);

// Area-weighted surface samples; non-horizontal faces get wall_weight times
// their area share.
std::vector<Vec3> sample_surface_points(const LabeledMesh& mesh, int n, std::uint64_t seed,
                                        double wall_weight = 4.0);

}  // namespace geolift
