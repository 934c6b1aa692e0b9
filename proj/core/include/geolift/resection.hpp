#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geolift/error.hpp"
#include "geolift/geometry.hpp"
#include "geolift/gis_map.hpp"
#include "geolift/render.hpp"

namespace geolift {

struct Correspondence {
  Vec2 px = Vec2::Zero();
  Vec3 X = Vec3::Zero();
};

struct RansacParams {
  double inlier_px = 4.0;
  double confidence = 0.999;
  int max_iters = 10000;
  std::uint64_t seed = 0;
  // A hypothesis needs this much support (capped at the correspondence
  // count, never below 4) before it counts as a consensus.
  int min_inliers = 6;

  void validate() const;
};

// Squared reprojection error in pixels; +inf when X is not in front.
double reprojection_error_sq(const Pose& pose, const Intrinsics& k, const Correspondence& c);
double reprojection_cost(const Pose& pose, const Intrinsics& k, std::span<const Correspondence> corrs);

// Minimal absolute pose from three correspondences: up to four poses, each
// reprojecting the three points. Throws ValidationError for collinear world
// points or coincident bearings.
std::vector<Pose> solve_p3p(std::span<const Correspondence, 3> corrs, const Intrinsics& k);

// Pick the candidate with the smallest reprojection error on `check`
// (typically the 4th correspondence, or all of them).
std::optional<Pose> disambiguate(std::span<const Pose> candidates, const Intrinsics& k,
                                 std::span<const Correspondence> check);

struct RansacResult {
  Pose pose;
  std::vector<int> inliers;
  int iterations = 0;
};

// Throws ValidationError with fewer than 4 correspondences and
// ComputationError when no hypothesis reaches the consensus size.
RansacResult ransac_resect(std::span<const Correspondence> corrs, const Intrinsics& k,
                           const RansacParams& params);

// Damped Gauss-Newton on the summed squared reprojection error, at most 20
// steps; never returns a pose with a higher cost than the input.
// Throws ValidationError with fewer than 4 correspondences.
Pose refine_pose(const Pose& pose, std::span<const Correspondence> inliers, const Intrinsics& k,
                 Diagnostics* diag = nullptr);

struct ClusterIndex {
  int k = 0;
  std::vector<int> assignments;
  std::vector<Vec3> centroids;
  // Sorted point ids per cluster; a point appears in every cluster that has
  // a camera seeing it.
  std::vector<std::vector<int>> points;
  double sse = 0.0;
};

// k-means++ seeding + Lloyd iterations over camera centers. visibility[i]
// lists the point ids seen by camera i (may be empty).
ClusterIndex cluster_cameras(std::span<const Vec3> positions, int k, std::uint64_t seed,
                             const std::vector<std::vector<int>>& visibility = {});
double clustering_sse(std::span<const Vec3> positions, std::span<const int> assignments, int k);

struct PlausibilityLimits {
  double max_height_m = 4.0;
  double max_tilt_deg = 30.0;
};

struct PlausibilityReport {
  double height_m = 0.0;
  double tilt_deg = 0.0;
  bool below_ground = false;
  bool ground_found = false;
  bool accept = false;
  std::string reason;
};

// Angle between the camera down axis (+y in camera frame) and gravity, degrees.
double camera_tilt_deg(const Pose& pose);

PlausibilityReport plausibility_filter(const Pose& pose, const Bvh& bvh, const LabeledMesh& mesh,
                                       const PlausibilityLimits& limits = {});

struct ClusterMatches {
  int id = 0;
  std::vector<Correspondence> matches;
};

struct ClusterResection {
  Pose pose;
  int cluster_id = -1;
  std::vector<int> inliers;
  PlausibilityReport report;
};

// Resection per cluster, drop implausible poses (when use_filter), keep the
// survivor with most inliers; ties go to the lower cluster id.
std::optional<ClusterResection> resect_against_clusters(std::span<const ClusterMatches> clusters,
                                                        const Intrinsics& k,
                                                        const RansacParams& params,
                                                        const Bvh& bvh, const LabeledMesh& mesh,
                                                        bool use_filter = true,
                                                        const PlausibilityLimits& limits = {});

// correspondences.json {"clusters":[{"id":int,"matches":[{"px":[u,v],"X":[x,y,z]}]}]}
std::vector<ClusterMatches> parse_correspondences(std::string_view text);
std::string correspondences_to_json(std::span<const ClusterMatches> clusters);
std::string report_to_json(const PlausibilityReport& report);

}  // namespace geolift
