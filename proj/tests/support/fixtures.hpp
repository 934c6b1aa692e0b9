#pragma once

// Small hand-built scenes and cameras shared by the tests.

#include <string>

#include "geolift/geometry.hpp"
#include "geolift/gis_map.hpp"
#include "geolift/random.hpp"
#include "geolift/render.hpp"

namespace geolift::fixture {

GisPolygon rect(const std::string& id, double x0, double y0, double x1, double y1, SemanticLabel label,
                bool walkable);

// Square floor [-h, h]^2 at elevation z.
LabeledMesh floor_mesh(double half, double z = 0.0, SemanticLabel label = SemanticLabel::kPavement,
                       bool walkable = true);

// Vertical wall in the plane x = x0 spanning y in [y0, y1], z in [z0, z1].
LabeledMesh wall_mesh(double x0, double y0, double y1, double z0, double z1,
                      SemanticLabel label = SemanticLabel::kBuilding);

LabeledMesh merge(const LabeledMesh& a, const LabeledMesh& b);

// Camera rows right, down, forward for a heading yaw (radians from +x) and a
// downward pitch.
Mat3 look(double yaw, double pitch_down);

Camera make_camera(const Intrinsics& k, const Mat3& R, const Vec3& center);

// Looking straight down from (0, 0, height).
Camera nadir_camera(const Intrinsics& k, double height);

Mat3 random_rotation(Rng& rng);

// Fresh directory under the system temp dir.
std::string temp_dir(const std::string& name);

}  // namespace geolift::fixture
