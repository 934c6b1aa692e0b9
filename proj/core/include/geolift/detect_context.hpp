#pragma once

#include <array>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geolift/geometry.hpp"
#include "geolift/gis_map.hpp"
#include "geolift/render.hpp"

namespace geolift {

inline constexpr double kHumanHeight = 1.7;

struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const { return x2 > x1 && y2 > y1; }
};

double iou(const BBox& a, const BBox& b);

struct Detection {
  BBox bbox;
  double score = 0.0;
  // 1 full body, 2 upper half, 3 head.
  int mixture = 1;
  std::string cls = "pedestrian";
  // Image the detection belongs to; only used when pooling across images.
  int image = 0;
};

// Width unchanged, top edge fixed, height scaled by the mixture.
BBox hypothesize_fullbody(const Detection& det);

// [v (h - h_mu)^2, w, n, 1 - v]; all but the last entry are zero when invalid.
struct HeightFeature {
  double e = 0.0;
  double w = 0.0;
  double n = 0.0;
  double inv = 1.0;
  // Height estimate behind e; NaN when invalid.
  double height = std::numeric_limits<double>::quiet_NaN();

  std::array<double, 4> values() const { return {e, w, n, inv}; }
  static HeightFeature invalid() { return {}; }
};

// Height from the foot ray: every model intersection z gives h = z / f * h_im;
// the candidate closest to kHumanHeight wins, nearer hit on ties.
HeightFeature foot_height_feature(const BBox& fullbody, const Camera& camera, const Bvh& bvh,
                                  const LabeledMesh& mesh);
// Height from the expected depth z_o = h_mu * f / h_im along the head ray.
HeightFeature head_depth_feature(const BBox& fullbody, const Camera& camera, const Bvh& bvh,
                                 const LabeledMesh& mesh);

// Per band (top, center, bottom): 5 label bins then 4 normal bins.
struct BandHistograms {
  static constexpr int kPerBand = kNumSemanticLabels + kNumNormalBins;
  static constexpr int kSize = 3 * kPerBand;
  std::array<double, kSize> values{};
};

// Integer row range [row0, row1) and column range covered by a box: every
// pixel whose unit square overlaps the box.
struct PixelSpan {
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
};
PixelSpan covered_pixels(const BBox& box);

// Throws ValidationError for a zero-area box.
BandHistograms band_histograms(const BBox& fullbody, const ContextMaps& maps);

inline constexpr int kContextFeatureDim = 1 + 4 + 4 + 3 * BandHistograms::kSize;
using ContextFeature = std::array<double, kContextFeatureDim>;

ContextFeature build_feature(const Detection& det, const Camera& camera, const Bvh& bvh,
                             const LabeledMesh& mesh, const ContextMaps& maps);
std::vector<std::string> context_feature_names();

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  int dim() const { return static_cast<int>(weights.size()); }
};

struct SvmOptions {
  double C = 4.0;
  double pos_weight = 4.0;
  double neg_weight = 1.0;
  int max_epochs = 1000;
  double gap_tol = 1e-6;
};

struct SvmResult {
  LinearModel model;
  // Dual objective (minimization form) after each epoch.
  std::vector<double> dual_objective;
  double primal_objective = 0.0;
  double duality_gap = 0.0;
  int epochs = 0;
};

// L2-regularized weighted hinge loss, dual coordinate descent in fixed order.
// The bias is learned as the weight of a constant 1 feature.
// Throws ValidationError for single-class data or ragged rows.
SvmResult train_rescorer(const std::vector<std::vector<double>>& features, std::span<const int> labels,
                         const SvmOptions& options = {});

// Throws ValidationError on a dimension mismatch.
double rescore(const LinearModel& model, std::span<const double> feature);

// Greedy by descending score; ties keep input order; drops boxes with
// IoU > threshold against an already kept box.
std::vector<Detection> nms(std::span<const Detection> detections, double iou_threshold = 0.5);

// detections.json [{"bbox":[x1,y1,x2,y2],"score":f,"mixture":1|2|3,"class":str}]
std::vector<Detection> parse_detections(std::string_view text);
std::string detections_to_json(std::span<const Detection> detections);
std::vector<BBox> parse_boxes(std::string_view text);
std::string boxes_to_json(std::span<const BBox> boxes, std::span<const int> images = {});
std::vector<int> parse_box_images(std::string_view text);

// features.csv: header, 90 feature columns, then a label column.
std::string features_to_csv(std::span<const ContextFeature> features, std::span<const int> labels);
void parse_features_csv(std::string_view text, std::vector<std::vector<double>>& features,
                        std::vector<int>& labels);

// model.json {"weights":[...],"bias":f}
std::string model_to_json(const LinearModel& model);
LinearModel parse_model(std::string_view text);

}  // namespace geolift
