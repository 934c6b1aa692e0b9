#pragma once

#include <span>
#include <string>
#include <vector>

#include "geolift/detect_context.hpp"
#include "geolift/raster.hpp"

namespace geolift {

struct Histogram {
  std::vector<double> edges;  // bins [edges[i], edges[i+1]); last bin open-ended
  std::vector<long> counts;
  std::vector<double> log_counts;  // log10(1 + count)
};

struct DepthMetrics {
  double frac_delta_1 = 0.0;  // delta < 1.25
  double frac_delta_2 = 0.0;  // delta < 1.25^2
  double frac_delta_3 = 0.0;  // delta < 1.25^3
  double mean_rel_err = 0.0;
  double median_rel_err = 0.0;
  Histogram abs_err_histogram;
  Histogram rel_err_histogram;
  long valid_pixel_count = 0;
  long excluded_pixel_count = 0;
};

// Pixels where either value is non-finite or non-positive are excluded.
// Throws ValidationError on a shape mismatch or when nothing is valid.
DepthMetrics depth_metrics(const DepthRaster& est, const DepthRaster& gt);

struct PrecisionRecall {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<bool> true_positive;  // per ranked detection
  double ap = 0.0;
};

struct GroundTruthBox {
  BBox box;
  int image = 0;
};

// PASCAL matching: descending score, each detection takes the unmatched GT in
// its image with the highest IoU >= iou_threshold. All-point interpolated AP,
// or the 11-point variant. Throws ValidationError without GT boxes.
PrecisionRecall average_precision(std::span<const Detection> detections,
                                  std::span<const GroundTruthBox> gt, double iou_threshold = 0.5,
                                  bool eleven_point = false);

// Probability that a random positive outscores a random negative (ties 1/2).
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct IoUReport {
  std::vector<double> per_class;  // NaN for classes absent from both rasters
  std::vector<bool> present_in_gt;
  double overall = 0.0;
};

IoUReport segmentation_iou(const CodeRaster& pred, const CodeRaster& gt, int num_classes);
// Accumulates intersection/union over several raster pairs.
IoUReport segmentation_iou(std::span<const CodeRaster> preds, std::span<const CodeRaster> gts,
                           int num_classes);

std::string depth_metrics_to_json(const DepthMetrics& m);
std::string pr_to_json(const PrecisionRecall& pr);
std::string pr_to_csv(const PrecisionRecall& pr);
std::string iou_to_json(const IoUReport& r);

}  // namespace geolift
