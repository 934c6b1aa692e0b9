#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geolift/detect_context.hpp"
#include "geolift/raster.hpp"
#include "geolift/render.hpp"

namespace geolift {

struct DiscFeatureParams {
  std::vector<double> angular_errors_deg{0.0, 1.0, 3.0, 5.0};

  // r = round(f * tan(theta)); throws ValidationError unless strictly increasing.
  std::vector<int> radii(double f) const;
};

// Horizontal half-width of the disc |d| <= r at each row offset -r..r.
std::vector<int> disc_row_spans(int r);

// 4 radii x {building, plants, pavement, sky}. unknown counts in the
// denominator only.
FeatureStack disc_label_features(const CodeRaster& labels, std::span<const int> radii);
// 4 radii x {ground, ceiling, wall}. none counts in the denominator only.
FeatureStack disc_normal_features(const CodeRaster& normals, std::span<const int> radii);

// HOG on disparity 1/depth (0 where +inf): central differences with clamped
// borders, 9 unsigned orientation bins over [0, 180), 8x8 cells, per-cell L2
// normalization; every pixel takes its cell's histogram.
// Throws ValidationError if the raster is smaller than one cell.
inline constexpr int kHogCell = 8;
inline constexpr int kHogBins = 9;
FeatureStack depth_hog(const DepthRaster& depth);

// max score over boxes of class `cls` covering the pixel, floor elsewhere.
Raster<double> dpm_score_map(std::span<const Detection> detections, std::string_view cls,
                             int width, int height, double floor = -2.0);

struct PixelFeatureOptions {
  DiscFeatureParams disc;
  std::vector<std::string> detector_classes{"pedestrian"};
  double dpm_floor = -2.0;
};

// [labels(16), normals(12), depth HOG(9), DPM(one per class)]
FeatureStack build_pixel_features(const ContextMaps& maps, double f,
                                  std::span<const Detection> detections,
                                  const PixelFeatureOptions& options = {});

// Keep channels whose name starts with one of the prefixes, in stack order.
FeatureStack select_channels(const FeatureStack& stack, std::span<const std::string> prefixes);

// Multiclass linear scorer: scores = W x + b.
struct MultiLinearModel {
  Eigen::MatrixXd W;  // classes x dim
  Eigen::VectorXd b;  // classes
  std::vector<std::string> channel_names;

  int classes() const { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }
};

struct PixelSamples {
  Eigen::MatrixXd X;  // n x dim
  std::vector<int> y;
};

// Every stride-th pixel starting at a seeded offset in [0, stride).
// Labels >= num_classes are skipped.
PixelSamples sample_pixels(const FeatureStack& stack, const CodeRaster& gt, int stride,
                           std::uint64_t seed, int num_classes);
void append_samples(PixelSamples& into, const PixelSamples& more);

struct LogisticOptions {
  double lambda = 1e-4;
  int max_iters = 500;
  double grad_tol = 1e-6;
  double initial_step = 1.0;
};

struct LogisticResult {
  MultiLinearModel model;
  std::vector<double> loss;
  int iterations = 0;
};

// Mean cross-entropy + lambda / 2 * |W|^2 (bias unpenalized). Fills gradients
// when the pointers are non-null.
double logistic_loss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const PixelSamples& s,
                     double lambda, Eigen::MatrixXd* grad_W = nullptr,
                     Eigen::VectorXd* grad_b = nullptr);

// Full-batch gradient descent with Armijo backtracking from a fixed initial
// step each iteration. Throws ValidationError with fewer than two classes.
LogisticResult train_pixel_classifier(const PixelSamples& samples, int num_classes,
                                      const LogisticOptions& options = {});

struct LabelPrediction {
  CodeRaster labels;
  // Pixel-interleaved class scores.
  std::vector<float> scores;
};

// Argmax per pixel; ties go to the lower class. Throws on dim mismatch.
LabelPrediction predict_labels(const MultiLinearModel& model, const FeatureStack& stack);

std::string seg_model_to_json(const MultiLinearModel& model);
MultiLinearModel parse_seg_model(std::string_view text);

}  // namespace geolift
