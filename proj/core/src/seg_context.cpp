#include "geolift/seg_context.hpp"

#include <algorithm>
#include <cmath>

#include "geolift/labels.hpp"

namespace geolift {

std::vector<int> DiscFeatureParams::radii(double f) const {
  if (!(f > 0)) throw ValidationError("disc features: focal length must be > 0");
  std::vector<int> out;
  for (double deg : angular_errors_deg) {
    if (!(deg >= 0 && deg < 90)) throw ValidationError("disc features: angular error must lie in [0, 90)");
    out.push_back(static_cast<int>(std::lround(f * std::tan(deg * M_PI / 180.0))));
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) {
      throw ValidationError("disc features: radii must be strictly increasing (got " +
                            std::to_string(out[i - 1]) + " then " + std::to_string(out[i]) + ")");
    }
  }
  return out;
}

std::vector<int> disc_row_spans(int r) {
  if (r < 0) throw ValidationError("disc_row_spans: negative radius");
  std::vector<int> spans(2 * r + 1);
  for (int dy = -r; dy <= r; ++dy) {
    int hw = static_cast<int>(std::sqrt(static_cast<double>(r * r - dy * dy)));
    while (hw * hw + dy * dy > r * r) --hw;
    while ((hw + 1) * (hw + 1) + dy * dy <= r * r) ++hw;
    spans[dy + r] = hw;
  }
  return spans;
}

namespace {

// Counts codes [0, num_counted) in discs; codes >= num_counted only enlarge N.
FeatureStack disc_features(const CodeRaster& codes, std::span<const int> radii, int num_counted,
                           const std::vector<std::string>& class_names, const std::string& prefix) {
  const int W = codes.width, H = codes.height;
  if (W <= 0 || H <= 0) throw ValidationError(prefix + " disc features: empty raster");
  std::vector<std::string> names;
  for (int r : radii) {
    if (r < 0) throw ValidationError(prefix + " disc features: negative radius");
    for (const auto& c : class_names) names.push_back(prefix + "_r" + std::to_string(r) + "_" + c);
  }
  FeatureStack out(W, H, names);

  // Row prefix sums per counted code: prefix[(k * H + y) * (W + 1) + x].
  std::vector<int> prefix_sums(static_cast<std::size_t>(num_counted) * H * (W + 1), 0);
  for (int k = 0; k < num_counted; ++k) {
    for (int y = 0; y < H; ++y) {
      int* row = prefix_sums.data() + (static_cast<std::size_t>(k) * H + y) * (W + 1);
      for (int x = 0; x < W; ++x) row[x + 1] = row[x] + (codes(x, y) == k ? 1 : 0);
    }
  }

  std::vector<long> counts(num_counted);
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const int r = radii[ri];
    const auto spans = disc_row_spans(r);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        std::fill(counts.begin(), counts.end(), 0);
        long total = 0;
        for (int dy = std::max(-r, -y); dy <= std::min(r, H - 1 - y); ++dy) {
          const int hw = spans[dy + r];
          const int xa = std::max(0, x - hw), xb = std::min(W - 1, x + hw);
          total += xb - xa + 1;
          for (int k = 0; k < num_counted; ++k) {
            const int* row = prefix_sums.data() + (static_cast<std::size_t>(k) * H + y + dy) * (W + 1);
            counts[k] += row[xb + 1] - row[xa];
          }
        }
        float* px = &out.at(x, y, static_cast<int>(ri) * num_counted);
        for (int k = 0; k < num_counted; ++k) {
          px[k] = static_cast<float>(static_cast<double>(counts[k]) / static_cast<double>(total));
        }
      }
    }
  }
  return out;
}

}  // namespace

FeatureStack disc_label_features(const CodeRaster& labels, std::span<const int> radii) {
  std::vector<std::string> names;
  for (int k = 0; k < 4; ++k) names.emplace_back(to_string(static_cast<SemanticLabel>(k)));
  return disc_features(labels, radii, 4, names, "label");
}

FeatureStack disc_normal_features(const CodeRaster& normals, std::span<const int> radii) {
  std::vector<std::string> names;
  for (int k = 0; k < 3; ++k) names.emplace_back(to_string(static_cast<NormalBin>(k)));
  return disc_features(normals, radii, 3, names, "normal");
}

FeatureStack depth_hog(const DepthRaster& depth) {
  const int W = depth.width, H = depth.height;
  if (W < kHogCell || H < kHogCell) throw ValidationError("depth_hog: raster smaller than one 8x8 cell");
  std::vector<double> disp(static_cast<std::size_t>(W) * H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double d = depth(x, y);
      disp[static_cast<std::size_t>(y) * W + x] = (std::isfinite(d) && d > 0) ? 1.0 / d : 0.0;
    }
  }
  auto D = [&](int x, int y) {
    x = std::clamp(x, 0, W - 1);
    y = std::clamp(y, 0, H - 1);
    return disp[static_cast<std::size_t>(y) * W + x];
  };
  const int cw = (W + kHogCell - 1) / kHogCell, ch = (H + kHogCell - 1) / kHogCell;
  std::vector<double> hist(static_cast<std::size_t>(cw) * ch * kHogBins, 0.0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double gx = D(x + 1, y) - D(x - 1, y);
      const double gy = D(x, y + 1) - D(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx) * 180.0 / M_PI;
      if (ang < 0) ang += 180.0;
      if (ang >= 180.0) ang -= 180.0;
      const int bin = std::min(kHogBins - 1, static_cast<int>(ang / (180.0 / kHogBins)));
      hist[(static_cast<std::size_t>(y / kHogCell) * cw + x / kHogCell) * kHogBins + bin] += mag;
    }
  }
  constexpr double kEps = 1e-6;
  for (std::size_t c = 0; c < static_cast<std::size_t>(cw) * ch; ++c) {
    double n2 = kEps * kEps;
    for (int b = 0; b < kHogBins; ++b) n2 += hist[c * kHogBins + b] * hist[c * kHogBins + b];
    const double inv = 1.0 / std::sqrt(n2);
    for (int b = 0; b < kHogBins; ++b) hist[c * kHogBins + b] *= inv;
  }
  std::vector<std::string> names;
  for (int b = 0; b < kHogBins; ++b) names.push_back("hog_" + std::to_string(b));
  FeatureStack out(W, H, names);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double* h = &hist[(static_cast<std::size_t>(y / kHogCell) * cw + x / kHogCell) * kHogBins];
      for (int b = 0; b < kHogBins; ++b) out.at(x, y, b) = static_cast<float>(h[b]);
    }
  }
  return out;
}

Raster<double> dpm_score_map(std::span<const Detection> detections, std::string_view cls, int width,
                             int height, double floor) {
  if (width <= 0 || height <= 0) throw ValidationError("dpm_score_map: empty raster");
  Raster<double> map(width, height, floor);
  for (const auto& d : detections) {
    if (d.cls != cls || !d.bbox.valid()) continue;
    const PixelSpan s = covered_pixels(d.bbox);
    for (int y = std::max(0, s.y0); y < std::min(height, s.y1); ++y) {
      for (int x = std::max(0, s.x0); x < std::min(width, s.x1); ++x) {
        map(x, y) = std::max(map(x, y), d.score);
      }
    }
  }
  return map;
}

FeatureStack build_pixel_features(const ContextMaps& maps, double f, std::span<const Detection> detections,
                                  const PixelFeatureOptions& options) {
  const std::vector<int> radii = options.disc.radii(f);
  const FeatureStack labels = disc_label_features(maps.labels, radii);
  const FeatureStack normals = disc_normal_features(maps.normals, radii);
  const FeatureStack hog = depth_hog(maps.depth);
  std::vector<std::string> dpm_names;
  for (const auto& c : options.detector_classes) dpm_names.push_back("dpm_" + c);
  FeatureStack dpm(maps.labels.width, maps.labels.height, dpm_names);
  for (std::size_t c = 0; c < options.detector_classes.size(); ++c) {
    const auto m = dpm_score_map(detections, options.detector_classes[c], dpm.width, dpm.height,
                                 options.dpm_floor);
    for (int y = 0; y < dpm.height; ++y) {
      for (int x = 0; x < dpm.width; ++x) dpm.at(x, y, static_cast<int>(c)) = static_cast<float>(m(x, y));
    }
  }
  return FeatureStack::concat({&labels, &normals, &hog, &dpm});
}

FeatureStack select_channels(const FeatureStack& stack, std::span<const std::string> prefixes) {
  std::vector<int> keep;
  std::vector<std::string> names;
  for (int c = 0; c < stack.channels(); ++c) {
    for (const auto& p : prefixes) {
      if (stack.names[c].rfind(p, 0) == 0) {
        keep.push_back(c);
        names.push_back(stack.names[c]);
        break;
      }
    }
  }
  FeatureStack out(stack.width, stack.height, names);
  for (int y = 0; y < stack.height; ++y) {
    for (int x = 0; x < stack.width; ++x) {
      for (std::size_t i = 0; i < keep.size(); ++i) out.at(x, y, static_cast<int>(i)) = stack.at(x, y, keep[i]);
    }
  }
  return out;
}

}  // namespace geolift
