#include "geolift/detect_context.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <nlohmann/json.hpp>
#include <sstream>

namespace geolift {

using json = nlohmann::ordered_json;

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

BBox hypothesize_fullbody(const Detection& det) {
  if (det.mixture < 1 || det.mixture > 3) throw ValidationError("detection: mixture must be 1, 2 or 3");
  BBox b = det.bbox;
  b.y2 = b.y1 + det.mixture * det.bbox.height();
  return b;
}

namespace {

double axis_depth(const Camera& camera, const Ray& ray, double t) {
  return t * ray.dir.dot(camera.optical_axis());
}

HeightFeature make_feature(double h, const Hit& ground, const LabeledMesh& mesh) {
  HeightFeature f;
  f.inv = 0.0;
  f.height = h;
  f.e = (h - kHumanHeight) * (h - kHumanHeight);
  f.w = mesh.triangles[ground.tri_index].walkable ? 1.0 : 0.0;
  f.n = discretize_normal(ground.normal) == NormalBin::kGround ? 1.0 : 0.0;
  return f;
}

}  // namespace

HeightFeature foot_height_feature(const BBox& fullbody, const Camera& camera, const Bvh& bvh,
                                  const LabeledMesh& mesh) {
  if (!fullbody.valid()) throw ValidationError("foot_height_feature: empty box");
  const double him = fullbody.height();
  const Ray ray = cast_ray(camera, Vec2(0.5 * (fullbody.x1 + fullbody.x2), fullbody.y2));
  const auto hits = raycast_all(bvh, mesh, ray);
  const Hit* best = nullptr;
  double best_h = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& hit : hits) {
    const double h = axis_depth(camera, ray, hit.t) / camera.f * him;
    const double cost = (h - kHumanHeight) * (h - kHumanHeight);
    // Hits arrive nearest first, so strict < keeps the nearer one on ties.
    if (cost < best_cost) {
      best_cost = cost;
      best = &hit;
      best_h = h;
    }
  }
  if (!best) return HeightFeature::invalid();
  return make_feature(best_h, *best, mesh);
}

HeightFeature head_depth_feature(const BBox& fullbody, const Camera& camera, const Bvh& bvh,
                                 const LabeledMesh& mesh) {
  if (!fullbody.valid()) throw ValidationError("head_depth_feature: empty box");
  const double zo = kHumanHeight * camera.f / fullbody.height();
  const Ray ray = cast_ray(camera, Vec2(0.5 * (fullbody.x1 + fullbody.x2), fullbody.y1));
  const double cosine = ray.dir.dot(camera.optical_axis());
  if (!(cosine > 0)) return HeightFeature::invalid();
  const double t_head = zo / cosine;
  const auto first = raycast(bvh, mesh, ray);
  if (first && first->t < t_head) return HeightFeature::invalid();
  const Vec3 head = ray.point_at(t_head);
  const auto ground = raycast(bvh, mesh, Ray(head, Vec3(0, 0, -1)));
  if (!ground) return HeightFeature::invalid();
  return make_feature(head.z() - ground->point.z(), *ground, mesh);
}

PixelSpan covered_pixels(const BBox& box) {
  PixelSpan s;
  s.x0 = static_cast<int>(std::floor(box.x1));
  s.x1 = static_cast<int>(std::ceil(box.x2));
  s.y0 = static_cast<int>(std::floor(box.y1));
  s.y1 = static_cast<int>(std::ceil(box.y2));
  return s;
}

BandHistograms band_histograms(const BBox& fullbody, const ContextMaps& maps) {
  if (!fullbody.valid() || !std::isfinite(fullbody.area())) {
    throw ValidationError("band_histograms: box has zero area");
  }
  const PixelSpan span = covered_pixels(fullbody);
  const int rows = span.y1 - span.y0;
  const int base = rows / 3, rem = rows % 3;
  const int band_rows[3] = {base + (rem > 0 ? 1 : 0), base + (rem > 1 ? 1 : 0), base};
  const long cols = span.x1 - span.x0;
  const int W = maps.labels.width, H = maps.labels.height;
  const int cx0 = std::clamp(span.x0, 0, W), cx1 = std::clamp(span.x1, 0, W);

  BandHistograms out;
  int row = span.y0;
  for (int b = 0; b < 3; ++b) {
    const int r0 = row, r1 = row + band_rows[b];
    row = r1;
    const double total = static_cast<double>(band_rows[b]) * cols;
    if (total <= 0) continue;
    std::array<double, kNumSemanticLabels> lab{};
    std::array<double, kNumNormalBins> nor{};
    double inside = 0.0;
    for (int y = std::max(r0, 0); y < std::min(r1, H); ++y) {
      for (int x = cx0; x < cx1; ++x) {
        lab[maps.labels(x, y)] += 1.0;
        nor[maps.normals(x, y)] += 1.0;
        inside += 1.0;
      }
    }
    lab[code(SemanticLabel::kUnknown)] += total - inside;
    nor[code(NormalBin::kNone)] += total - inside;
    double* dst = out.values.data() + b * BandHistograms::kPerBand;
    for (int i = 0; i < kNumSemanticLabels; ++i) dst[i] = lab[i] / total;
    for (int i = 0; i < kNumNormalBins; ++i) dst[kNumSemanticLabels + i] = nor[i] / total;
  }
  return out;
}

ContextFeature build_feature(const Detection& det, const Camera& camera, const Bvh& bvh,
                             const LabeledMesh& mesh, const ContextMaps& maps) {
  if (!det.bbox.valid()) throw ValidationError("detection: bbox must satisfy x2 > x1 and y2 > y1");
  const BBox full = hypothesize_fullbody(det);
  ContextFeature f{};
  f[0] = det.score;
  const auto fi = foot_height_feature(full, camera, bvh, mesh).values();
  const auto fo = head_depth_feature(full, camera, bvh, mesh).values();
  std::copy(fi.begin(), fi.end(), f.begin() + 1);
  std::copy(fo.begin(), fo.end(), f.begin() + 5);
  const auto hb = band_histograms(full, maps);
  std::copy(hb.values.begin(), hb.values.end(), f.begin() + 9 + (det.mixture - 1) * BandHistograms::kSize);
  return f;
}

std::vector<std::string> context_feature_names() {
  std::vector<std::string> names{"score"};
  for (const char* side : {"foot", "head"}) {
    for (const char* v : {"e", "w", "n", "inv"}) names.push_back(std::string(side) + "_" + v);
  }
  const char* bands[3] = {"top", "center", "bottom"};
  for (int m = 1; m <= 3; ++m) {
    for (const char* band : bands) {
      for (int l = 0; l < kNumSemanticLabels; ++l) {
        names.push_back("m" + std::to_string(m) + "_" + band + "_" +
                        std::string(to_string(static_cast<SemanticLabel>(l))));
      }
      for (int n = 0; n < kNumNormalBins; ++n) {
        names.push_back("m" + std::to_string(m) + "_" + band + "_" +
                        std::string(to_string(static_cast<NormalBin>(n))));
      }
    }
  }
  return names;
}

double rescore(const LinearModel& model, std::span<const double> feature) {
  if (static_cast<int>(feature.size()) != model.dim()) {
    throw ValidationError("rescore: feature dimension " + std::to_string(feature.size()) +
                          " does not match model dimension " + std::to_string(model.dim()));
  }
  double s = model.bias;
  for (std::size_t i = 0; i < feature.size(); ++i) s += model.weights[i] * feature[i];
  return s;
}

std::vector<Detection> nms(std::span<const Detection> detections, double iou_threshold) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  std::vector<Detection> kept;
  for (std::size_t i : order) {
    const Detection& d = detections[i];
    if (!std::isfinite(d.score)) throw ValidationError("nms: non-finite score");
    bool suppressed = false;
    for (const auto& k : kept) {
      if (k.image == d.image && iou(k.bbox, d.bbox) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

namespace {

BBox box_from(const json& v, const char* what) {
  if (!v.is_array() || v.size() != 4) throw ValidationError(std::string(what) + ": bbox must be [x1,y1,x2,y2]");
  BBox b{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
  if (!b.valid()) throw ValidationError(std::string(what) + ": bbox requires x2 > x1 and y2 > y1");
  return b;
}

}  // namespace

std::vector<Detection> parse_detections(std::string_view text) {
  std::vector<Detection> out;
  try {
    const auto j = json::parse(text);
    if (!j.is_array()) throw ValidationError("detections.json: expected an array");
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto& e = j[i];
      const std::string where = "detections.json[" + std::to_string(i) + "]";
      Detection d;
      d.bbox = box_from(e.at("bbox"), where.c_str());
      d.score = e.at("score").get<double>();
      if (!std::isfinite(d.score)) throw ValidationError(where + ": score must be finite");
      d.mixture = e.value("mixture", 1);
      if (d.mixture < 1 || d.mixture > 3) throw ValidationError(where + ": mixture must be 1, 2 or 3");
      d.cls = e.value("class", std::string("pedestrian"));
      d.image = e.value("image", 0);
      out.push_back(d);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("detections.json: ") + e.what());
  }
  return out;
}

std::string detections_to_json(std::span<const Detection> detections) {
  json j = json::array();
  for (const auto& d : detections) {
    json e;
    e["bbox"] = {d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2};
    e["score"] = d.score;
    e["mixture"] = d.mixture;
    e["class"] = d.cls;
    if (d.image != 0) e["image"] = d.image;
    j.push_back(std::move(e));
  }
  return j.dump();
}

// Accepts either [[x1,y1,x2,y2],...] or [{"bbox":[...],"image":i},...].
std::vector<BBox> parse_boxes(std::string_view text) {
  std::vector<BBox> out;
  try {
    const auto j = json::parse(text);
    if (!j.is_array()) throw ValidationError("boxes.json: expected an array");
    for (const auto& e : j) out.push_back(box_from(e.is_object() ? e.at("bbox") : e, "boxes.json"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("boxes.json: ") + e.what());
  }
  return out;
}

std::vector<int> parse_box_images(std::string_view text) {
  std::vector<int> out;
  try {
    const auto j = json::parse(text);
    if (!j.is_array()) throw ValidationError("boxes.json: expected an array");
    for (const auto& e : j) out.push_back(e.is_object() ? e.value("image", 0) : 0);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("boxes.json: ") + e.what());
  }
  return out;
}

std::string boxes_to_json(std::span<const BBox> boxes, std::span<const int> images) {
  json j = json::array();
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    json e;
    e["bbox"] = {b.x1, b.y1, b.x2, b.y2};
    if (i < images.size()) e["image"] = images[i];
    j.push_back(std::move(e));
  }
  return j.dump();
}

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError("features.csv: line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string features_to_csv(std::span<const ContextFeature> features, std::span<const int> labels) {
  if (!labels.empty() && labels.size() != features.size()) {
    throw ValidationError("features_to_csv: label count differs from feature count");
  }
  std::string out;
  for (const auto& name : context_feature_names()) out += name + ",";
  out += "label\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (double v : features[i]) out += format_double(v) + ",";
    out += std::to_string(labels.empty() ? 0 : labels[i]) + "\n";
  }
  return out;
}

void parse_features_csv(std::string_view text, std::vector<std::vector<double>>& features,
                        std::vector<int>& labels) {
  features.clear();
  labels.clear();
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t c = 0;
    while (true) {
      const std::size_t comma = line.find(',', c);
      cells.push_back(line.substr(c, comma == std::string_view::npos ? std::string_view::npos : comma - c));
      if (comma == std::string_view::npos) break;
      c = comma + 1;
    }
    if (line_no == 1) {
      columns = cells.size();
      if (columns < 2) throw ValidationError("features.csv: header needs feature columns and a label");
      continue;
    }
    if (cells.size() != columns) {
      throw ValidationError("features.csv: line " + std::to_string(line_no) + ": expected " +
                            std::to_string(columns) + " columns");
    }
    std::vector<double> row;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) row.push_back(parse_double(cells[i], line_no));
    const double label = parse_double(cells.back(), line_no);
    if (label != std::floor(label)) throw ValidationError("features.csv: label must be an integer");
    features.push_back(std::move(row));
    labels.push_back(static_cast<int>(label));
  }
  if (line_no == 0) throw ValidationError("features.csv: empty file");
}

std::string model_to_json(const LinearModel& model) {
  json j;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  return j.dump();
}

LinearModel parse_model(std::string_view text) {
  LinearModel m;
  try {
    const auto j = json::parse(text);
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model.json: ") + e.what());
  }
  for (double w : m.weights) {
    if (!std::isfinite(w)) throw ValidationError("model.json: non-finite weight");
  }
  if (!std::isfinite(m.bias)) throw ValidationError("model.json: non-finite bias");
  return m;
}

}  // namespace geolift
