#include "geolift/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <nlohmann/json.hpp>

namespace geolift {

using json = nlohmann::ordered_json;

namespace {

Histogram make_histogram(const std::vector<double>& values, double bin, int bins) {
  Histogram h;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(bin * i);
  h.counts.assign(bins, 0);
  for (double v : values) {
    const int idx = std::min(bins - 1, static_cast<int>(std::floor(v / bin)));
    ++h.counts[std::max(0, idx)];
  }
  for (long c : h.counts) h.log_counts.push_back(std::log10(1.0 + static_cast<double>(c)));
  return h;
}

json histogram_json(const Histogram& h) {
  json j;
  j["edges"] = h.edges;
  j["counts"] = h.counts;
  j["log_counts"] = h.log_counts;
  return j;
}

}  // namespace

DepthMetrics depth_metrics(const DepthRaster& est, const DepthRaster& gt) {
  if (est.width != gt.width || est.height != gt.height) {
    throw ValidationError("depth_metrics: estimate is " + std::to_string(est.width) + "x" +
                          std::to_string(est.height) + " but ground truth is " + std::to_string(gt.width) +
                          "x" + std::to_string(gt.height));
  }
  DepthMetrics m;
  std::vector<double> rel, abs_err;
  long d1 = 0, d2 = 0, d3 = 0;
  constexpr double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    const double g = gt.data[i], e = est.data[i];
    if (!std::isfinite(g) || !std::isfinite(e) || g <= 0 || e <= 0) {
      ++m.excluded_pixel_count;
      continue;
    }
    const double delta = std::max(g / e, e / g);
    d1 += delta < t1;
    d2 += delta < t2;
    d3 += delta < t3;
    abs_err.push_back(std::abs(e - g));
    rel.push_back(std::abs(e - g) / g);
  }
  m.valid_pixel_count = static_cast<long>(rel.size());
  if (m.valid_pixel_count == 0) throw ValidationError("depth_metrics: no valid pixels");
  const double n = static_cast<double>(m.valid_pixel_count);
  m.frac_delta_1 = d1 / n;
  m.frac_delta_2 = d2 / n;
  m.frac_delta_3 = d3 / n;
  m.mean_rel_err = std::accumulate(rel.begin(), rel.end(), 0.0) / n;
  m.abs_err_histogram = make_histogram(abs_err, 1.0, 20);
  m.rel_err_histogram = make_histogram(rel, 0.05, 20);
  std::vector<double> sorted = rel;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  m.median_rel_err = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return m;
}

PrecisionRecall average_precision(std::span<const Detection> detections, std::span<const GroundTruthBox> gt,
                                  double iou_threshold, bool eleven_point) {
  if (gt.empty()) throw ValidationError("average_precision: no ground-truth boxes");
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  std::vector<bool> used(gt.size(), false);
  PrecisionRecall pr;
  long tp = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Detection& d = detections[order[r]];
    int best = -1;
    double best_iou = iou_threshold;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g] || gt[g].image != d.image) continue;
      const double o = iou(d.bbox, gt[g].box);
      if (o >= best_iou && (best < 0 || o > best_iou)) {
        best = static_cast<int>(g);
        best_iou = o;
      }
    }
    const bool hit = best >= 0;
    if (hit) used[best] = true;
    tp += hit;
    pr.true_positive.push_back(hit);
    pr.precision.push_back(static_cast<double>(tp) / static_cast<double>(r + 1));
    pr.recall.push_back(static_cast<double>(tp) / static_cast<double>(gt.size()));
  }

  if (eleven_point) {
    double sum = 0.0;
    for (int t = 0; t <= 10; ++t) {
      double p = 0.0;
      for (std::size_t i = 0; i < pr.recall.size(); ++i) {
        if (pr.recall[i] >= t / 10.0 - 1e-12) p = std::max(p, pr.precision[i]);
      }
      sum += p;
    }
    pr.ap = sum / 11.0;
  } else {
    std::vector<double> env = pr.precision;
    for (std::size_t i = env.size(); i-- > 1;) env[i - 1] = std::max(env[i - 1], env[i]);
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
      pr.ap += (pr.recall[i] - prev_recall) * env[i];
      prev_recall = pr.recall[i];
    }
  }
  return pr;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("roc_auc: score and label counts differ");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  long pos = 0, neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0) {
        rank_sum += avg_rank;
        ++pos;
      } else {
        ++neg;
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0) throw ValidationError("roc_auc: need positive and negative examples");
  return (rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1)) /
         (static_cast<double>(pos) * static_cast<double>(neg));
}

IoUReport segmentation_iou(std::span<const CodeRaster> preds, std::span<const CodeRaster> gts, int num_classes) {
  if (preds.size() != gts.size()) throw ValidationError("segmentation_iou: prediction and ground-truth counts differ");
  if (num_classes < 1) throw ValidationError("segmentation_iou: num_classes must be >= 1");
  std::vector<long> inter(num_classes, 0), pred_n(num_classes, 0), gt_n(num_classes, 0);
  for (std::size_t r = 0; r < preds.size(); ++r) {
    const CodeRaster& p = preds[r];
    const CodeRaster& g = gts[r];
    if (p.width != g.width || p.height != g.height) {
      throw ValidationError("segmentation_iou: prediction and ground truth differ in size");
    }
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      const int gv = g.data[i], pv = p.data[i];
      if (gv < num_classes) ++gt_n[gv];
      if (pv < num_classes) ++pred_n[pv];
      if (gv == pv && gv < num_classes) ++inter[gv];
    }
  }
  IoUReport rep;
  double sum = 0.0;
  int counted = 0;
  for (int k = 0; k < num_classes; ++k) {
    const long uni = pred_n[k] + gt_n[k] - inter[k];
    rep.present_in_gt.push_back(gt_n[k] > 0);
    if (uni == 0) {
      rep.per_class.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double v = static_cast<double>(inter[k]) / static_cast<double>(uni);
    rep.per_class.push_back(v);
    sum += v;
    ++counted;
  }
  rep.overall = counted ? sum / counted : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

IoUReport segmentation_iou(const CodeRaster& pred, const CodeRaster& gt, int num_classes) {
  return segmentation_iou(std::span<const CodeRaster>(&pred, 1), std::span<const CodeRaster>(&gt, 1),
                          num_classes);
}

std::string depth_metrics_to_json(const DepthMetrics& m) {
  json j;
  j["frac_delta_1"] = m.frac_delta_1;
  j["frac_delta_2"] = m.frac_delta_2;
  j["frac_delta_3"] = m.frac_delta_3;
  j["mean_rel_err"] = m.mean_rel_err;
  j["median_rel_err"] = m.median_rel_err;
  j["valid_pixel_count"] = m.valid_pixel_count;
  j["excluded_pixel_count"] = m.excluded_pixel_count;
  j["abs_err_histogram"] = histogram_json(m.abs_err_histogram);
  j["rel_err_histogram"] = histogram_json(m.rel_err_histogram);
  return j.dump(2);
}

std::string pr_to_json(const PrecisionRecall& pr) {
  json j;
  j["ap"] = pr.ap;
  j["precision"] = pr.precision;
  j["recall"] = pr.recall;
  return j.dump(2);
}

std::string pr_to_csv(const PrecisionRecall& pr) {
  std::string out = "rank,precision,recall,tp\n";
  for (std::size_t i = 0; i < pr.precision.size(); ++i) {
    out += std::to_string(i + 1) + "," + json(pr.precision[i]).dump() + "," + json(pr.recall[i]).dump() + "," +
           (pr.true_positive[i] ? "1" : "0") + "\n";
  }
  return out;
}

std::string iou_to_json(const IoUReport& r) {
  json j;
  j["overall"] = std::isfinite(r.overall) ? json(r.overall) : json(nullptr);
  j["per_class"] = json::array();
  for (std::size_t k = 0; k < r.per_class.size(); ++k) {
    j["per_class"].push_back({{"class", k},
                              {"iou", std::isfinite(r.per_class[k]) ? json(r.per_class[k]) : json(nullptr)},
                              {"present_in_gt", static_cast<bool>(r.present_in_gt[k])}});
  }
  return j.dump(2);
}

}  // namespace geolift
