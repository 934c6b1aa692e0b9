#include "geolift/resection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "geolift/random.hpp"

namespace geolift {

using json = nlohmann::ordered_json;

void RansacParams::validate() const {
  if (!(inlier_px > 0) || !std::isfinite(inlier_px)) throw ValidationError("ransac: inlier_px must be > 0");
  if (!(confidence > 0 && confidence < 1)) throw ValidationError("ransac: confidence must lie in (0,1)");
  if (max_iters < 1) throw ValidationError("ransac: max_iters must be >= 1");
}

namespace {

struct Support {
  std::vector<int> inliers;
  double cost = 0.0;
};

Support support_of(const Pose& pose, std::span<const Correspondence> corrs, const Intrinsics& k,
                   double thr2) {
  Support s;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const double e = reprojection_error_sq(pose, k, corrs[i]);
    if (e < thr2) {
      s.inliers.push_back(static_cast<int>(i));
      s.cost += e;
    }
  }
  return s;
}

bool better(const Support& a, const Support& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.cost < b.cost;
}

std::vector<Correspondence> gather(std::span<const Correspondence> corrs, const std::vector<int>& idx) {
  std::vector<Correspondence> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(corrs[i]);
  return out;
}

}  // namespace

RansacResult ransac_resect(std::span<const Correspondence> corrs, const Intrinsics& k,
                           const RansacParams& params) {
  params.validate();
  const int n = static_cast<int>(corrs.size());
  if (n < 4) throw ValidationError("ransac: need at least 4 correspondences");
  const std::size_t min_support =
      static_cast<std::size_t>(std::max(4, std::min(params.min_inliers, n)));
  const double thr2 = params.inlier_px * params.inlier_px;

  Rng rng(params.seed);
  Support best;
  Pose best_pose;
  bool found = false;
  long needed = params.max_iters;
  int it = 0;
  for (; it < needed && it < params.max_iters; ++it) {
    std::array<std::size_t, 3> idx{};
    idx[0] = rng.index(n);
    do idx[1] = rng.index(n); while (idx[1] == idx[0]);
    do idx[2] = rng.index(n); while (idx[2] == idx[0] || idx[2] == idx[1]);
    const std::array<Correspondence, 3> sample{corrs[idx[0]], corrs[idx[1]], corrs[idx[2]]};
    std::vector<Pose> candidates;
    try {
      candidates = solve_p3p(std::span<const Correspondence, 3>(sample), k);
    } catch (const ValidationError&) {
      continue;
    }
    for (const auto& pose : candidates) {
      Support s = support_of(pose, corrs, k, thr2);
      if (!found || better(s, best)) {
        found = true;
        best = std::move(s);
        best_pose = pose;
        const double w = static_cast<double>(best.inliers.size()) / n;
        const double denom = std::log(1.0 - w * w * w);
        if (w >= 1.0) {
          needed = 1;
        } else if (denom < 0) {
          const double want = std::ceil(std::log(1.0 - params.confidence) / denom);
          needed = static_cast<long>(std::min<double>(want, params.max_iters));
        }
      }
    }
  }
  if (!found || best.inliers.size() < min_support) {
    throw ComputationError("ransac: no hypothesis reached consensus");
  }

  RansacResult result{best_pose, best.inliers, it};
  for (int round = 0; round < 2; ++round) {
    const auto inlier_corrs = gather(corrs, result.inliers);
    const Pose refined = refine_pose(result.pose, inlier_corrs, k);
    Support s = support_of(refined, corrs, k, thr2);
    if (s.inliers.size() < result.inliers.size()) break;
    result.pose = refined;
    const bool same = s.inliers == result.inliers;
    result.inliers = std::move(s.inliers);
    if (same) break;
  }
  return result;
}

Pose refine_pose(const Pose& pose, std::span<const Correspondence> inliers, const Intrinsics& k,
                 Diagnostics* diag) {
  if (inliers.size() < 4) throw ValidationError("refine_pose: need at least 4 inliers");
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;

  Pose current = pose;
  double cost = reprojection_cost(current, k, inliers);
  if (!std::isfinite(cost)) {
    if (diag) diag->warn("refine_pose: a point lies behind the camera; pose left unchanged");
    return pose;
  }
  double lambda = 1e-3;
  for (int step = 0; step < 20 && cost > 0; ++step) {
    Mat6 H = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    for (const auto& c : inliers) {
      const Vec3 rx = current.R * c.X;
      const Vec3 q = rx + current.t;
      const double iz = 1.0 / q.z();
      const Vec2 r(k.f * q.x() * iz + k.cx - c.px.x(), k.f * q.y() * iz + k.cy - c.px.y());
      Eigen::Matrix<double, 2, 3> dq;
      dq << k.f * iz, 0, -k.f * q.x() * iz * iz, 0, k.f * iz, -k.f * q.y() * iz * iz;
      Mat3 skew;
      skew << 0, -rx.z(), rx.y(), rx.z(), 0, -rx.x(), -rx.y(), rx.x(), 0;
      Eigen::Matrix<double, 2, 6> J;
      J.leftCols<3>() = -dq * skew;
      J.rightCols<3>() = dq;
      H += J.transpose() * J;
      g += J.transpose() * r;
    }
    const Eigen::SelfAdjointEigenSolver<Mat6> es(H);
    const double emax = es.eigenvalues().maxCoeff();
    if (!(emax > 0) || es.eigenvalues().minCoeff() <= 1e-12 * emax) {
      if (diag) diag->warn("refine_pose: rank-deficient normal equations; pose left unchanged");
      return step == 0 ? pose : current;
    }
    bool accepted = false;
    while (lambda < 1e12) {
      Mat6 A = H;
      A.diagonal() += lambda * H.diagonal();
      const Vec6 delta = -A.ldlt().solve(g);
      const Vec3 w = delta.head<3>();
      const double angle = w.norm();
      const Mat3 dR = angle > 0 ? axis_angle(w / angle, angle) : Mat3::Identity();
      Pose trial{orthonormalize(dR * current.R), current.t + delta.tail<3>()};
      const double trial_cost = reprojection_cost(trial, k, inliers);
      if (trial_cost < cost) {
        const double gain = cost - trial_cost;
        current = trial;
        cost = trial_cost;
        lambda = std::max(1e-12, lambda * 0.1);
        accepted = true;
        if (gain <= 1e-15 * cost || delta.norm() < 1e-15) step = 20;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  return current;
}

double camera_tilt_deg(const Pose& pose) {
  const Vec3 down = pose.R.transpose() * Vec3(0, 1, 0);
  const double c = std::clamp(down.dot(Vec3(0, 0, -1)) / down.norm(), -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

PlausibilityReport plausibility_filter(const Pose& pose, const Bvh& bvh, const LabeledMesh& mesh,
                                       const PlausibilityLimits& limits) {
  PlausibilityReport rep;
  const Vec3 C = pose.center();
  rep.tilt_deg = camera_tilt_deg(pose);
  const auto down = raycast(bvh, mesh, Ray(C, Vec3(0, 0, -1)));
  if (down) {
    rep.ground_found = true;
    rep.height_m = C.z() - down->point.z();
  } else {
    rep.height_m = std::numeric_limits<double>::quiet_NaN();
    rep.below_ground = raycast(bvh, mesh, Ray(C, Vec3(0, 0, 1))).has_value();
  }
  if (rep.below_ground) {
    rep.reason = "below_ground";
  } else if (!rep.ground_found) {
    rep.reason = "no_ground";
  } else if (rep.height_m > limits.max_height_m) {
    rep.reason = "height";
  } else if (rep.tilt_deg > limits.max_tilt_deg) {
    rep.reason = "tilt";
  } else {
    rep.accept = true;
    rep.reason = "ok";
  }
  return rep;
}

std::optional<ClusterResection> resect_against_clusters(std::span<const ClusterMatches> clusters,
                                                        const Intrinsics& k,
                                                        const RansacParams& params,
                                                        const Bvh& bvh, const LabeledMesh& mesh,
                                                        bool use_filter,
                                                        const PlausibilityLimits& limits) {
  params.validate();
  std::optional<ClusterResection> best;
  for (const auto& cl : clusters) {
    if (cl.matches.size() < 4) continue;
    RansacParams p = params;
    p.seed = Rng::derive(params.seed, static_cast<std::uint64_t>(cl.id)).next();
    ClusterResection r;
    try {
      const RansacResult rr = ransac_resect(cl.matches, k, p);
      r.pose = rr.pose;
      r.inliers = rr.inliers;
    } catch (const ComputationError&) {
      continue;
    }
    r.cluster_id = cl.id;
    r.report = plausibility_filter(r.pose, bvh, mesh, limits);
    if (use_filter && !r.report.accept) continue;
    if (!best || r.inliers.size() > best->inliers.size() ||
        (r.inliers.size() == best->inliers.size() && r.cluster_id < best->cluster_id)) {
      best = std::move(r);
    }
  }
  return best;
}

std::vector<ClusterMatches> parse_correspondences(std::string_view text) {
  std::vector<ClusterMatches> out;
  try {
    const auto j = json::parse(text);
    if (!j.contains("clusters") || !j["clusters"].is_array()) {
      throw ValidationError("correspondences.json: missing clusters array");
    }
    for (const auto& c : j["clusters"]) {
      ClusterMatches cm;
      cm.id = c.at("id").get<int>();
      for (const auto& m : c.at("matches")) {
        const auto& px = m.at("px");
        const auto& X = m.at("X");
        if (!px.is_array() || px.size() != 2 || !X.is_array() || X.size() != 3) {
          throw ValidationError("correspondences.json: px must be [u,v] and X [x,y,z]");
        }
        Correspondence corr;
        corr.px = Vec2(px[0].get<double>(), px[1].get<double>());
        corr.X = Vec3(X[0].get<double>(), X[1].get<double>(), X[2].get<double>());
        if (!corr.px.allFinite() || !corr.X.allFinite()) {
          throw ValidationError("correspondences.json: non-finite coordinate");
        }
        cm.matches.push_back(corr);
      }
      out.push_back(std::move(cm));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("correspondences.json: ") + e.what());
  }
  return out;
}

std::string correspondences_to_json(std::span<const ClusterMatches> clusters) {
  json j;
  j["clusters"] = json::array();
  for (const auto& c : clusters) {
    json cj;
    cj["id"] = c.id;
    cj["matches"] = json::array();
    for (const auto& m : c.matches) {
      cj["matches"].push_back({{"px", {m.px.x(), m.px.y()}}, {"X", {m.X.x(), m.X.y(), m.X.z()}}});
    }
    j["clusters"].push_back(std::move(cj));
  }
  return j.dump();
}

std::string report_to_json(const PlausibilityReport& report) {
  json j;
  j["height_m"] = std::isfinite(report.height_m) ? json(report.height_m) : json(nullptr);
  j["tilt_deg"] = report.tilt_deg;
  j["below_ground"] = report.below_ground;
  j["verdict"] = report.accept ? "accept" : "reject";
  j["reason"] = report.reason;
  return j.dump(2);
}

}  // namespace geolift
