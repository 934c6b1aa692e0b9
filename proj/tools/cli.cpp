#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "geolift/alignment.hpp"
#include "geolift/detect_context.hpp"
#include "geolift/eval.hpp"
#include "geolift/gis_map.hpp"
#include "geolift/raster.hpp"
#include "geolift/render.hpp"
#include "geolift/resection.hpp"
#include "geolift/seg_context.hpp"
#include "geolift/synth.hpp"

namespace geolift::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

template <typename Parse>
auto load(const std::string& path, Parse parse) {
  const std::string text = read_file(path);
  try {
    return parse(text);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, std::string text) {
  if (text.empty() || text.back() != '\n') text += '\n';
  write_file(path, text);
}

void emit_warnings(const Diagnostics& diag) {
  for (const auto& m : diag.messages) std::cerr << "warning: " << m << "\n";
}

Intrinsics parse_intrinsics(std::string_view text) {
  Intrinsics k;
  try {
    const auto j = json::parse(text);
    k.f = j.at("f").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("intrinsics: ") + e.what());
  }
  if (!(k.f > 0) || k.width < 1 || k.height < 1) throw ValidationError("intrinsics: need f > 0 and a positive size");
  return k;
}

std::vector<double> flat(const Mat3& R) {
  std::vector<double> v;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) v.push_back(R(r, c));
  }
  return v;
}

RigidTransform3D parse_rigid(std::string_view text) {
  RigidTransform3D T;
  try {
    const auto j = json::parse(text);
    const auto R = j.at("R").get<std::vector<double>>();
    const auto t = j.at("t").get<std::vector<double>>();
    if (R.size() != 9 || t.size() != 3) throw ValidationError("transform: R needs 9 and t 3 values");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) T.R(r, c) = R[3 * r + c];
      T.t[r] = t[r];
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("transform: ") + e.what());
  }
  if (!Pose{T.R, T.t}.is_valid(1e-6)) throw ValidationError("transform: R is not a rotation");
  return T;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_angles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("--angles: bad number '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError("--angles: empty list");
  return out;
}

LabeledMesh load_mesh(const std::string& path) { return load(path, parse_mesh); }
Camera load_camera(const std::string& path) { return load(path, parse_camera); }

std::vector<GroundTruthBox> load_gt(const std::string& path) {
  const std::string text = read_file(path);
  try {
    const auto boxes = parse_boxes(text);
    const auto images = parse_box_images(text);
    std::vector<GroundTruthBox> gt;
    for (std::size_t i = 0; i < boxes.size(); ++i) gt.push_back({boxes[i], images[i]});
    return gt;
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

struct Args {
  // Shared across subcommands; each subcommand binds only the ones it uses.
  std::string map, spec, mesh, camera, pairs, cloud, init, corrs, intrinsics, detections, gt, features,
      model, est, output, out_dir, stem = "context", obj, report, csv, scores, angles = "0,1,3,5",
      channels;
  std::vector<std::string> feature_list, label_list, pred_list, gt_list;
  std::uint64_t seed = 0;
  int max_iters = 50;
  double tol = 1e-6, trim = 0.0;
  double inlier_px = 4.0, confidence = 0.999;
  int ransac_iters = 10000;
  bool no_filter = false;
  double C = 4.0, pos_weight = 4.0;
  int epochs = 1000;
  bool no_nms = false, nms_before = false;
  double nms_iou = 0.5, iou = 0.5;
  bool eleven = false;
  int classes = kNumSegClasses, stride = 16;
  double lambda = 1e-4;
  int seg_iters = 500;
  double dpm_floor = -2.0;
  // synth
  int buildings = 4, count = 100, pedestrians = 10;
  double extent = 48.0, tile = 8.0, sigma = 0.5, outliers = 0.3;
  bool flat_ground = false;
};

int cmd_lift(const Args& a) {
  Diagnostics diag;
  const GisMap map = load(a.map, [&](std::string_view t) { return parse_map(t, &diag); });
  const LiftSpec spec = load(a.spec, [&](std::string_view t) { return parse_liftspec(t, map); });
  const LabeledMesh mesh = lift(map, spec);
  emit_warnings(diag);
  write_text(a.output, mesh_to_json(mesh));
  if (!a.obj.empty()) write_file(a.obj, mesh_to_obj(mesh));
  return 0;
}

int cmd_align(const Args& a) {
  if (a.pairs.empty() == a.cloud.empty()) throw ValidationError("align: give exactly one of --pairs or --cloud");
  json out;
  if (!a.pairs.empty()) {
    const PointPairs pp = load(a.pairs, parse_pairs);
    const ProcrustesResult r = procrustes2d(pp.src, pp.dst);
    out["s"] = r.transform.s;
    out["theta"] = r.transform.theta;
    out["t"] = {r.transform.t.x(), r.transform.t.y()};
    out["rms"] = r.rms;
  } else {
    if (a.mesh.empty()) throw ValidationError("align: --cloud needs --mesh");
    const auto cloud = load(a.cloud, parse_cloud);
    const LabeledMesh mesh = load_mesh(a.mesh);
    const Bvh bvh = build_bvh(mesh);
    const RigidTransform3D init = a.init.empty() ? RigidTransform3D{} : load(a.init, parse_rigid);
    IcpOptions opt;
    opt.max_iters = a.max_iters;
    opt.tol = a.tol;
    opt.trim_fraction = a.trim;
    Diagnostics diag;
    const IcpResult r = icp_refine(cloud, mesh, bvh, init, opt, &diag);
    emit_warnings(diag);
    out["R"] = flat(r.transform.R);
    out["t"] = {r.transform.t.x(), r.transform.t.y(), r.transform.t.z()};
    out["rms"] = r.rms.back();
    out["rms_history"] = r.rms;
    out["iterations"] = r.iterations;
    out["converged"] = r.converged;
  }
  write_text(a.output, out.dump(2));
  return 0;
}

int cmd_render(const Args& a) {
  const Camera cam = load_camera(a.camera);
  const LabeledMesh mesh = load_mesh(a.mesh);
  const Bvh bvh = build_bvh(mesh);
  const ContextMaps maps = render_context(cam, bvh, mesh);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  write_file((dir / (a.stem + ".depth.pfm")).string(), encode_pfm(maps.depth));
  write_file((dir / (a.stem + ".zdepth.pfm")).string(), encode_pfm(maps.zdepth));
  write_file((dir / (a.stem + ".labels.pgm")).string(), encode_pgm(maps.labels));
  write_file((dir / (a.stem + ".normals.pgm")).string(), encode_pgm(maps.normals));
  return 0;
}

int cmd_resect(const Args& a) {
  const auto clusters = load(a.corrs, parse_correspondences);
  const Intrinsics k = load(a.intrinsics, parse_intrinsics);
  const LabeledMesh mesh = load_mesh(a.mesh);
  const Bvh bvh = build_bvh(mesh);
  RansacParams params;
  params.inlier_px = a.inlier_px;
  params.confidence = a.confidence;
  params.max_iters = a.ransac_iters;
  params.seed = a.seed;
  params.validate();
  bool any = false;
  for (const auto& c : clusters) any = any || c.matches.size() >= 4;
  if (!any) throw ValidationError(a.corrs + ": no cluster has at least 4 correspondences");
  const auto best = resect_against_clusters(clusters, k, params, bvh, mesh, !a.no_filter);
  if (!best) throw ComputationError("resect: every cluster failed or was rejected as implausible");
  write_text(a.output, camera_to_json(Camera::make(k, best->pose)));
  if (!a.report.empty()) {
    json r = json::parse(report_to_json(best->report));
    r["cluster_id"] = best->cluster_id;
    r["inliers"] = best->inliers.size();
    write_text(a.report, r.dump(2));
  }
  return 0;
}

int cmd_detfeat(const Args& a) {
  const auto dets = load(a.detections, parse_detections);
  const Camera cam = load_camera(a.camera);
  const LabeledMesh mesh = load_mesh(a.mesh);
  const Bvh bvh = build_bvh(mesh);
  const ContextMaps maps = render_context(cam, bvh, mesh);
  std::vector<GroundTruthBox> gt;
  if (!a.gt.empty()) gt = load_gt(a.gt);
  std::vector<ContextFeature> feats;
  std::vector<int> labels;
  for (const auto& d : dets) {
    feats.push_back(build_feature(d, cam, bvh, mesh, maps));
    int label = 0;
    if (!a.gt.empty()) {
      label = -1;
      for (const auto& g : gt) {
        if (g.image == d.image && iou(g.box, d.bbox) >= a.iou) label = 1;
      }
    }
    labels.push_back(label);
  }
  write_file(a.output, features_to_csv(feats, labels));
  return 0;
}

int cmd_train_rescore(const Args& a) {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  load(a.features, [&](std::string_view t) {
    parse_features_csv(t, x, y);
    return 0;
  });
  SvmOptions opt;
  opt.C = a.C;
  opt.pos_weight = a.pos_weight;
  opt.max_epochs = a.epochs;
  const SvmResult r = train_rescorer(x, y, opt);
  std::cerr << "train-rescore: " << r.epochs << " epochs, duality gap " << r.duality_gap << "\n";
  write_text(a.output, model_to_json(r.model));
  return 0;
}

int cmd_rescore(const Args& a) {
  const LinearModel model = load(a.model, parse_model);
  auto dets = load(a.detections, parse_detections);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  load(a.features, [&](std::string_view t) {
    parse_features_csv(t, x, y);
    return 0;
  });
  if (x.size() != dets.size()) {
    throw ValidationError("rescore: " + std::to_string(x.size()) + " feature rows for " +
                          std::to_string(dets.size()) + " detections");
  }
  std::vector<std::size_t> keep(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) keep[i] = i;
  if (a.nms_before && !a.no_nms) {
    // Suppress on the raw scores, then rescore only the survivors.
    const auto kept = nms(dets, a.nms_iou);
    std::vector<bool> used(dets.size(), false);
    keep.clear();
    for (const auto& k : kept) {
      for (std::size_t i = 0; i < dets.size(); ++i) {
        const BBox& b = dets[i].bbox;
        if (!used[i] && dets[i].score == k.score && dets[i].image == k.image && b.x1 == k.bbox.x1 &&
            b.y1 == k.bbox.y1 && b.x2 == k.bbox.x2 && b.y2 == k.bbox.y2) {
          used[i] = true;
          keep.push_back(i);
          break;
        }
      }
    }
    std::sort(keep.begin(), keep.end());
  }
  std::vector<Detection> out;
  for (std::size_t i : keep) {
    Detection d = dets[i];
    d.score = rescore(model, x[i]);
    out.push_back(d);
  }
  if (!a.no_nms && !a.nms_before) out = nms(out, a.nms_iou);
  write_text(a.output, detections_to_json(out));
  return 0;
}

int cmd_segfeat(const Args& a) {
  const Camera cam = load_camera(a.camera);
  const LabeledMesh mesh = load_mesh(a.mesh);
  const Bvh bvh = build_bvh(mesh);
  std::vector<Detection> dets;
  if (!a.detections.empty()) dets = load(a.detections, parse_detections);
  PixelFeatureOptions opt;
  opt.disc.angular_errors_deg = parse_angles(a.angles);
  opt.dpm_floor = a.dpm_floor;
  const ContextMaps maps = render_context(cam, bvh, mesh);
  FeatureStack stack = build_pixel_features(maps, cam.f, dets, opt);
  if (!a.channels.empty()) stack = select_channels(stack, split_list(a.channels));
  write_file(a.output, encode_feature_stack(stack));
  return 0;
}

int cmd_train_seg(const Args& a) {
  if (a.feature_list.size() != a.label_list.size()) {
    throw ValidationError("train-seg: give one --labels raster per --features stack");
  }
  PixelSamples all;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < a.feature_list.size(); ++i) {
    FeatureStack stack = load(a.feature_list[i], decode_feature_stack);
    if (!a.channels.empty()) stack = select_channels(stack, split_list(a.channels));
    if (i == 0) names = stack.names;
    if (stack.names != names) throw ValidationError(a.feature_list[i] + ": channels differ from the first stack");
    const CodeRaster gt = load(a.label_list[i], decode_pgm);
    append_samples(all, sample_pixels(stack, gt, a.stride, a.seed + i, a.classes));
  }
  LogisticOptions opt;
  opt.lambda = a.lambda;
  opt.max_iters = a.seg_iters;
  LogisticResult r = train_pixel_classifier(all, a.classes, opt);
  r.model.channel_names = names;
  std::cerr << "train-seg: " << r.iterations << " iterations, loss " << r.loss.back() << "\n";
  write_text(a.output, seg_model_to_json(r.model));
  return 0;
}

int cmd_predict_seg(const Args& a) {
  const MultiLinearModel model = load(a.model, parse_seg_model);
  FeatureStack stack = load(a.features, decode_feature_stack);
  if (!model.channel_names.empty() && stack.names != model.channel_names) {
    std::vector<std::string> prefixes = model.channel_names;
    stack = select_channels(stack, prefixes);
  }
  const LabelPrediction p = predict_labels(model, stack);
  write_file(a.output, encode_pgm(p.labels));
  if (!a.scores.empty()) {
    std::vector<std::string> names;
    for (int k = 0; k < model.classes(); ++k) names.push_back("class_" + std::to_string(k));
    FeatureStack s(stack.width, stack.height, names);
    s.data = p.scores;
    write_file(a.scores, encode_feature_stack(s));
  }
  return 0;
}

int cmd_eval_depth(const Args& a) {
  const DepthRaster est = load(a.est, decode_pfm);
  const DepthRaster gt = load(a.gt, decode_pfm);
  write_text(a.output, depth_metrics_to_json(depth_metrics(est, gt)));
  return 0;
}

int cmd_eval_det(const Args& a) {
  const auto dets = load(a.detections, parse_detections);
  const auto gt = load_gt(a.gt);
  const PrecisionRecall pr = average_precision(dets, gt, a.iou, a.eleven);
  write_text(a.output, pr_to_json(pr));
  if (!a.csv.empty()) write_file(a.csv, pr_to_csv(pr));
  return 0;
}

int cmd_eval_seg(const Args& a) {
  if (a.pred_list.size() != a.gt_list.size()) throw ValidationError("eval-seg: give one --gt per --pred");
  std::vector<CodeRaster> preds, gts;
  for (std::size_t i = 0; i < a.pred_list.size(); ++i) {
    preds.push_back(load(a.pred_list[i], decode_pgm));
    gts.push_back(load(a.gt_list[i], decode_pgm));
  }
  write_text(a.output, iou_to_json(segmentation_iou(preds, gts, a.classes)));
  return 0;
}

int cmd_synth(const Args& a) {
  SceneSpec spec;
  spec.seed = a.seed;
  spec.extent = a.extent;
  spec.tile = a.tile;
  spec.buildings = a.buildings;
  spec.two_level_ground = !a.flat_ground;
  const Scene scene = make_scene(spec);
  const Bvh bvh = build_bvh(scene.mesh);
  const Camera cam = sample_plausible_camera(scene.mesh, bvh, a.seed);
  NoiseParams noise;
  noise.pixel_noise_sigma = a.sigma;
  noise.outlier_fraction = a.outliers;
  noise.count = a.count;
  noise.seed = a.seed;
  const SynthCorrespondences sc = synth_correspondences(cam, bvh, scene.mesh, noise);
  const PedestrianSet peds = synth_pedestrians(cam, bvh, scene.mesh, a.pedestrians, a.seed);
  const ContextMaps maps = render_context(cam, bvh, scene.mesh);
  const CodeRaster seg = synth_segmentation_gt(cam, bvh, scene.mesh, maps, peds, a.seed);

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  auto out = [&](const char* name) { return (dir / name).string(); };
  write_text(out("map.json"), map_to_json(scene.map));
  write_text(out("lift.json"), liftspec_to_json(scene.lift));
  write_text(out("mesh.json"), mesh_to_json(scene.mesh));
  write_text(out("camera.json"), camera_to_json(cam));
  const std::vector<ClusterMatches> clusters{{0, sc.corrs}};
  write_text(out("correspondences.json"), correspondences_to_json(clusters));
  write_text(out("detections.json"), detections_to_json(peds.candidates));
  write_text(out("gt_boxes.json"), boxes_to_json(peds.gt));
  write_file(out("seg_gt.pgm"), encode_pgm(seg));
  write_file(out("depth_gt.pfm"), encode_pfm(maps.depth));
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"geolift: GIS-model context for camera pose, depth, detection and segmentation"};
  app.name("geolift");
  app.require_subcommand(1);
  Args a;
  using Cmd = std::function<int(const Args&)>;
  std::vector<std::pair<CLI::App*, Cmd>> cmds;

  auto seed = [&](CLI::App* s) { s->add_option("--seed", a.seed, "Random seed")->capture_default_str(); };

  auto* lift_cmd = app.add_subcommand("lift", "Lift a GIS map into a labeled 3D mesh");
  lift_cmd->add_option("--map", a.map, "map.json")->required();
  lift_cmd->add_option("--spec", a.spec, "lift.json")->required();
  lift_cmd->add_option("-o,--output", a.output, "Output mesh.json")->required();
  lift_cmd->add_option("--obj", a.obj, "Also write a Wavefront OBJ");
  seed(lift_cmd);
  cmds.emplace_back(lift_cmd, cmd_lift);

  auto* align_cmd = app.add_subcommand("align", "Procrustes (--pairs) or ICP (--cloud with --mesh)");
  align_cmd->add_option("--pairs", a.pairs, "pairs.json for a 2D similarity fit");
  align_cmd->add_option("--cloud", a.cloud, "cloud.json for ICP against --mesh");
  align_cmd->add_option("--mesh", a.mesh, "mesh.json");
  align_cmd->add_option("--init", a.init, "Initial transform JSON {R, t}");
  align_cmd->add_option("--max-iters", a.max_iters, "ICP iteration cap")->capture_default_str();
  align_cmd->add_option("--tol", a.tol, "ICP RMS improvement tolerance (m)")->capture_default_str();
  align_cmd->add_option("--trim", a.trim, "Fraction of worst pairs dropped per ICP step")->capture_default_str();
  align_cmd->add_option("-o,--output", a.output, "Output transform JSON")->required();
  seed(align_cmd);
  cmds.emplace_back(align_cmd, cmd_align);

  auto* render_cmd = app.add_subcommand("render", "Render depth, label and normal-bin maps");
  render_cmd->add_option("--camera", a.camera, "camera.json")->required();
  render_cmd->add_option("--mesh", a.mesh, "mesh.json")->required();
  render_cmd->add_option("--out-dir", a.out_dir, "Output directory")->required();
  render_cmd->add_option("--stem", a.stem, "Output file stem")->capture_default_str();
  seed(render_cmd);
  cmds.emplace_back(render_cmd, cmd_render);

  auto* resect_cmd = app.add_subcommand("resect", "Resection against correspondence clusters");
  resect_cmd->add_option("--corrs", a.corrs, "correspondences.json")->required();
  resect_cmd->add_option("--intrinsics", a.intrinsics, "JSON with f, cx, cy, width, height")->required();
  resect_cmd->add_option("--mesh", a.mesh, "mesh.json")->required();
  resect_cmd->add_option("--inlier-px", a.inlier_px, "Inlier reprojection threshold")->capture_default_str();
  resect_cmd->add_option("--confidence", a.confidence, "RANSAC confidence")->capture_default_str();
  resect_cmd->add_option("--max-iters", a.ransac_iters, "RANSAC iteration cap")->capture_default_str();
  resect_cmd->add_flag("--no-filter", a.no_filter, "Keep implausible poses");
  resect_cmd->add_option("-o,--output", a.output, "Output camera.json")->required();
  resect_cmd->add_option("--report", a.report, "Plausibility report JSON");
  seed(resect_cmd);
  cmds.emplace_back(resect_cmd, cmd_resect);

  auto* detfeat_cmd = app.add_subcommand("detfeat", "Context features for candidate detections");
  detfeat_cmd->add_option("--detections", a.detections, "detections.json")->required();
  detfeat_cmd->add_option("--camera", a.camera, "camera.json")->required();
  detfeat_cmd->add_option("--mesh", a.mesh, "mesh.json")->required();
  detfeat_cmd->add_option("--gt", a.gt, "Ground-truth boxes; fills the label column with +1/-1");
  detfeat_cmd->add_option("--iou", a.iou, "IoU for a positive label")->capture_default_str();
  detfeat_cmd->add_option("-o,--output", a.output, "Output features.csv")->required();
  seed(detfeat_cmd);
  cmds.emplace_back(detfeat_cmd, cmd_detfeat);

  auto* train_cmd = app.add_subcommand("train-rescore", "Train the linear rescoring SVM");
  train_cmd->add_option("--features", a.features, "features.csv with +1/-1 labels")->required();
  train_cmd->add_option("--C", a.C, "Regularization")->capture_default_str();
  train_cmd->add_option("--pos-weight", a.pos_weight, "Cost multiplier for positives")->capture_default_str();
  train_cmd->add_option("--epochs", a.epochs, "Epoch cap")->capture_default_str();
  train_cmd->add_option("-o,--output", a.output, "Output model.json")->required();
  seed(train_cmd);
  cmds.emplace_back(train_cmd, cmd_train_rescore);

  auto* rescore_cmd = app.add_subcommand("rescore", "Rescore detections with a trained model");
  rescore_cmd->add_option("--model", a.model, "model.json")->required();
  rescore_cmd->add_option("--features", a.features, "features.csv, one row per detection")->required();
  rescore_cmd->add_option("--detections", a.detections, "detections.json")->required();
  rescore_cmd->add_option("--nms-iou", a.nms_iou, "NMS overlap threshold")->capture_default_str();
  rescore_cmd->add_flag("--no-nms", a.no_nms, "Skip non-maximum suppression");
  rescore_cmd->add_flag("--nms-before", a.nms_before, "Suppress on raw scores before rescoring");
  rescore_cmd->add_option("-o,--output", a.output, "Output detections.json")->required();
  seed(rescore_cmd);
  cmds.emplace_back(rescore_cmd, cmd_rescore);

  auto* segfeat_cmd = app.add_subcommand("segfeat", "Per-pixel context feature stack");
  segfeat_cmd->add_option("--camera", a.camera, "camera.json")->required();
  segfeat_cmd->add_option("--mesh", a.mesh, "mesh.json")->required();
  segfeat_cmd->add_option("--detections", a.detections, "detections.json for DPM score maps");
  segfeat_cmd->add_option("--angles", a.angles, "Disc angular errors in degrees")->capture_default_str();
  segfeat_cmd->add_option("--dpm-floor", a.dpm_floor, "Score where no box covers a pixel")->capture_default_str();
  segfeat_cmd->add_option("--channels", a.channels, "Comma-separated channel name prefixes to keep");
  segfeat_cmd->add_option("-o,--output", a.output, "Output feature stack")->required();
  seed(segfeat_cmd);
  cmds.emplace_back(segfeat_cmd, cmd_segfeat);

  auto* trainseg_cmd = app.add_subcommand("train-seg", "Train the per-pixel classifier");
  trainseg_cmd->add_option("--features", a.feature_list, "Feature stacks (repeatable)")->required();
  trainseg_cmd->add_option("--labels", a.label_list, "Label PGMs, one per stack")->required();
  trainseg_cmd->add_option("--classes", a.classes, "Class count")->capture_default_str();
  trainseg_cmd->add_option("--stride", a.stride, "Pixel sampling stride")->capture_default_str();
  trainseg_cmd->add_option("--lambda", a.lambda, "L2 penalty")->capture_default_str();
  trainseg_cmd->add_option("--max-iters", a.seg_iters, "Gradient steps")->capture_default_str();
  trainseg_cmd->add_option("--channels", a.channels, "Comma-separated channel name prefixes to use");
  trainseg_cmd->add_option("-o,--output", a.output, "Output model JSON")->required();
  seed(trainseg_cmd);
  cmds.emplace_back(trainseg_cmd, cmd_train_seg);

  auto* predseg_cmd = app.add_subcommand("predict-seg", "Label a feature stack");
  predseg_cmd->add_option("--model", a.model, "Model JSON")->required();
  predseg_cmd->add_option("--features", a.features, "Feature stack")->required();
  predseg_cmd->add_option("--scores", a.scores, "Also write per-class scores as a feature stack");
  predseg_cmd->add_option("-o,--output", a.output, "Output label PGM")->required();
  seed(predseg_cmd);
  cmds.emplace_back(predseg_cmd, cmd_predict_seg);

  auto* evald_cmd = app.add_subcommand("eval-depth", "Depth accuracy metrics");
  evald_cmd->add_option("--est", a.est, "Estimated depth PFM")->required();
  evald_cmd->add_option("--gt", a.gt, "Reference depth PFM")->required();
  evald_cmd->add_option("-o,--output", a.output, "Output metrics JSON")->required();
  seed(evald_cmd);
  cmds.emplace_back(evald_cmd, cmd_eval_depth);

  auto* evaldet_cmd = app.add_subcommand("eval-det", "Detection average precision");
  evaldet_cmd->add_option("--detections", a.detections, "detections.json")->required();
  evaldet_cmd->add_option("--gt", a.gt, "Ground-truth boxes JSON")->required();
  evaldet_cmd->add_option("--iou", a.iou, "Match threshold")->capture_default_str();
  evaldet_cmd->add_flag("--eleven-point", a.eleven, "11-point interpolated AP");
  evaldet_cmd->add_option("--csv", a.csv, "Also write the PR curve as CSV");
  evaldet_cmd->add_option("-o,--output", a.output, "Output JSON")->required();
  seed(evaldet_cmd);
  cmds.emplace_back(evaldet_cmd, cmd_eval_det);

  auto* evalseg_cmd = app.add_subcommand("eval-seg", "Segmentation intersection over union");
  evalseg_cmd->add_option("--pred", a.pred_list, "Predicted label PGMs (repeatable)")->required();
  evalseg_cmd->add_option("--gt", a.gt_list, "Reference label PGMs, one per prediction")->required();
  evalseg_cmd->add_option("--classes", a.classes, "Class count")->capture_default_str();
  evalseg_cmd->add_option("-o,--output", a.output, "Output JSON")->required();
  seed(evalseg_cmd);
  cmds.emplace_back(evalseg_cmd, cmd_eval_seg);

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene with camera and data");
  synth_cmd->add_option("--out-dir", a.out_dir, "Output directory")->required();
  synth_cmd->add_option("--extent", a.extent, "Courtyard size (m)")->capture_default_str();
  synth_cmd->add_option("--tile", a.tile, "Tile size (m)")->capture_default_str();
  synth_cmd->add_option("--buildings", a.buildings, "Building count")->capture_default_str();
  synth_cmd->add_flag("--flat", a.flat_ground, "No raised platform or ramp");
  synth_cmd->add_option("--sigma", a.sigma, "Pixel noise of correspondences")->capture_default_str();
  synth_cmd->add_option("--outliers", a.outliers, "Outlier fraction")->capture_default_str();
  synth_cmd->add_option("--count", a.count, "Correspondence count")->capture_default_str();
  synth_cmd->add_option("--pedestrians", a.pedestrians, "Ground-truth pedestrian count")->capture_default_str();
  seed(synth_cmd);
  cmds.emplace_back(synth_cmd, cmd_synth);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    CLI::App* sub = nullptr;
    for (auto& [s, fn] : cmds) {
      if (s->parsed()) sub = s;
    }
    std::cerr << (sub ? sub->help() : app.help());
    return 1;
  }

  for (auto& [sub, fn] : cmds) {
    if (!sub->parsed()) continue;
    try {
      return fn(a);
    } catch (const ValidationError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const ComputationError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  std::cerr << app.help();
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace geolift::cli
