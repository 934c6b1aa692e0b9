#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "geolift/seg_context.hpp"
#include "geolift/synth.hpp"
#include "oracles.hpp"

namespace geolift {
namespace {

CodeRaster random_codes(Rng& rng, int w, int h, int num_codes) {
  CodeRaster r(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) r(x, y) = static_cast<std::uint8_t>((x / 6 + y / 4 + rng.index(num_codes)) % num_codes);
  return r;
}

TEST(DiscRadii, FromAngularError) {
  const auto r = DiscFeatureParams{}.radii(300);
  EXPECT_EQ(r, (std::vector<int>{0, 5, 16, 26}));
  DiscFeatureParams dup;
  dup.angular_errors_deg = {1.0, 1.05};
  EXPECT_THROW(dup.radii(300), ValidationError);
  EXPECT_THROW(DiscFeatureParams{}.radii(0), ValidationError);
}

TEST(DiscRowSpans, MatchesDefinition) {
  for (int r = 0; r <= 40; ++r) {
    const auto s = disc_row_spans(r);
    ASSERT_EQ(static_cast<int>(s.size()), 2 * r + 1);
    for (int dy = -r; dy <= r; ++dy) {
      int hw = 0;
      while ((hw + 1) * (hw + 1) + dy * dy <= r * r) ++hw;
      EXPECT_EQ(s[dy + r], hw);
    }
  }
  EXPECT_THROW(disc_row_spans(-1), ValidationError);
}

TEST(DiscFeatures, UniformSkyImage) {
  CodeRaster sky(40, 30, code(SemanticLabel::kSky));
  const std::vector<int> radii{0, 3, 9};
  const FeatureStack f = disc_label_features(sky, radii);
  ASSERT_EQ(f.channels(), 12);
  for (int y : {0, 15, 29}) {
    for (int x : {0, 20, 39}) {
      for (int ri = 0; ri < 3; ++ri) {
        for (int k = 0; k < 4; ++k) EXPECT_EQ(f.at(x, y, ri * 4 + k), k == code(SemanticLabel::kSky) ? 1.0f : 0.0f);
      }
    }
  }
  EXPECT_EQ(f.names[5], "label_r3_plants");
}

TEST(DiscFeatures, UnknownOnlyEnlargesDenominator) {
  CodeRaster r(11, 11, code(SemanticLabel::kUnknown));
  r(5, 5) = code(SemanticLabel::kBuilding);
  const std::vector<int> radii{1};
  const FeatureStack f = disc_label_features(r, radii);
  EXPECT_FLOAT_EQ(f.at(5, 5, 0), 1.0f / 5.0f);
  EXPECT_FLOAT_EQ(f.at(5, 4, 0), 1.0f / 5.0f);
  EXPECT_FLOAT_EQ(f.at(4, 4, 0), 0.0f);
  // Corner: only in-image pixels count.
  EXPECT_FLOAT_EQ(f.at(0, 0, 3), 0.0f);
}

TEST(DiscFeatures, MatchesDirectCount) {
  Rng rng(11);
  for (int seed = 0; seed < 4; ++seed) {
    const CodeRaster labels = random_codes(rng, 57, 43, 5);
    const CodeRaster normals = random_codes(rng, 57, 43, 4);
    const std::vector<int> radii{0, 2, 7, 30};
    const FeatureStack fl = disc_label_features(labels, radii);
    const FeatureStack fn = disc_normal_features(normals, radii);
    for (int i = 0; i < 300; ++i) {
      const int x = static_cast<int>(rng.index(57)), y = static_cast<int>(rng.index(43));
      for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        const auto cl = oracle::disc_count(labels, x, y, radii[ri], 5);
        for (int k = 0; k < 4; ++k)
          ASSERT_NEAR(fl.at(x, y, static_cast<int>(ri) * 4 + k), double(cl.counts[k]) / cl.total, 1e-6);
        const auto cn = oracle::disc_count(normals, x, y, radii[ri], 4);
        for (int k = 0; k < 3; ++k)
          ASSERT_NEAR(fn.at(x, y, static_cast<int>(ri) * 3 + k), double(cn.counts[k]) / cn.total, 1e-6);
      }
    }
  }
}

TEST(DepthHog, ConstantDepthIsZero) {
  const DepthRaster d(32, 24, 7.0);
  const FeatureStack h = depth_hog(d);
  ASSERT_EQ(h.channels(), 9);
  for (float v : h.data) EXPECT_EQ(v, 0.0f);
}

TEST(DepthHog, VerticalEdgeFillsBinZero) {
  DepthRaster d(16, 16, 2.0);
  for (int y = 0; y < 16; ++y)
    for (int x = 8; x < 16; ++x) d(x, y) = 4.0;
  const FeatureStack h = depth_hog(d);
  for (int b = 0; b < 9; ++b) EXPECT_NEAR(h.at(3, 3, b), b == 0 ? 1.0 : 0.0, 1e-6);
  for (int b = 0; b < 9; ++b) EXPECT_NEAR(h.at(12, 3, b), b == 0 ? 1.0 : 0.0, 1e-6);
}

TEST(DepthHog, MatchesCellLoopWithInfinity) {
  Rng rng(12);
  DepthRaster d(45, 37);
  for (auto& v : d.data) v = rng.uniform() < 0.1 ? std::numeric_limits<double>::infinity() : rng.uniform(1, 50);
  const FeatureStack h = depth_hog(d);
  for (int cy = 0; cy < 5; ++cy) {
    for (int cx = 0; cx < 6; ++cx) {
      const auto ref = oracle::cell_hog(d, cx, cy);
      const int x = std::min(44, cx * 8 + 3), y = std::min(36, cy * 8 + 5);
      for (int b = 0; b < 9; ++b) ASSERT_NEAR(h.at(x, y, b), ref[b], 1e-5) << cx << "," << cy;
    }
  }
  EXPECT_THROW(depth_hog(DepthRaster(7, 20, 1.0)), ValidationError);
}

TEST(DpmMap, MaxOverCoveringBoxes) {
  std::vector<Detection> dets(3);
  dets[0].bbox = {2, 2, 10, 10};
  dets[0].score = 0.5;
  dets[1].bbox = {5.5, 5.5, 12, 12};
  dets[1].score = 1.5;
  dets[2].bbox = {0, 0, 20, 20};
  dets[2].score = 9;
  dets[2].cls = "car";
  const auto m = dpm_score_map(dets, "pedestrian", 16, 16, -2);
  EXPECT_EQ(m(0, 0), -2);
  EXPECT_EQ(m(3, 3), 0.5);
  EXPECT_EQ(m(7, 7), 1.5);
  EXPECT_EQ(m(5, 5), 1.5);
  EXPECT_EQ(m(15, 15), -2);
  Rng rng(13);
  std::vector<Detection> many;
  for (int i = 0; i < 30; ++i) {
    Detection d;
    const double x = rng.uniform(-10, 60), y = rng.uniform(-10, 60);
    d.bbox = {x, y, x + rng.uniform(1, 25), y + rng.uniform(1, 25)};
    d.score = rng.normal();
    many.push_back(d);
  }
  const auto mm = dpm_score_map(many, "pedestrian", 64, 48, -2);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) ASSERT_EQ(mm(x, y), oracle::dpm_pixel(many, "pedestrian", x, y, -2));
}

struct Rendered {
  Scene scene;
  Bvh bvh;
  Camera cam;
  ContextMaps maps;
  PedestrianSet peds;
};

Rendered rendered(std::uint64_t seed) {
  Rendered r;
  SceneSpec spec;
  spec.seed = seed;
  r.scene = make_scene(spec);
  r.bvh = build_bvh(r.scene.mesh);
  r.cam = sample_plausible_camera(r.scene.mesh, r.bvh, seed);
  r.maps = render_context(r.cam, r.bvh, r.scene.mesh);
  r.peds = synth_pedestrians(r.cam, r.bvh, r.scene.mesh, 6, seed);
  return r;
}

TEST(PixelFeatures, LayoutAndSelection) {
  const Rendered r = rendered(1);
  const FeatureStack s = build_pixel_features(r.maps, r.cam.f, r.peds.candidates);
  ASSERT_EQ(s.channels(), 16 + 12 + 9 + 1);
  EXPECT_EQ(s.names.front(), "label_r0_building");
  EXPECT_EQ(s.names.back(), "dpm_pedestrian");
  const std::vector<std::string> hog{"hog_"};
  const FeatureStack h = select_channels(s, hog);
  ASSERT_EQ(h.channels(), 9);
  for (int y = 0; y < s.height; y += 17)
    for (int x = 0; x < s.width; x += 13)
      for (int b = 0; b < 9; ++b) EXPECT_EQ(h.at(x, y, b), s.at(x, y, 28 + b));
}

PixelSamples toy_samples(Rng& rng, int n, int dim, int classes) {
  PixelSamples s;
  s.X.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.index(classes));
    s.y.push_back(c);
    for (int d = 0; d < dim; ++d) s.X(i, d) = rng.normal(d == c ? 1.5 : 0.0, 1.0);
  }
  return s;
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  const PixelSamples s = toy_samples(rng, 60, 5, 3);
  Eigen::MatrixXd W(3, 5);
  Eigen::VectorXd b(3);
  for (int i = 0; i < W.size(); ++i) W.data()[i] = rng.normal(0, 0.5);
  for (int i = 0; i < 3; ++i) b[i] = rng.normal(0, 0.5);
  const double lambda = 0.01;
  Eigen::MatrixXd gW;
  Eigen::VectorXd gb;
  logistic_loss(W, b, s, lambda, &gW, &gb);
  const double h = 1e-6;
  for (int i = 0; i < W.size(); ++i) {
    Eigen::MatrixXd Wp = W, Wm = W;
    Wp.data()[i] += h;
    Wm.data()[i] -= h;
    const double fd = (logistic_loss(Wp, b, s, lambda) - logistic_loss(Wm, b, s, lambda)) / (2 * h);
    EXPECT_NEAR(gW.data()[i], fd, 1e-5);
  }
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd bp = b, bm = b;
    bp[i] += h;
    bm[i] -= h;
    const double fd = (logistic_loss(W, bp, s, lambda) - logistic_loss(W, bm, s, lambda)) / (2 * h);
    EXPECT_NEAR(gb[i], fd, 1e-5);
  }
}

TEST(Logistic, LossDecreasesAndSeparates) {
  Rng rng(15);
  const PixelSamples s = toy_samples(rng, 400, 4, 4);
  const LogisticResult r = train_pixel_classifier(s, 4);
  ASSERT_GE(r.loss.size(), 2u);
  for (std::size_t i = 1; i < r.loss.size(); ++i) EXPECT_LE(r.loss[i], r.loss[i - 1] + 1e-12);
  EXPECT_LT(r.loss.back(), std::log(4.0));
  int correct = 0;
  for (int i = 0; i < 400; ++i) {
    Eigen::VectorXd sc = r.model.W * s.X.row(i).transpose() + r.model.b;
    Eigen::Index arg;
    sc.maxCoeff(&arg);
    correct += arg == s.y[i];
  }
  EXPECT_GT(correct, 240);
}

TEST(Logistic, SingleClassRejected) {
  PixelSamples s;
  s.X = Eigen::MatrixXd::Ones(4, 2);
  s.y = {1, 1, 1, 1};
  EXPECT_THROW(train_pixel_classifier(s, 3), ValidationError);
}

TEST(Sampling, StrideAndUnknownSkipped) {
  FeatureStack st(10, 10, {"a"});
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) st.at(x, y, 0) = static_cast<float>(y * 10 + x);
  CodeRaster gt(10, 10, 1);
  gt(0, 0) = 255;
  const PixelSamples all = sample_pixels(st, gt, 1, 0, 3);
  EXPECT_EQ(all.y.size(), 99u);
  const PixelSamples a = sample_pixels(st, gt, 7, 4, 3);
  const PixelSamples b = sample_pixels(st, gt, 7, 4, 3);
  EXPECT_EQ(a.y, b.y);
  EXPECT_TRUE(a.X == b.X);
  EXPECT_LE(a.y.size(), 15u);
  PixelSamples joined = a;
  append_samples(joined, b);
  EXPECT_EQ(joined.y.size(), 2 * a.y.size());
}

TEST(Predict, ArgmaxWithLowerClassTies) {
  FeatureStack st(2, 1, {"a", "b"});
  st.at(0, 0, 0) = 1;
  st.at(0, 0, 1) = 0;
  st.at(1, 0, 0) = 1;
  st.at(1, 0, 1) = 1;
  MultiLinearModel m;
  m.W = Eigen::MatrixXd{{1, 0}, {0, 1}, {1, 1}};
  m.b = Eigen::VectorXd::Zero(3);
  m.b[2] = -1;
  m.channel_names = {"a", "b"};
  const LabelPrediction p = predict_labels(m, st);
  EXPECT_EQ(p.labels(0, 0), 0);
  EXPECT_EQ(p.labels(1, 0), 0);
  EXPECT_EQ(p.scores.size(), 6u);
  FeatureStack bad(2, 1, {"a"});
  EXPECT_THROW(predict_labels(m, bad), ValidationError);

  const MultiLinearModel back = parse_seg_model(seg_model_to_json(m));
  EXPECT_TRUE(back.W == m.W);
  EXPECT_TRUE(back.b == m.b);
  EXPECT_EQ(back.channel_names, m.channel_names);
}

}  // namespace
}  // namespace geolift
