#include <Eigen/Dense>
#include <cmath>
#include <nlohmann/json.hpp>

#include "geolift/random.hpp"
#include "geolift/seg_context.hpp"

namespace geolift {

using json = nlohmann::ordered_json;

PixelSamples sample_pixels(const FeatureStack& stack, const CodeRaster& gt, int stride, std::uint64_t seed,
                           int num_classes) {
  if (stride < 1) throw ValidationError("sample_pixels: stride must be >= 1");
  if (stack.width != gt.width || stack.height != gt.height) {
    throw ValidationError("sample_pixels: feature stack and label raster differ in size");
  }
  const std::size_t n = static_cast<std::size_t>(stack.width) * stack.height;
  Rng rng(seed);
  const std::size_t offset = rng.index(static_cast<std::size_t>(stride));
  std::vector<std::size_t> picked;
  for (std::size_t i = offset; i < n; i += stride) {
    if (gt.data[i] < num_classes) picked.push_back(i);
  }
  PixelSamples s;
  const int d = stack.channels();
  s.X.resize(static_cast<Eigen::Index>(picked.size()), d);
  s.y.reserve(picked.size());
  for (std::size_t r = 0; r < picked.size(); ++r) {
    const float* px = stack.data.data() + picked[r] * d;
    for (int c = 0; c < d; ++c) s.X(static_cast<Eigen::Index>(r), c) = px[c];
    s.y.push_back(gt.data[picked[r]]);
  }
  return s;
}

void append_samples(PixelSamples& into, const PixelSamples& more) {
  if (into.X.rows() == 0) {
    into = more;
    return;
  }
  if (more.X.rows() == 0) return;
  if (into.X.cols() != more.X.cols()) throw ValidationError("append_samples: feature dimensions differ");
  Eigen::MatrixXd X(into.X.rows() + more.X.rows(), into.X.cols());
  X << into.X, more.X;
  into.X = std::move(X);
  into.y.insert(into.y.end(), more.y.begin(), more.y.end());
}

double logistic_loss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const PixelSamples& s, double lambda,
                     Eigen::MatrixXd* grad_W, Eigen::VectorXd* grad_b) {
  const Eigen::Index n = s.X.rows();
  if (n == 0) throw ValidationError("logistic_loss: no samples");
  Eigen::MatrixXd S = s.X * W.transpose();
  S.rowwise() += b.transpose();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = S.row(i).maxCoeff();
    S.row(i).array() -= m;
    const double lse = std::log(S.row(i).array().exp().sum());
    loss -= S(i, s.y[i]) - lse;
    if (grad_W || grad_b) {
      S.row(i) = (S.row(i).array() - lse).exp();
      S(i, s.y[i]) -= 1.0;
    }
  }
  loss = loss / static_cast<double>(n) + 0.5 * lambda * W.squaredNorm();
  if (grad_W) *grad_W = S.transpose() * s.X / static_cast<double>(n) + lambda * W;
  if (grad_b) *grad_b = S.colwise().sum().transpose() / static_cast<double>(n);
  return loss;
}

LogisticResult train_pixel_classifier(const PixelSamples& samples, int num_classes, const LogisticOptions& options) {
  if (num_classes < 2) throw ValidationError("train_pixel_classifier: need at least two classes");
  if (samples.X.rows() != static_cast<Eigen::Index>(samples.y.size())) {
    throw ValidationError("train_pixel_classifier: sample and label counts differ");
  }
  std::vector<int> present(num_classes, 0);
  for (int y : samples.y) {
    if (y < 0 || y >= num_classes) throw ValidationError("train_pixel_classifier: label out of range");
    present[y] = 1;
  }
  int distinct = 0;
  for (int p : present) distinct += p;
  if (distinct < 2) throw ValidationError("train_pixel_classifier: training labels contain a single class");
  if (!samples.X.allFinite()) throw ValidationError("train_pixel_classifier: non-finite feature");

  const Eigen::Index d = samples.X.cols();
  LogisticResult res;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(num_classes, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(num_classes);
  Eigen::MatrixXd gW;
  Eigen::VectorXd gb;
  double loss = logistic_loss(W, b, samples, options.lambda, &gW, &gb);
  res.loss.push_back(loss);
  for (int it = 0; it < options.max_iters; ++it) {
    const double g2 = gW.squaredNorm() + gb.squaredNorm();
    if (std::sqrt(g2) < options.grad_tol) break;
    double step = options.initial_step;
    bool moved = false;
    while (step > 1e-20) {
      const Eigen::MatrixXd W2 = W - step * gW;
      const Eigen::VectorXd b2 = b - step * gb;
      const double trial = logistic_loss(W2, b2, samples, options.lambda);
      if (trial <= loss - 1e-4 * step * g2) {
        W = W2;
        b = b2;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    loss = logistic_loss(W, b, samples, options.lambda, &gW, &gb);
    res.loss.push_back(loss);
    res.iterations = it + 1;
  }
  res.model.W = W;
  res.model.b = b;
  return res;
}

LabelPrediction predict_labels(const MultiLinearModel& model, const FeatureStack& stack) {
  if (model.dim() != stack.channels()) {
    throw ValidationError("predict_labels: model expects " + std::to_string(model.dim()) +
                          " channels, stack has " + std::to_string(stack.channels()));
  }
  if (!model.channel_names.empty() && model.channel_names != stack.names) {
    throw ValidationError("predict_labels: feature channel names differ from the model's");
  }
  if (model.classes() < 1 || model.classes() > 256) throw ValidationError("predict_labels: bad class count");
  LabelPrediction out;
  out.labels = CodeRaster(stack.width, stack.height, 0);
  const int K = model.classes(), D = model.dim();
  out.scores.resize(static_cast<std::size_t>(stack.width) * stack.height * K);
  Eigen::VectorXd x(D);
  for (int y = 0; y < stack.height; ++y) {
    for (int xx = 0; xx < stack.width; ++xx) {
      const float* px = stack.pixel(xx, y);
      for (int c = 0; c < D; ++c) x[c] = px[c];
      const Eigen::VectorXd s = model.W * x + model.b;
      int best = 0;
      for (int k = 1; k < K; ++k) {
        if (s[k] > s[best]) best = k;
      }
      out.labels(xx, y) = static_cast<std::uint8_t>(best);
      const std::size_t base = (static_cast<std::size_t>(y) * stack.width + xx) * K;
      for (int k = 0; k < K; ++k) out.scores[base + k] = static_cast<float>(s[k]);
    }
  }
  return out;
}

std::string seg_model_to_json(const MultiLinearModel& model) {
  json j;
  j["classes"] = model.classes();
  j["dim"] = model.dim();
  j["channels"] = model.channel_names;
  j["W"] = json::array();
  for (int k = 0; k < model.classes(); ++k) {
    std::vector<double> row;
    for (int c = 0; c < model.dim(); ++c) row.push_back(model.W(k, c));
    j["W"].push_back(row);
  }
  j["b"] = std::vector<double>(model.b.data(), model.b.data() + model.b.size());
  return j.dump();
}

MultiLinearModel parse_seg_model(std::string_view text) {
  MultiLinearModel m;
  try {
    const auto j = json::parse(text);
    const auto rows = j.at("W").get<std::vector<std::vector<double>>>();
    const auto b = j.at("b").get<std::vector<double>>();
    if (rows.empty() || rows.size() != b.size()) throw ValidationError("seg model: W and b disagree on class count");
    const std::size_t d = rows[0].size();
    m.W.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != d) throw ValidationError("seg model: ragged W");
      for (std::size_t c = 0; c < d; ++c) m.W(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = rows[k][c];
    }
    m.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    if (j.contains("channels")) m.channel_names = j["channels"].get<std::vector<std::string>>();
    if (!m.channel_names.empty() && m.channel_names.size() != d) {
      throw ValidationError("seg model: channel name count differs from dim");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("seg model: ") + e.what());
  }
  if (!m.W.allFinite() || !m.b.allFinite()) throw ValidationError("seg model: non-finite parameter");
  return m;
}

}  // namespace geolift
