#include <algorithm>
#include <cmath>

#include "geolift/detect_context.hpp"
#include "geolift/error.hpp"

namespace geolift {

SvmResult train_rescorer(const std::vector<std::vector<double>>& features, std::span<const int> labels,
                         const SvmOptions& options) {
  const std::size_t n = features.size();
  if (n == 0) throw ValidationError("train_rescorer: no training examples");
  if (labels.size() != n) throw ValidationError("train_rescorer: label count differs from feature count");
  if (!(options.C > 0) || !(options.pos_weight > 0) || !(options.neg_weight > 0)) {
    throw ValidationError("train_rescorer: C and class weights must be > 0");
  }
  const std::size_t d = features[0].size();
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (features[i].size() != d) throw ValidationError("train_rescorer: ragged feature rows");
    for (double v : features[i]) {
      if (!std::isfinite(v)) throw ValidationError("train_rescorer: non-finite feature");
    }
    if (labels[i] == 1) has_pos = true;
    else if (labels[i] == -1) has_neg = true;
    else throw ValidationError("train_rescorer: labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw ValidationError("train_rescorer: need examples of both classes");

  // Augmented weights: w[d] is the bias, paired with a constant 1 feature.
  std::vector<double> w(d + 1, 0.0), alpha(n, 0.0), upper(n), qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    upper[i] = options.C * (labels[i] == 1 ? options.pos_weight : options.neg_weight);
    double q = 1.0;
    for (double v : features[i]) q += v * v;
    qii[i] = q;
  }
  auto dot = [&](std::size_t i) {
    double s = w[d];
    const auto& x = features[i];
    for (std::size_t k = 0; k < d; ++k) s += w[k] * x[k];
    return s;
  };
  auto wnorm2 = [&] {
    double s = 0.0;
    for (double v : w) s += v * v;
    return s;
  };

  SvmResult res;
  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) {
      const double y = labels[i];
      const double G = y * dot(i) - 1.0;
      const double a_old = alpha[i];
      const double a_new = std::clamp(a_old - G / qii[i], 0.0, upper[i]);
      const double delta = (a_new - a_old) * y;
      if (delta == 0.0) continue;
      alpha[i] = a_new;
      const auto& x = features[i];
      for (std::size_t k = 0; k < d; ++k) w[k] += delta * x[k];
      w[d] += delta;
    }
    const double half_w2 = 0.5 * wnorm2();
    double sum_alpha = 0.0, hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_alpha += alpha[i];
      hinge += upper[i] * std::max(0.0, 1.0 - labels[i] * dot(i));
    }
    res.dual_objective.push_back(half_w2 - sum_alpha);
    res.primal_objective = half_w2 + hinge;
    res.duality_gap = res.primal_objective + res.dual_objective.back();
    res.epochs = epoch + 1;
    if (res.duality_gap < options.gap_tol) break;
  }
  res.model.weights.assign(w.begin(), w.begin() + static_cast<long>(d));
  res.model.bias = w[d];
  return res;
}

}  // namespace geolift
