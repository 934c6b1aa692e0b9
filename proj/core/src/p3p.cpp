#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "geolift/alignment.hpp"
#include "geolift/resection.hpp"

namespace geolift {

namespace {

// Coefficients in ascending order: p[0] + p[1] v + ...
using Poly = std::vector<double>;

Poly mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

Poly add(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

Poly scale(const Poly& a, double s) {
  Poly r = a;
  for (double& x : r) x *= s;
  return r;
}

double eval(const Poly& p, double x) {
  double r = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) r = r * x + p[i];
  return r;
}

double eval_derivative(const Poly& p, double x) {
  double r = 0.0;
  for (std::size_t i = p.size(); i-- > 1;) r = r * x + static_cast<double>(i) * p[i];
  return r;
}

// Real roots via the companion matrix, Newton-polished.
std::vector<double> real_roots(Poly p) {
  const double mag = std::max(1e-300, *std::max_element(p.begin(), p.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  }));
  for (double& c : p) c /= std::abs(mag);
  while (p.size() > 1 && std::abs(p.back()) < 1e-14) p.pop_back();
  const int deg = static_cast<int>(p.size()) - 1;
  std::vector<double> roots;
  if (deg < 1) return roots;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 0; i < deg; ++i) companion(0, i) = -p[deg - 1 - i] / p[deg];
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  for (int i = 0; i < deg; ++i) {
    const std::complex<double> z = es.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-4 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 8; ++it) {
      const double d = eval_derivative(p, x);
      if (d == 0.0) break;
      const double step = eval(p, x) / d;
      x -= step;
      if (std::abs(step) <= 1e-16 * (1.0 + std::abs(x))) break;
    }
    roots.push_back(x);
  }
  return roots;
}

// Newton on the three law-of-cosines equations in the distances s.
bool polish_distances(Eigen::Vector3d& s, double a2, double b2, double c2, double ca, double cb,
                      double cg) {
  for (int it = 0; it < 12; ++it) {
    Eigen::Vector3d r(s[1] * s[1] + s[2] * s[2] - 2 * s[1] * s[2] * ca - a2,
                      s[0] * s[0] + s[2] * s[2] - 2 * s[0] * s[2] * cb - b2,
                      s[0] * s[0] + s[1] * s[1] - 2 * s[0] * s[1] * cg - c2);
    Eigen::Matrix3d J;
    J << 0, 2 * s[1] - 2 * s[2] * ca, 2 * s[2] - 2 * s[1] * ca,
         2 * s[0] - 2 * s[2] * cb, 0, 2 * s[2] - 2 * s[0] * cb,
         2 * s[0] - 2 * s[1] * cg, 2 * s[1] - 2 * s[0] * cg, 0;
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(J);
    if (!lu.isInvertible()) break;
    const Eigen::Vector3d step = lu.solve(r);
    if (!step.allFinite()) return false;
    s -= step;
    if (step.norm() <= 1e-15 * s.norm()) break;
  }
  return s.allFinite() && (s.array() > 0).all();
}

Vec3 bearing(const Correspondence& c, const Intrinsics& k) {
  return Vec3((c.px.x() - k.cx) / k.f, (c.px.y() - k.cy) / k.f, 1.0).normalized();
}

}  // namespace

double reprojection_error_sq(const Pose& pose, const Intrinsics& k, const Correspondence& c) {
  const Vec3 q = pose.apply(c.X);
  if (!(q.z() > 0)) return std::numeric_limits<double>::infinity();
  const Vec2 px(k.f * q.x() / q.z() + k.cx, k.f * q.y() / q.z() + k.cy);
  return (px - c.px).squaredNorm();
}

double reprojection_cost(const Pose& pose, const Intrinsics& k, std::span<const Correspondence> corrs) {
  double cost = 0.0;
  for (const auto& c : corrs) cost += reprojection_error_sq(pose, k, c);
  return cost;
}

std::vector<Pose> solve_p3p(std::span<const Correspondence, 3> corrs, const Intrinsics& k) {
  const Vec3& P1 = corrs[0].X;
  const Vec3& P2 = corrs[1].X;
  const Vec3& P3 = corrs[2].X;
  const Vec3 e12 = P2 - P1, e13 = P3 - P1;
  if (e12.cross(e13).norm() <= 1e-12 * std::max(1e-300, e12.norm() * e13.norm())) {
    throw ValidationError("p3p: world points are collinear");
  }
  const Vec3 f1 = bearing(corrs[0], k), f2 = bearing(corrs[1], k), f3 = bearing(corrs[2], k);
  if (f1.dot(f2) > 1 - 1e-14 || f1.dot(f3) > 1 - 1e-14 || f2.dot(f3) > 1 - 1e-14) {
    throw ValidationError("p3p: coincident bearing vectors");
  }

  const double a2 = (P2 - P3).squaredNorm();
  const double b2 = (P1 - P3).squaredNorm();
  const double c2 = (P1 - P2).squaredNorm();
  const double ca = f2.dot(f3), cb = f1.dot(f3), cg = f1.dot(f2);

  // With s2 = u s1, s3 = v s1 (Grunert): u = N(v) / D(v) and substituting into
  // 1 + u^2 - 2 u cos(gamma) = c^2/b^2 (1 + v^2 - 2 v cos(beta)) gives a
  // quartic in v after clearing D^2.
  const double K = (a2 - c2) / b2;
  const Poly base{1.0, -2.0 * cb, 1.0};  // 1 - 2 v cb + v^2
  const Poly N = add(scale(base, K), Poly{1.0, 0.0, -1.0});
  const Poly D{2.0 * cg, -2.0 * ca};
  const Poly quartic = add(add(mul(N, N), scale(mul(N, D), -2.0 * cg)),
                           mul(add(Poly{1.0}, scale(base, -c2 / b2)), mul(D, D)));

  std::vector<Pose> poses;
  const std::array<Vec3, 3> world{P1, P2, P3};
  for (const double v : real_roots(quartic)) {
    if (!(v > 0)) continue;
    const double d = eval(D, v);
    if (std::abs(d) < 1e-14) continue;
    const double u = eval(N, v) / d;
    if (!(u > 0)) continue;
    const double den = eval(base, v);
    if (!(den > 0)) continue;
    const double s1 = std::sqrt(b2 / den);
    Eigen::Vector3d s(s1, u * s1, v * s1);
    if (!polish_distances(s, a2, b2, c2, ca, cb, cg)) continue;
    const std::array<Vec3, 3> cam{s[0] * f1, s[1] * f2, s[2] * f3};
    const RigidTransform3D T = fit_rigid(world, cam);
    Pose pose{T.R, T.t};
    if (!pose.is_valid(1e-6)) continue;
    bool dup = false;
    for (const auto& p : poses) {
      if (rotation_distance(p.R, pose.R) < 1e-9 && (p.t - pose.t).norm() < 1e-9 * (1 + pose.t.norm())) {
        dup = true;
      }
    }
    if (!dup) poses.push_back(pose);
  }
  return poses;
}

std::optional<Pose> disambiguate(std::span<const Pose> candidates, const Intrinsics& k,
                                 std::span<const Correspondence> check) {
  std::optional<Pose> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& p : candidates) {
    const double cost = reprojection_cost(p, k, check);
    if (cost < best_cost) {
      best_cost = cost;
      best = p;
    }
  }
  return best;
}

}  // namespace geolift
