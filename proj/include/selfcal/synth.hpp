#pragma once

// Synthetic two-camera scenes.
//
// Camera 1 sits at the origin looking down +z. Camera 2 is centred at
// (1200, y, 600), turned 60 degrees about its y-axis towards the first
// camera's principal axis, and then tilted by theta about its own x-axis.
// With theta = 0 and y = 0 the two principal axes intersect.

#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "selfcal/core.hpp"
#include "selfcal/epipolar.hpp"
#include "selfcal/pose.hpp"

namespace selfcal {

struct SceneConfig {
  double theta_deg = 0.0;
  double y = 300.0;
  double f1 = 600.0;
  double f2 = 400.0;
  int width = 640;
  int height = 480;
  int n_points = 100;
  double sigma_n = 0.0;  // pixel noise std dev
  double sigma_p = 0.0;  // assumed principal point offset std dev
  // Fraction of correspondences whose second point is replaced by a
  // uniformly random pixel.
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  Intrinsics k1, k2;  // ground truth, principal points at image centres
  RelativePose pose;  // X2 = R X1 + t, with |t| = baseline length
  Vec3 camera2_center = Vec3::Zero();
  std::vector<Vec3> points;
  std::vector<Correspondence> correspondences;
  std::vector<bool> is_inlier;
  FundamentalMatrix gt_f;
  // Principal points the estimators are told about.
  std::array<Vec2, 2> assumed_pp;
  double principal_axes_distance = 0.0;
  bool coplanar_axes = false;

  RelativePose unit_pose() const {
    return RelativePose{pose.rotation, pose.translation.normalized()};
  }
};

// World box the scene points are drawn from before the visibility test.
inline constexpr double kSceneBoxX = 1000.0;
inline constexpr double kSceneBoxY = 800.0;
inline constexpr double kSceneMinDepth = 800.0;
inline constexpr double kSceneMaxDepth = 2000.0;

namespace detail {

inline Mat3 rotation_about(const Vec3& axis, double radians) {
  return Eigen::AngleAxisd(radians, axis).toRotationMatrix();
}

}  // namespace detail

/// Camera-2 orientation (camera to world) for configuration (theta, y).
inline Mat3 camera2_orientation(double theta_deg) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  return detail::rotation_about(Vec3::UnitY(), -60.0 * kDeg) *
         detail::rotation_about(Vec3::UnitX(), theta_deg * kDeg);
}

inline Vec3 camera2_center(double y) { return Vec3(1200.0, y, 600.0); }

/// Shortest distance between the two principal axes.
inline double principal_axes_distance(double theta_deg, double y) {
  const Vec3 d1 = Vec3::UnitZ();
  const Vec3 d2 = camera2_orientation(theta_deg).col(2);
  const Vec3 c2 = camera2_center(y);
  const Vec3 n = d1.cross(d2);
  if (n.norm() < 1e-15) return (c2 - c2.dot(d1) * d1).norm();
  return std::abs(c2.dot(n)) / n.norm();
}

inline bool in_image(const Vec2& x, int width, int height) {
  return x.x() >= 0.0 && x.x() <= width && x.y() >= 0.0 && x.y() <= height;
}

inline SyntheticScene generate_scene(const SceneConfig& cfg) {
  if (cfg.n_points < 1 || cfg.width <= 0 || cfg.height <= 0 ||
      !(cfg.f1 > 0.0) || !(cfg.f2 > 0.0) || cfg.sigma_n < 0.0 ||
      cfg.sigma_p < 0.0 || cfg.outlier_fraction < 0.0 ||
      cfg.outlier_fraction > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid scene configuration");
  }
  std::mt19937_64 rng(detail::mix_seed(cfg.seed));
  std::uniform_real_distribution<double> ux(-kSceneBoxX, kSceneBoxX);
  std::uniform_real_distribution<double> uy(-kSceneBoxY, kSceneBoxY);
  std::uniform_real_distribution<double> uz(kSceneMinDepth, kSceneMaxDepth);

  SyntheticScene s;
  const Vec2 centre(0.5 * cfg.width, 0.5 * cfg.height);
  s.k1 = Intrinsics(cfg.f1, centre);
  s.k2 = Intrinsics(cfg.f2, centre);
  const Mat3 R = camera2_orientation(cfg.theta_deg).transpose();
  s.camera2_center = camera2_center(cfg.y);
  s.pose = RelativePose{R, -R * s.camera2_center};
  s.gt_f = fundamental_from_pose(s.k1, s.k2, s.pose.rotation,
                                 s.pose.translation);
  s.principal_axes_distance = principal_axes_distance(cfg.theta_deg, cfg.y);
  s.coplanar_axes =
      s.principal_axes_distance <= 1e-9 * s.camera2_center.norm();

  const Mat3 K1 = s.k1.K();
  const Mat3 K2 = s.k2.K();
  std::vector<Correspondence> clean;
  const int max_attempts = 10 * cfg.n_points;
  for (int attempt = 0;
       attempt < max_attempts && static_cast<int>(clean.size()) < cfg.n_points;
       ++attempt) {
    const Vec3 X(ux(rng), uy(rng), uz(rng));
    const Vec3 X2 = R * X + s.pose.translation;
    if (X2.z() <= 0.0) continue;
    const Vec2 x1 = (K1 * X).hnormalized();
    const Vec2 x2 = (K2 * X2).hnormalized();
    if (!in_image(x1, cfg.width, cfg.height) ||
        !in_image(x2, cfg.width, cfg.height)) {
      continue;
    }
    s.points.push_back(X);
    clean.push_back({x1, x2});
  }
  if (static_cast<int>(clean.size()) < cfg.n_points) {
    throw Error(ErrorCode::kFrustumEmpty,
                "could not sample enough points visible in both cameras");
  }

  std::normal_distribution<double> pixel_noise(0.0, 1.0);
  s.correspondences = clean;
  if (cfg.sigma_n > 0.0) {
    for (auto& c : s.correspondences) {
      c.x1 += cfg.sigma_n * Vec2(pixel_noise(rng), pixel_noise(rng));
      c.x2 += cfg.sigma_n * Vec2(pixel_noise(rng), pixel_noise(rng));
    }
  }
  for (int i = 0; i < 2; ++i) {
    s.assumed_pp[i] = centre;
    if (cfg.sigma_p > 0.0) {
      s.assumed_pp[i] +=
          cfg.sigma_p * Vec2(pixel_noise(rng), pixel_noise(rng));
    }
  }

  s.is_inlier.assign(s.correspondences.size(), true);
  const int n_outliers = static_cast<int>(
      std::lround(cfg.outlier_fraction * cfg.n_points));
  if (n_outliers > 0) {
    std::uniform_real_distribution<double> upx(0.0, cfg.width);
    std::uniform_real_distribution<double> upy(0.0, cfg.height);
    std::vector<int> idx(cfg.n_points);
    for (int i = 0; i < cfg.n_points; ++i) idx[i] = i;
    for (int i = 0; i < n_outliers; ++i) {
      std::uniform_int_distribution<int> pick(i, cfg.n_points - 1);
      std::swap(idx[i], idx[pick(rng)]);
      s.correspondences[idx[i]].x2 = Vec2(upx(rng), upy(rng));
      s.is_inlier[idx[i]] = false;
    }
  }
  return s;
}

}  // namespace selfcal
