#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <utility>

#include "selfcal/core.hpp"
#include "selfcal/epipolar.hpp"

namespace selfcal {

/// X2 = rotation * X1 + translation, translation known up to scale.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::UnitX();
};

/// A pixel correspondence: x1 in image 1, x2 in image 2.
struct Correspondence {
  Vec2 x1 = Vec2::Zero();
  Vec2 x2 = Vec2::Zero();
};

namespace detail {

// Depths (d1, d2) with d2 x2 = R d1 x1 + t, least squares.
inline Eigen::Vector2d triangulate_depths(const Mat3& R, const Vec3& t,
                                          const Vec3& x1, const Vec3& x2) {
  Eigen::Matrix<double, 3, 2> A;
  A.col(0) = R * x1;
  A.col(1) = -x2;
  return A.colPivHouseholderQr().solve(-t);
}

}  // namespace detail

/// The four (R, t) factorizations of E = [t]x R, in enumeration order
/// (Ra, t), (Ra, -t), (Rb, t), (Rb, -t).
inline std::array<RelativePose, 4> essential_candidates(const Mat3& E) {
  Eigen::JacobiSVD<Mat3> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  if (U.determinant() < 0.0) U.col(2) *= -1.0;
  if (V.determinant() < 0.0) V.col(2) *= -1.0;

  Mat3 W;
  W << 0.0, -1.0, 0.0,
       1.0, 0.0, 0.0,
       0.0, 0.0, 1.0;
  const Mat3 Ra = U * W * V.transpose();
  const Mat3 Rb = U * W.transpose() * V.transpose();
  const Vec3 t = U.col(2).normalized();
  return {RelativePose{Ra, t}, RelativePose{Ra, -t}, RelativePose{Rb, t},
          RelativePose{Rb, -t}};
}

inline constexpr double kMinParallax = 1e-9;

/// Picks the essential factorization with the most correspondences in
/// front of both cameras. Ties go to the earlier candidate.
inline RelativePose decompose_pose(const FundamentalMatrix& F,
                                   const Intrinsics& k1, const Intrinsics& k2,
                                   std::span<const Correspondence> matches) {
  if (matches.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "pose decomposition needs at least one correspondence");
  }
  const auto candidates = essential_candidates(essential_from(F, k1, k2));
  const Mat3 K1inv = k1.K_inverse();
  const Mat3 K2inv = k2.K_inverse();

  int best = -1;
  int best_votes = 0;
  for (int i = 0; i < 4; ++i) {
    int votes = 0;
    for (const Correspondence& m : matches) {
      const Vec3 x1 = K1inv * m.x1.homogeneous();
      const Vec3 x2 = K2inv * m.x2.homogeneous();
      const Vec3 r1 = candidates[i].rotation * x1;
      // Rays without parallax carry no depth information.
      if (r1.cross(x2).norm() <= kMinParallax * r1.norm() * x2.norm()) {
        continue;
      }
      const Eigen::Vector2d d = detail::triangulate_depths(
          candidates[i].rotation, candidates[i].translation, x1, x2);
      if (d(0) > 0.0 && d(1) > 0.0) ++votes;
    }
    if (votes > best_votes) {
      best_votes = votes;
      best = i;
    }
  }
  if (best < 0) {
    throw Error(ErrorCode::kCheiralityAmbiguous,
                "no correspondence triangulates in front of both cameras");
  }
  return candidates[best];
}

}  // namespace selfcal
