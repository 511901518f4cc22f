#pragma once

// Two-view epipolar primitives.
//
// Convention used throughout the library: a fundamental matrix F relates
// pixel points by x2^T F x1 = 0, i.e. F maps points of image 1 to epipolar
// lines in image 2. With this convention the calibrated counterpart of F is
// E = K2^T F K1, and a relative pose (R, t) maps camera-1 coordinates to
// camera-2 coordinates as X2 = R X1 + t.

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "selfcal/core.hpp"

namespace selfcal {

/// Pinhole intrinsics with square pixels and zero skew.
struct Intrinsics {
  double f = 1.0;
  Vec2 c = Vec2::Zero();

  Intrinsics() = default;
  Intrinsics(double focal, Vec2 principal_point)
      : f(focal), c(std::move(principal_point)) {}
  Intrinsics(double focal, double u, double v) : f(focal), c(u, v) {}

  Mat3 K() const {
    Mat3 k;
    k << f, 0.0, c.x(),
         0.0, f, c.y(),
         0.0, 0.0, 1.0;
    return k;
  }

  Mat3 K_inverse() const {
    Mat3 k;
    k << 1.0 / f, 0.0, -c.x() / f,
         0.0, 1.0 / f, -c.y() / f,
         0.0, 0.0, 1.0;
    return k;
  }

  // Dual image of the absolute conic, K K^T.
  Mat3 omega() const {
    const Mat3 k = K();
    return k * k.transpose();
  }
};

/// Cached factors of F = U diag(sigma1, sigma2, 0) V^T.
struct SvdF {
  Vec3 u1, u2, u3;
  Vec3 v1, v2, v3;
  double sigma1 = 0.0;
  double sigma2 = 0.0;

  Mat3 U() const {
    Mat3 m;
    m << u1, u2, u3;
    return m;
  }
  Mat3 V() const {
    Mat3 m;
    m << v1, v2, v3;
    return m;
  }
  Mat3 reconstruct() const {
    return sigma1 * u1 * v1.transpose() + sigma2 * u2 * v2.transpose();
  }
};

/// Canonical representative of a fundamental matrix: exactly rank 2, unit
/// Frobenius norm, and its largest-magnitude entry positive.
class FundamentalMatrix {
 public:
  const Mat3& matrix() const { return m_; }
  const SvdF& svd() const { return svd_; }
  double operator()(int r, int c) const { return m_(r, c); }

  FundamentalMatrix transposed() const;

 private:
  friend FundamentalMatrix normalize_f(const Mat3& raw);

  Mat3 m_ = Mat3::Zero();
  SvdF svd_;
};

/// Ratio sigma2/sigma1 below which F is treated as rank 1.
inline constexpr double kRankDeficiencyRatio = 1e-9;

inline FundamentalMatrix normalize_f(const Mat3& raw) {
  if (!raw.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument,
                "fundamental matrix has non-finite entries");
  }
  if (!(raw.norm() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "fundamental matrix has zero norm");
  }
  Eigen::JacobiSVD<Mat3> svd(raw / raw.norm(),
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (s(1) < kRankDeficiencyRatio * s(0)) {
    throw Error(ErrorCode::kRankDeficient,
                "fundamental matrix is effectively rank 1");
  }

  Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  const double scale = std::hypot(s(0), s(1));
  double sigma1 = s(0) / scale;
  double sigma2 = s(1) / scale;

  Mat3 m = sigma1 * U.col(0) * V.col(0).transpose() +
           sigma2 * U.col(1) * V.col(1).transpose();

  // Sign of the largest-magnitude entry; first index wins ties.
  Eigen::Index r = 0, c = 0;
  m.cwiseAbs().maxCoeff(&r, &c);
  if (m(r, c) < 0.0) {
    m = -m;
    U = -U;
  }

  FundamentalMatrix out;
  out.m_ = m;
  out.svd_.u1 = U.col(0);
  out.svd_.u2 = U.col(1);
  out.svd_.u3 = U.col(2);
  out.svd_.v1 = V.col(0);
  out.svd_.v2 = V.col(1);
  out.svd_.v3 = V.col(2);
  out.svd_.sigma1 = sigma1;
  out.svd_.sigma2 = sigma2;
  return out;
}

inline FundamentalMatrix FundamentalMatrix::transposed() const {
  return normalize_f(m_.transpose());
}

/// F = K2^-T [t]x R K1^-1 for the pose X2 = R X1 + t.
inline FundamentalMatrix fundamental_from_pose(const Intrinsics& k1,
                                               const Intrinsics& k2,
                                               const Mat3& R, const Vec3& t) {
  const Mat3 E = skew(t) * R;
  return normalize_f(k2.K_inverse().transpose() * E * k1.K_inverse());
}

/// E = K2^T F K1, the calibrated matrix under the library convention.
inline Mat3 essential_from(const FundamentalMatrix& F, const Intrinsics& k1,
                           const Intrinsics& k2) {
  return k2.K().transpose() * F.matrix() * k1.K();
}

inline bool is_valid_essential(const FundamentalMatrix& F,
                               const Intrinsics& k1, const Intrinsics& k2,
                               double tol) {
  const Vec3 s = Eigen::JacobiSVD<Mat3>(essential_from(F, k1, k2))
                     .singularValues();
  if (!(s(0) > 0.0)) return false;
  return s(2) / s(0) <= tol && (s(0) - s(1)) / s(0) <= tol;
}

}  // namespace selfcal
