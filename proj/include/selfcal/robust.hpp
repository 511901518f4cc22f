#pragma once

// Fundamental matrix estimation from point correspondences: the 7-point
// minimal solver, an 8-point least-squares refit, Sampson scoring and a
// seeded RANSAC loop with an optional real-focal-length check on every
// minimal model before it is scored.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "selfcal/closed_form.hpp"
#include "selfcal/core.hpp"
#include "selfcal/epipolar.hpp"
#include "selfcal/polynomial.hpp"
#include "selfcal/pose.hpp"

namespace selfcal {

inline constexpr int kMinimalSampleSize = 7;

namespace detail {

// Similarity moving the centroid to the origin with RMS distance sqrt(2).
template <typename Get>
Mat3 hartley_transform(std::span<const Correspondence> pts, Get get) {
  Vec2 mean = Vec2::Zero();
  for (const auto& c : pts) mean += get(c);
  mean /= static_cast<double>(pts.size());
  double ms = 0.0;
  for (const auto& c : pts) ms += (get(c) - mean).squaredNorm();
  ms /= static_cast<double>(pts.size());
  const double s = ms > 0.0 ? std::sqrt(2.0 / ms) : 1.0;
  Mat3 T;
  T << s, 0.0, -s * mean.x(),
       0.0, s, -s * mean.y(),
       0.0, 0.0, 1.0;
  return T;
}

struct NormalizedSample {
  Mat3 T1, T2;
  Eigen::Matrix<double, Eigen::Dynamic, 9> A;
};

// Rows of the design matrix: x2' F x1 = sum_ij x2_i x1_j F_ij, F row-major.
inline NormalizedSample design_matrix(std::span<const Correspondence> pts) {
  NormalizedSample out;
  out.T1 = hartley_transform(pts, [](const Correspondence& c) { return c.x1; });
  out.T2 = hartley_transform(pts, [](const Correspondence& c) { return c.x2; });
  out.A.resize(static_cast<Eigen::Index>(pts.size()), 9);
  for (size_t r = 0; r < pts.size(); ++r) {
    const Vec3 a = out.T1 * pts[r].x1.homogeneous();
    const Vec3 b = out.T2 * pts[r].x2.homogeneous();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.A(r, 3 * i + j) = b(i) * a(j);
  }
  return out;
}

inline Mat3 unstack(const Eigen::Matrix<double, 9, 1>& f) {
  Mat3 F;
  F << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  return F;
}

inline int numerical_rank(const Eigen::VectorXd& sv, double rel) {
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel * sv(0)) ++r;
  return r;
}

}  // namespace detail

inline constexpr double kRealCubicRootTol = 1e-10;

/// One to three fundamental matrices through seven correspondences.
inline std::vector<FundamentalMatrix> seven_point(
    std::span<const Correspondence> sample) {
  if (sample.size() != kMinimalSampleSize) {
    throw Error(ErrorCode::kInvalidArgument,
                "seven_point needs exactly 7 correspondences");
  }
  const detail::NormalizedSample ns = detail::design_matrix(sample);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ns.A, Eigen::ComputeFullV);
  if (detail::numerical_rank(svd.singularValues(), 1e-10) < 7) {
    throw Error(ErrorCode::kDegenerateSample,
                "design matrix of the sample has rank below 7");
  }
  const Mat3 Fa = detail::unstack(svd.matrixV().col(7));
  const Mat3 Fb = detail::unstack(svd.matrixV().col(8));

  // det(a Fa + (1 - a) Fb) is a cubic in a; interpolate it at four points.
  auto det_at = [&](double a) {
    return (a * Fa + (1.0 - a) * Fb).determinant();
  };
  const double p0 = det_at(0.0), p1 = det_at(1.0), pm = det_at(-1.0),
               p2 = det_at(2.0);
  std::array<double, 4> c;
  c[0] = p0;
  c[2] = 0.5 * (p1 + pm) - p0;
  const double odd = 0.5 * (p1 - pm);                  // c1 + c3
  const double odd4 = 0.5 * (p2 - p0 - 4.0 * c[2]);    // c1 + 4 c3
  c[3] = (odd4 - odd) / 3.0;
  c[1] = odd - c[3];

  std::vector<FundamentalMatrix> out;
  for (const auto& z : polynomial_roots(c, 1e-14)) {
    if (std::abs(z.imag()) > kRealCubicRootTol * (1.0 + std::abs(z.real())))
      continue;
    const double a = z.real();
    const Mat3 Fn = a * Fa + (1.0 - a) * Fb;
    try {
      out.push_back(normalize_f(ns.T2.transpose() * Fn * ns.T1));
    } catch (const Error&) {
      // Rank-1 root; not a fundamental matrix.
    }
  }
  return out;
}

/// Least-squares fundamental matrix through eight or more correspondences,
/// rank 2 enforced in normalized coordinates.
inline FundamentalMatrix eight_point_refit(
    std::span<const Correspondence> inliers) {
  if (inliers.size() < 8) {
    throw Error(ErrorCode::kTooFewPoints,
                "eight_point_refit needs at least 8 correspondences");
  }
  const detail::NormalizedSample ns = detail::design_matrix(inliers);
  // A'A keeps the decomposition 9x9 regardless of the number of points.
  const Eigen::Matrix<double, 9, 9> AtA = ns.A.transpose() * ns.A;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(AtA);
  const Eigen::Matrix<double, 9, 1> ev = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::VectorXd sv = ev.reverse().cwiseSqrt();
  // A planar scene leaves a three-dimensional null space (rank 6); that is
  // still accepted, anything worse is not.
  if (detail::numerical_rank(sv, 1e-10) < 6) {
    throw Error(ErrorCode::kDegenerateSample,
                "design matrix of the inliers is rank deficient");
  }
  Mat3 Fn = detail::unstack(eig.eigenvectors().col(0));
  Eigen::JacobiSVD<Mat3> svd(Fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = svd.singularValues();
  s(2) = 0.0;
  Fn = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  try {
    return normalize_f(ns.T2.transpose() * Fn * ns.T1);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDegenerateSample, e.what());
  }
}

/// First-order geometric error in squared pixels.
inline double sampson_error(const Mat3& F, const Correspondence& c) {
  const Vec3 x1 = c.x1.homogeneous();
  const Vec3 x2 = c.x2.homogeneous();
  const Vec3 l2 = F * x1;
  const Vec3 l1 = F.transpose() * x2;
  const double num = x2.dot(l2);
  const double den = l2.head<2>().squaredNorm() + l1.head<2>().squaredNorm();
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num * num / den;
}

inline double sampson_error(const FundamentalMatrix& F,
                            const Correspondence& c) {
  return sampson_error(F.matrix(), c);
}

struct RansacConfig {
  double threshold = 3.0;  // pixels; compared against sqrt(Sampson)
  int max_iterations = 1000;
  std::uint64_t seed = 0;
  bool rfc_enabled = false;
  // Unset: centre of the bounding box of each image's points.
  std::optional<std::array<Vec2, 2>> rfc_principal_points;
  double confidence = 0.999;  // 1.0 runs all iterations
  bool lo_enabled = true;     // terminal 8-point refit on the inliers
};

struct RansacReport {
  FundamentalMatrix best_f;
  std::vector<bool> inlier_mask;
  int iterations_run = 0;
  long long models_generated = 0;
  long long models_rejected_rfc = 0;
  long long score_evaluations = 0;

  int inlier_count() const {
    return static_cast<int>(
        std::count(inlier_mask.begin(), inlier_mask.end(), true));
  }
};

namespace detail {

inline Vec2 bounding_box_centre(std::span<const Correspondence> pts,
                                bool second) {
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const auto& c : pts) {
    const Vec2& x = second ? c.x2 : c.x1;
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  return 0.5 * (lo + hi);
}

inline int count_inliers(const Mat3& F, std::span<const Correspondence> pts,
                         double threshold_sq, std::vector<bool>* mask) {
  int n = 0;
  if (mask) mask->assign(pts.size(), false);
  for (size_t i = 0; i < pts.size(); ++i) {
    if (sampson_error(F, pts[i]) <= threshold_sq) {
      ++n;
      if (mask) (*mask)[i] = true;
    }
  }
  return n;
}

// Iterations needed to draw one all-inlier sample with the given confidence.
inline double required_iterations(double inlier_ratio, double confidence) {
  const double w = std::pow(inlier_ratio, kMinimalSampleSize);
  if (w >= 1.0) return 1.0;
  if (w <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(1.0 - confidence) / std::log(1.0 - w);
}

}  // namespace detail

inline RansacReport ransac_f(std::span<const Correspondence> pts,
                             const RansacConfig& cfg) {
  if (pts.size() < static_cast<size_t>(kMinimalSampleSize)) {
    throw Error(ErrorCode::kTooFewPoints,
                "at least 7 correspondences required");
  }
  if (!(cfg.threshold > 0.0) || cfg.max_iterations < 1 ||
      !(cfg.confidence >= 0.0 && cfg.confidence <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid RANSAC configuration");
  }
  const std::array<Vec2, 2> pp =
      cfg.rfc_principal_points.value_or(std::array<Vec2, 2>{
          detail::bounding_box_centre(pts, false),
          detail::bounding_box_centre(pts, true)});
  const double thr_sq = cfg.threshold * cfg.threshold;
  const int n = static_cast<int>(pts.size());

  std::mt19937_64 rng(detail::mix_seed(cfg.seed));
  std::vector<int> index(n);
  std::iota(index.begin(), index.end(), 0);
  std::array<Correspondence, kMinimalSampleSize> sample;

  RansacReport report;
  std::optional<FundamentalMatrix> best;
  int best_count = -1;
  double needed = std::numeric_limits<double>::infinity();

  for (int it = 0; it < cfg.max_iterations; ++it) {
    if (cfg.confidence < 1.0 && it >= needed) break;
    report.iterations_run = it + 1;
    // Partial Fisher-Yates draw of 7 distinct indices.
    for (int k = 0; k < kMinimalSampleSize; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(index[k], index[pick(rng)]);
      sample[k] = pts[index[k]];
    }
    std::vector<FundamentalMatrix> models;
    try {
      models = seven_point(sample);
    } catch (const Error&) {
      continue;
    }
    for (const FundamentalMatrix& F : models) {
      ++report.models_generated;
      if (cfg.rfc_enabled && !rfc_check(F.matrix(), pp[0], pp[1])) {
        ++report.models_rejected_rfc;
        continue;
      }
      report.score_evaluations += n;
      const int count = detail::count_inliers(F.matrix(), pts, thr_sq, nullptr);
      if (count > best_count) {
        best_count = count;
        best = F;
        needed = detail::required_iterations(
            static_cast<double>(count) / n, cfg.confidence);
      }
    }
  }
  if (!best) {
    throw Error(ErrorCode::kNoModelFound,
                "no minimal sample produced an acceptable model");
  }

  detail::count_inliers(best->matrix(), pts, thr_sq, &report.inlier_mask);
  if (cfg.lo_enabled && best_count >= 8) {
    std::vector<Correspondence> inliers;
    for (int i = 0; i < n; ++i)
      if (report.inlier_mask[i]) inliers.push_back(pts[i]);
    try {
      const FundamentalMatrix refit = eight_point_refit(inliers);
      const bool admissible =
          !cfg.rfc_enabled || rfc_check(refit.matrix(), pp[0], pp[1]);
      std::vector<bool> mask;
      if (admissible &&
          detail::count_inliers(refit.matrix(), pts, thr_sq, &mask) >=
              best_count) {
        best = refit;
        report.inlier_mask = std::move(mask);
      }
    } catch (const Error&) {
      // Keep the minimal model.
    }
  }
  report.best_f = *best;
  return report;
}

}  // namespace selfcal
