#pragma once

// Closed-form focal lengths from a fundamental matrix whose principal
// points have been moved to the origin.

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "selfcal/core.hpp"
#include "selfcal/epipolar.hpp"

namespace selfcal {

/// f^2 = numerator / denominator, kept unevaluated so its sign can be read
/// without dividing.
struct FocalSquaredRatio {
  double numerator = 0.0;
  double denominator = 0.0;

  double value() const { return numerator / denominator; }
  bool positive() const {
    return (numerator > 0.0 && denominator > 0.0) ||
           (numerator < 0.0 && denominator < 0.0);
  }
};

struct BougnouxResult {
  FocalSquaredRatio f1_sq;
  FocalSquaredRatio f2_sq;
};

/// F' = T2^-T F T1^-1 where T_i translates c_i to the origin.
inline FundamentalMatrix translate_f_to_origin(const FundamentalMatrix& F,
                                               const Vec2& c1,
                                               const Vec2& c2) {
  // T^-1 adds c back.
  Mat3 T1inv = Mat3::Identity();
  Mat3 T2inv = Mat3::Identity();
  T1inv.block<2, 1>(0, 2) = c1;
  T2inv.block<2, 1>(0, 2) = c2;
  return normalize_f(T2inv.transpose() * F.matrix() * T1inv);
}

inline constexpr double kDegenerateFormulaRatio = 1e-15;

namespace detail {

struct RatioTerms {
  FocalSquaredRatio ratio;
  double denominator_magnitude = 0.0;  // sum of |monomials|
};

// Focal of the camera whose points F multiplies from the right. Indices in
// the comments are one-based.
inline RatioTerms bougnoux_terms(const Mat3& F) {
  const double F11 = F(0, 0), F12 = F(0, 1), F13 = F(0, 2);
  const double F21 = F(1, 0), F22 = F(1, 1), F23 = F(1, 2);
  const double F31 = F(2, 0), F32 = F(2, 1), F33 = F(2, 2);

  RatioTerms out;
  out.ratio.numerator = -F33 * (F12 * F13 * F33 - F13 * F13 * F32 +
                                F22 * F23 * F33 - F23 * F23 * F32);
  const std::array<double, 8> den = {
      F11 * F12 * F31 * F33,  -F11 * F13 * F31 * F32,
      F12 * F12 * F32 * F33,  -F12 * F13 * F32 * F32,
      F21 * F22 * F31 * F33,  -F21 * F23 * F31 * F32,
      F22 * F22 * F32 * F33,  -F22 * F23 * F32 * F32};
  for (double m : den) {
    out.ratio.denominator += m;
    out.denominator_magnitude += std::abs(m);
  }
  return out;
}

inline bool sign_positive(const FocalSquaredRatio& r) {
  // Zero in either factor counts as a rejection.
  return (r.numerator > 0.0) == (r.denominator > 0.0) &&
         r.numerator != 0.0 && r.denominator != 0.0;
}

}  // namespace detail

/// Squared focal lengths of both cameras. F must already have its principal
/// points at the origin. The second camera uses the same formula on F^T.
inline BougnouxResult bougnoux(const FundamentalMatrix& F) {
  const detail::RatioTerms a = detail::bougnoux_terms(F.matrix());
  const detail::RatioTerms b = detail::bougnoux_terms(F.matrix().transpose());
  for (const auto* t : {&a, &b}) {
    if (std::abs(t->ratio.denominator) <=
        kDegenerateFormulaRatio * t->denominator_magnitude) {
      throw Error(ErrorCode::kDegenerateFormula,
                  "focal length formula is singular for this geometry");
    }
  }
  return BougnouxResult{a.ratio, b.ratio};
}

/// True iff both squared focals implied by F are positive. Only signs of the
/// polynomial evaluations are inspected.
inline bool rfc_check(const FundamentalMatrix& F) {
  return detail::sign_positive(detail::bougnoux_terms(F.matrix()).ratio) &&
         detail::sign_positive(
             detail::bougnoux_terms(F.matrix().transpose()).ratio);
}

/// rfc_check on a raw (unnormalized) matrix with principal points c1, c2.
/// Both polynomials have even degree, so neither scale nor sign of F
/// matters and no factorization is needed.
inline bool rfc_check(const Mat3& F, const Vec2& c1, const Vec2& c2) {
  Mat3 T1inv = Mat3::Identity();
  Mat3 T2inv = Mat3::Identity();
  T1inv.block<2, 1>(0, 2) = c1;
  T2inv.block<2, 1>(0, 2) = c2;
  const Mat3 G = T2inv.transpose() * F * T1inv;
  return detail::sign_positive(detail::bougnoux_terms(G).ratio) &&
         detail::sign_positive(detail::bougnoux_terms(G.transpose()).ratio);
}

/// Focal lengths in pixels from F and known principal points.
inline std::pair<double, double> bougnoux_focal_lengths(
    const FundamentalMatrix& F, const Vec2& c1, const Vec2& c2) {
  const BougnouxResult r = bougnoux(translate_f_to_origin(F, c1, c2));
  if (!r.f1_sq.positive() || !r.f2_sq.positive()) {
    throw Error(ErrorCode::kNoRealFocal, "imaginary focal length");
  }
  return {std::sqrt(r.f1_sq.value()), std::sqrt(r.f2_sq.value())};
}

namespace detail {

// a' diag(x, x, 1) b = x p + q.
struct LinearInX {
  double p = 0.0;
  double q = 0.0;
};

inline LinearInX origin_conic(const Vec3& a, const Vec3& b) {
  return {a(0) * b(0) + a(1) * b(1), a(2) * b(2)};
}

// Ascending coefficients of s (x pa + qa)(x pb + qb).
inline std::array<double, 3> product_coeffs(double s, const LinearInX& a,
                                            const LinearInX& b) {
  return {s * a.q * b.q, s * (a.p * b.q + a.q * b.p), s * a.p * b.p};
}

inline std::array<double, 3> add(const std::array<double, 3>& a,
                                 const std::array<double, 3>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

}  // namespace detail

/// Common focal length of two cameras from F with principal points at the
/// origin. With w1 = w2 = diag(x, x, 1), x = f^2, each Kruppa residual is a
/// quadratic in x. Because U and V are orthonormal, x = 1 (w = I) always
/// solves both, so each quadratic factors as (x - 1)(c2 x - c0) and leaves
/// the single root x = c0 / c2. The first equation is used unless its
/// leading coefficient vanishes, in which case the second takes over.
/// When F is already essential (equal singular values) the SVD basis is not
/// unique and the trivial root is the answer.
inline double sturm_equal_focal(const FundamentalMatrix& F) {
  using detail::origin_conic;
  using detail::product_coeffs;
  const SvdF& d = F.svd();
  if (d.sigma1 - d.sigma2 <= 1e-10 * d.sigma1) return 1.0;
  const auto a11 = origin_conic(d.v1, d.v1);
  const auto a12 = origin_conic(d.v1, d.v2);
  const auto a22 = origin_conic(d.v2, d.v2);
  const auto b11 = origin_conic(d.u1, d.u1);
  const auto b12 = origin_conic(d.u1, d.u2);
  const auto b22 = origin_conic(d.u2, d.u2);

  const std::array<std::array<double, 3>, 2> kappa = {
      detail::add(product_coeffs(d.sigma1, a11, b12),
                  product_coeffs(d.sigma2, a12, b22)),
      detail::add(product_coeffs(d.sigma1, a12, b11),
                  product_coeffs(d.sigma2, a22, b12))};

  for (const auto& c : kappa) {
    const double cmax = std::max({std::abs(c[0]), std::abs(c[1]),
                                  std::abs(c[2])});
    if (cmax == 0.0 || std::abs(c[2]) <= 1e-12 * cmax) continue;
    const double x = c[0] / c[2];
    if (x > 0.0 && std::isfinite(x)) return std::sqrt(x);
  }
  throw Error(ErrorCode::kNoRealFocal,
              "no positive real root for the equal focal length");
}

}  // namespace selfcal
