#pragma once

// The two independent Kruppa equations in SVD form and their analytic
// derivatives with respect to (f, u, v) of both cameras.
//
//   k1 = s1 (v1' w1 v1)(u1' w2 u2) + s2 (v1' w1 v2)(u2' w2 u2)
//   k2 = s1 (v1' w1 v2)(u1' w2 u1) + s2 (v2' w1 v2)(u1' w2 u2)
//
// with w_i = K_i K_i^T. Writing p = (u, v, 1), the conic form is
// a' w b = f^2 (a0 b0 + a1 b1) + (p.a)(p.b), which every routine below
// evaluates directly instead of forming w.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>

#include "selfcal/core.hpp"
#include "selfcal/epipolar.hpp"

namespace selfcal {

/// Parameter order used by KruppaJacobian columns.
enum KruppaParam { kF1 = 0, kU1, kV1, kF2, kU2, kV2 };

struct KruppaResiduals {
  double k1 = 0.0;
  double k2 = 0.0;
  // Magnitude of the largest additive term; residuals are meaningful
  // relative to this.
  double scale = 0.0;

  double relative() const {
    return scale > 0.0 ? (std::abs(k1) + std::abs(k2)) / scale
                       : std::abs(k1) + std::abs(k2);
  }
};

/// Row j holds the gradient of k_{j+1}; columns follow KruppaParam.
using KruppaJacobian = Eigen::Matrix<double, 2, 6>;

namespace detail {

inline double conic_form(const Vec3& a, const Vec3& b,
                         const Intrinsics& k) {
  const double pa = k.c.x() * a(0) + k.c.y() * a(1) + a(2);
  const double pb = k.c.x() * b(0) + k.c.y() * b(1) + b(2);
  return k.f * k.f * (a(0) * b(0) + a(1) * b(1)) + pa * pb;
}

// d(a' w b)/d(f, u, v).
inline Vec3 conic_form_gradient(const Vec3& a, const Vec3& b,
                                const Intrinsics& k) {
  const double pa = k.c.x() * a(0) + k.c.y() * a(1) + a(2);
  const double pb = k.c.x() * b(0) + k.c.y() * b(1) + b(2);
  return Vec3(2.0 * k.f * (a(0) * b(0) + a(1) * b(1)),
              a(0) * pb + b(0) * pa,
              a(1) * pb + b(1) * pa);
}

}  // namespace detail

inline KruppaResiduals kruppa_residuals(const SvdF& F, const Intrinsics& k1,
                                        const Intrinsics& k2) {
  using detail::conic_form;
  const double a11 = conic_form(F.v1, F.v1, k1);
  const double a12 = conic_form(F.v1, F.v2, k1);
  const double a22 = conic_form(F.v2, F.v2, k1);
  const double b11 = conic_form(F.u1, F.u1, k2);
  const double b12 = conic_form(F.u1, F.u2, k2);
  const double b22 = conic_form(F.u2, F.u2, k2);

  const std::array<double, 4> terms = {
      F.sigma1 * a11 * b12, F.sigma2 * a12 * b22,
      F.sigma1 * a12 * b11, F.sigma2 * a22 * b12};

  KruppaResiduals r;
  r.k1 = terms[0] + terms[1];
  r.k2 = terms[2] + terms[3];
  for (double t : terms) r.scale = std::max(r.scale, std::abs(t));
  return r;
}

inline KruppaJacobian kruppa_derivatives(const SvdF& F, const Intrinsics& k1,
                                         const Intrinsics& k2) {
  using detail::conic_form;
  using detail::conic_form_gradient;
  const double a11 = conic_form(F.v1, F.v1, k1);
  const double a12 = conic_form(F.v1, F.v2, k1);
  const double a22 = conic_form(F.v2, F.v2, k1);
  const double b11 = conic_form(F.u1, F.u1, k2);
  const double b12 = conic_form(F.u1, F.u2, k2);
  const double b22 = conic_form(F.u2, F.u2, k2);

  const Vec3 da11 = conic_form_gradient(F.v1, F.v1, k1);
  const Vec3 da12 = conic_form_gradient(F.v1, F.v2, k1);
  const Vec3 da22 = conic_form_gradient(F.v2, F.v2, k1);
  const Vec3 db11 = conic_form_gradient(F.u1, F.u1, k2);
  const Vec3 db12 = conic_form_gradient(F.u1, F.u2, k2);
  const Vec3 db22 = conic_form_gradient(F.u2, F.u2, k2);

  const double s1 = F.sigma1;
  const double s2 = F.sigma2;

  KruppaJacobian J;
  J.block<1, 3>(0, 0) = (s1 * b12 * da11 + s2 * b22 * da12).transpose();
  J.block<1, 3>(0, 3) = (s1 * a11 * db12 + s2 * a12 * db22).transpose();
  J.block<1, 3>(1, 0) = (s1 * b11 * da12 + s2 * b12 * da22).transpose();
  J.block<1, 3>(1, 3) = (s1 * a12 * db11 + s2 * a22 * db12).transpose();
  return J;
}

}  // namespace selfcal
