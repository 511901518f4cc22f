#pragma once

// Prior-weighted self-calibration from a fundamental matrix.
//
// Minimizes sum_i w_f (f_i - f_i^p)^2 + w_c |c_i - c_i^p|^2 subject to the
// two Kruppa equations. Each iteration linearizes the Kruppa equations at
// the previous estimate only through their gradients: the stationarity
// conditions give f_i = f_i^p + (1/w_f) (l1 dk1/df_i + l2 dk2/df_i) and
// likewise for c_i, and substituting these into the (exact) Kruppa
// equations yields two quartics in the multipliers (l1, l2). Among the real
// solutions the one with the smallest |l1| + |l2| is taken.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "selfcal/core.hpp"
#include "selfcal/epipolar.hpp"
#include "selfcal/kruppa.hpp"
#include "selfcal/polynomial.hpp"
#include "selfcal/quartic_solver.hpp"

namespace selfcal {

inline constexpr double kDefaultFocalWeight = 5e-4;
inline constexpr double kDefaultCenterWeight = 1.0;
inline constexpr double kDefaultPriorFactor = 1.2;

struct PriorConfig {
  std::array<double, 2> f_prior{0.0, 0.0};
  std::array<Vec2, 2> c_prior{Vec2::Zero(), Vec2::Zero()};
  std::array<double, 2> w_f{kDefaultFocalWeight, kDefaultFocalWeight};
  std::array<double, 2> w_c{kDefaultCenterWeight, kDefaultCenterWeight};

  /// Focal prior 1.2 x the larger image side, principal point at the centre.
  static PriorConfig from_image_sizes(int width1, int height1, int width2,
                                      int height2) {
    PriorConfig p;
    p.f_prior = {kDefaultPriorFactor * std::max(width1, height1),
                 kDefaultPriorFactor * std::max(width2, height2)};
    p.c_prior = {Vec2(0.5 * width1, 0.5 * height1),
                 Vec2(0.5 * width2, 0.5 * height2)};
    return p;
  }
};

/// One shared focal length.
struct EqualFocalPriorConfig {
  double f_prior = 0.0;
  std::array<Vec2, 2> c_prior{Vec2::Zero(), Vec2::Zero()};
  double w_f = kDefaultFocalWeight;
  std::array<double, 2> w_c{kDefaultCenterWeight, kDefaultCenterWeight};
};

struct CalibrateOptions {
  double eps = 1e-6;
  int max_iterations = 50;
  // Work in units of the largest focal prior. The minimizer is unchanged
  // (every cost term scales alike); only the conditioning improves.
  bool normalize_units = true;
  bool record_history = false;
};

enum class StopReason { kConverged, kMaxIterations, kNoRealSolution,
                        kSolverFailure };

constexpr std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kConverged: return "converged";
    case StopReason::kMaxIterations: return "max_iterations";
    case StopReason::kNoRealSolution: return "no_real_solution";
    case StopReason::kSolverFailure: return "solver_failure";
  }
  return "unknown";
}

/// Iterate k of the solver. Pixel units; cost and multipliers are in the
/// solver's working units.
struct IterState {
  int k = 0;
  Intrinsics k1, k2;
  double e = 0.0;
  Eigen::Vector2d lambda = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> roots;
};

struct CalibrationResult {
  Intrinsics k1, k2;
  int iterations = 0;
  double final_cost = 0.0;
  bool converged = false;
  StopReason stop_reason = StopReason::kMaxIterations;
  std::vector<IterState> history;
};

/// Parameters (f1, u1, v1, f2, u2, v2) as an affine function of the
/// multipliers: params(l) = prior + update_map * l.
struct IterationSystem {
  BivariateQuartic kappa1, kappa2;
  Eigen::Matrix<double, 6, 1> prior;
  Eigen::Matrix<double, 6, 2> update_map;

  Eigen::Matrix<double, 6, 1> params(const Eigen::Vector2d& lambda) const {
    return prior + update_map * lambda;
  }
};

namespace detail {

using Params6 = Eigen::Matrix<double, 6, 1>;
using Lin = BivariatePolynomial<1>;
using Quad = BivariatePolynomial<2>;

inline Params6 pack(const Intrinsics& a, const Intrinsics& b) {
  Params6 p;
  p << a.f, a.c.x(), a.c.y(), b.f, b.c.x(), b.c.y();
  return p;
}

inline Intrinsics camera1(const Params6& p) {
  return Intrinsics(p(kF1), p(kU1), p(kV1));
}
inline Intrinsics camera2(const Params6& p) {
  return Intrinsics(p(kF2), p(kU2), p(kV2));
}

// a' w b with (f, u, v) linear in the multipliers.
inline Quad conic_form_poly(const Vec3& a, const Vec3& b, const Lin& f,
                            const Lin& u, const Lin& v) {
  const Lin pa = u * a(0) + v * a(1) + Lin::constant(a(2));
  const Lin pb = u * b(0) + v * b(1) + Lin::constant(b(2));
  return (f * f) * (a(0) * b(0) + a(1) * b(1)) + pa * pb;
}

// Maps reduced parameters to the six Kruppa parameters. Identity for two
// focals; the shared focal feeds both f1 and f2 otherwise.
struct Layout {
  Eigen::MatrixXd B;          // 6 x P
  Eigen::VectorXd weights;    // P
  Eigen::VectorXd prior;      // P
};

inline Layout two_focal_layout(const PriorConfig& p) {
  Layout l;
  l.B = Eigen::MatrixXd::Identity(6, 6);
  l.weights.resize(6);
  l.weights << p.w_f[0], p.w_c[0], p.w_c[0], p.w_f[1], p.w_c[1], p.w_c[1];
  l.prior = pack(Intrinsics(p.f_prior[0], p.c_prior[0]),
                 Intrinsics(p.f_prior[1], p.c_prior[1]));
  return l;
}

inline Layout equal_focal_layout(const EqualFocalPriorConfig& p) {
  Layout l;
  l.B = Eigen::MatrixXd::Zero(6, 5);
  l.B(kF1, 0) = l.B(kF2, 0) = 1.0;
  l.B(kU1, 1) = l.B(kV1, 2) = l.B(kU2, 3) = l.B(kV2, 4) = 1.0;
  l.weights.resize(5);
  l.weights << p.w_f, p.w_c[0], p.w_c[0], p.w_c[1], p.w_c[1];
  l.prior.resize(5);
  l.prior << p.f_prior, p.c_prior[0].x(), p.c_prior[0].y(), p.c_prior[1].x(),
      p.c_prior[1].y();
  return l;
}

inline IterationSystem build_system(const SvdF& F, const Params6& s_prev,
                                    const Layout& layout) {
  const KruppaJacobian J = kruppa_derivatives(F, camera1(s_prev),
                                              camera2(s_prev));
  // Reduced update: W^-1 B' J' l, then lifted back through B.
  const Eigen::MatrixXd reduced =
      layout.weights.cwiseInverse().asDiagonal() *
      (layout.B.transpose() * J.transpose());

  IterationSystem sys;
  sys.prior = layout.B * layout.prior;
  sys.update_map = layout.B * reduced;

  std::array<Lin, 6> q;
  for (int i = 0; i < 6; ++i) {
    q[i] = Lin::linear(sys.prior(i), sys.update_map(i, 0),
                       sys.update_map(i, 1));
  }
  const Quad a11 = conic_form_poly(F.v1, F.v1, q[kF1], q[kU1], q[kV1]);
  const Quad a12 = conic_form_poly(F.v1, F.v2, q[kF1], q[kU1], q[kV1]);
  const Quad a22 = conic_form_poly(F.v2, F.v2, q[kF1], q[kU1], q[kV1]);
  const Quad b11 = conic_form_poly(F.u1, F.u1, q[kF2], q[kU2], q[kV2]);
  const Quad b12 = conic_form_poly(F.u1, F.u2, q[kF2], q[kU2], q[kV2]);
  const Quad b22 = conic_form_poly(F.u2, F.u2, q[kF2], q[kU2], q[kV2]);

  sys.kappa1 = (a11 * b12) * F.sigma1 + (a12 * b22) * F.sigma2;
  sys.kappa2 = (a12 * b11) * F.sigma1 + (a22 * b12) * F.sigma2;
  return sys;
}

}  // namespace detail

/// The per-iteration quartic system at the previous estimate s_prev.
inline IterationSystem build_iteration_system(const SvdF& F,
                                              const Intrinsics& s_prev1,
                                              const Intrinsics& s_prev2,
                                              const PriorConfig& priors) {
  return detail::build_system(F, detail::pack(s_prev1, s_prev2),
                              detail::two_focal_layout(priors));
}

inline IterationSystem build_iteration_system(
    const SvdF& F, const Intrinsics& s_prev1, const Intrinsics& s_prev2,
    const EqualFocalPriorConfig& priors) {
  return detail::build_system(F, detail::pack(s_prev1, s_prev2),
                              detail::equal_focal_layout(priors));
}

/// Smallest |l1| + |l2|; exact ties go to the lexicographically smaller.
inline Eigen::Vector2d select_multipliers(
    std::span<const Eigen::Vector2d> roots) {
  if (roots.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no multipliers to select from");
  }
  const Eigen::Vector2d* best = &roots[0];
  for (const auto& r : roots) {
    const double a = r.lpNorm<1>();
    const double b = best->lpNorm<1>();
    if (a < b || (a == b && std::lexicographical_compare(
                                r.data(), r.data() + 2, best->data(),
                                best->data() + 2))) {
      best = &r;
    }
  }
  return *best;
}

// Costs at or below this are treated as exact zero by the stopping rule,
// where the relative change is dominated by rounding.
inline constexpr double kZeroCost = 1e-24;

namespace detail {

// Change of multipliers lambda = G mu under which the update map has
// orthonormal columns, so each mu moves the parameters by a unit step. A
// single scale per multiplier is not enough: with w_f << w_c both columns
// are dominated by the focal rows and the quartics become nearly
// proportional in their leading forms. Falls back to a scalar scale when
// the map has rank < 2.
inline Eigen::Matrix2d multiplier_whitening(const Eigen::MatrixXd& map) {
  const double t = map.cwiseAbs().maxCoeff();
  if (!(t > 0.0)) return Eigen::Matrix2d::Identity();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(map);
  const Eigen::Matrix2d R =
      qr.matrixQR().topRows<2>().triangularView<Eigen::Upper>();
  if (std::abs(R(1, 1)) <= 1e-12 * std::abs(R(0, 0))) {
    return Eigen::Matrix2d::Identity() / t;
  }
  return R.inverse();
}

inline CalibrationResult run_calibration(const FundamentalMatrix& F,
                                         Layout layout,
                                         const CalibrateOptions& opts) {
  if (!(opts.eps > 0.0) || opts.max_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "eps must be positive and max_iterations at least 1");
  }
  const Eigen::Index P = layout.prior.size();
  for (Eigen::Index i = 0; i < P; ++i) {
    if (!(layout.weights(i) > 0.0) || !std::isfinite(layout.weights(i)) ||
        !std::isfinite(layout.prior(i))) {
      throw Error(ErrorCode::kInvalidPrior,
                  "weights must be positive and priors finite");
    }
  }
  for (Eigen::Index i = 0; i < P; ++i) {
    if (layout.B(kF1, i) != 0.0 || layout.B(kF2, i) != 0.0) {
      if (!(layout.prior(i) > 0.0)) {
        throw Error(ErrorCode::kInvalidPrior, "focal prior must be positive");
      }
    }
  }

  // Unit normalization: pixels = scale * working units, F_n = S F S.
  double scale = 1.0;
  if (opts.normalize_units) {
    for (Eigen::Index i = 0; i < P; ++i) {
      if (layout.B(kF1, i) != 0.0 || layout.B(kF2, i) != 0.0) {
        scale = std::max(scale, layout.prior(i));
      }
    }
  }
  const Eigen::Vector3d sdiag(scale, scale, 1.0);
  const FundamentalMatrix Fn =
      normalize_f(sdiag.asDiagonal() * F.matrix() * sdiag.asDiagonal());
  layout.prior /= scale;
  const SvdF& svd = Fn.svd();

  const Eigen::VectorXd& w = layout.weights;
  const Eigen::VectorXd prior_reduced = layout.prior;
  Params6 s = layout.B * prior_reduced;

  auto to_pixels = [&](const Params6& p, Intrinsics& a, Intrinsics& b) {
    a = camera1(p * scale);
    b = camera2(p * scale);
  };

  CalibrationResult result;
  double e_prev = 0.0;
  bool have_prev = false;
  for (int k = 1; k <= opts.max_iterations; ++k) {
    const IterationSystem sys = build_system(svd, s, layout);

    const Eigen::Matrix2d G = detail::multiplier_whitening(sys.update_map);

    std::vector<Eigen::Vector2d> roots;
    try {
      roots = solve_quartic_system(sys.kappa1.linear_substitution(G),
                                   sys.kappa2.linear_substitution(G));
    } catch (const Error& err) {
      result.stop_reason = err.code() == ErrorCode::kNoRealSolution
                               ? StopReason::kNoRealSolution
                               : StopReason::kSolverFailure;
      result.converged = false;
      result.iterations = k - 1;
      to_pixels(s, result.k1, result.k2);
      return result;
    }
    for (auto& r : roots) r = G * r;

    const Eigen::Vector2d lambda = select_multipliers(roots);
    s = sys.params(lambda);
    // Deviation from the prior per reduced parameter; a shared focal
    // appears in two rows of the lifted vector.
    const Eigen::VectorXd delta =
        (layout.B.transpose() * (s - sys.prior))
            .cwiseQuotient(layout.B.colwise().sum().transpose());
    const double e = (w.array() * delta.array().square()).sum();

    result.iterations = k;
    result.final_cost = e;
    if (opts.record_history) {
      IterState st;
      st.k = k;
      to_pixels(s, st.k1, st.k2);
      st.e = e;
      st.lambda = lambda;
      st.roots = roots;
      result.history.push_back(std::move(st));
    }

    if (have_prev) {
      const double change = std::abs(e - e_prev);
      if (change < opts.eps * e || (e <= kZeroCost && e_prev <= kZeroCost)) {
        result.converged = true;
        result.stop_reason = StopReason::kConverged;
        break;
      }
    }
    e_prev = e;
    have_prev = true;
  }
  if (!result.converged) result.stop_reason = StopReason::kMaxIterations;
  to_pixels(s, result.k1, result.k2);
  return result;
}

}  // namespace detail

/// Focal lengths and principal points of both cameras.
inline CalibrationResult calibrate(const FundamentalMatrix& F,
                                   const PriorConfig& priors,
                                   const CalibrateOptions& opts = {}) {
  return detail::run_calibration(F, detail::two_focal_layout(priors), opts);
}

/// As calibrate, with one focal length shared by both cameras.
inline CalibrationResult calibrate_equal_focal(
    const FundamentalMatrix& F, const EqualFocalPriorConfig& priors,
    const CalibrateOptions& opts = {}) {
  return detail::run_calibration(F, detail::equal_focal_layout(priors), opts);
}

}  // namespace selfcal
