#pragma once

// Real common roots of two bivariate polynomials of total degree <= 4.
//
// Elimination uses the Sylvester matrix of the two polynomials viewed as
// polynomials in the second variable. Its entries are polynomials in the
// first variable, so det S(x) = 0 is solved as a polynomial eigenvalue
// problem through a block companion linearization. Each real x is back-substituted into both univariate
// polynomials in y, and every candidate pair is polished by damped Newton
// on the 2x2 system and gated by its residual.
//
// To keep the projection onto the first variable generic (distinct roots
// with equal x coordinate, leading coefficients that vanish in y), the
// system is solved in two rotated coordinate frames and the root sets are
// merged.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "selfcal/core.hpp"
#include "selfcal/polynomial.hpp"

namespace selfcal {

struct QuarticSolverOptions {
  // |p| + |q| at an accepted root, both scaled to unit max coefficient.
  double residual_gate = 1e-8;
  // Eigenvalues with |Im| <= 1e-8 (1 + |Re|) are real; borderline ones up
  // to candidate_tol (1 + |Re|) are still tried and left to the residual
  // gate.
  double candidate_tol = 1e-4;
  // Roots closer than this (relative to 1 + |root|) are merged.
  double merge_tol = 1e-7;
  int newton_iterations = 12;
};

inline constexpr int kMaxQuarticRoots = 16;

namespace detail {

using Root2 = Eigen::Vector2d;

template <int D>
int degree_in_y(const BivariatePolynomial<D>& p, double tol) {
  const double m = p.max_abs_coeff();
  for (int b = D; b >= 0; --b) {
    for (int a = 0; a + b <= D; ++a) {
      if (std::abs(p.coeff(a, b)) > tol * m) return b;
    }
  }
  return -1;
}

// Coefficient matrices S_k of S(x) = sum_k S_k x^k for the Sylvester matrix
// of p and q in y, with formal y-degrees dp and dq.
inline std::vector<Eigen::MatrixXd> sylvester_pencil(
    const BivariateQuartic& p, int dp, const BivariateQuartic& q, int dq) {
  const int n = dp + dq;
  std::vector<Eigen::MatrixXd> S(5, Eigen::MatrixXd::Zero(n, n));
  // Rows 0..dq-1 hold shifted copies of p, rows dq..n-1 copies of q; the
  // coefficient of y^j sits in column (row shift) + (deg - j).
  for (int r = 0; r < dq; ++r) {
    for (int j = 0; j <= dp; ++j) {
      for (int a = 0; a + j <= 4; ++a) S[a](r, r + dp - j) = p.coeff(a, j);
    }
  }
  for (int r = 0; r < dp; ++r) {
    for (int j = 0; j <= dq; ++j) {
      for (int a = 0; a + j <= 4; ++a) {
        S[a](dq + r, r + dq - j) = q.coeff(a, j);
      }
    }
  }
  return S;
}

inline Eigen::MatrixXcd evaluate_pencil(const std::vector<Eigen::MatrixXd>& S,
                                        std::complex<double> x) {
  Eigen::MatrixXcd M = S.back().cast<std::complex<double>>();
  for (int k = static_cast<int>(S.size()) - 2; k >= 0; --k) {
    M = M * x + S[k].cast<std::complex<double>>();
  }
  return M;
}

// True when det S(x) vanishes identically (common factor), probed at a few
// fixed complex points against the Hadamard bound.
inline bool pencil_is_singular(const std::vector<Eigen::MatrixXd>& S) {
  static const std::array<std::complex<double>, 3> probes = {
      std::complex<double>(0.3719, 0.8123),
      std::complex<double>(-1.137, 0.2291),
      std::complex<double>(0.0917, -2.413)};
  for (const auto& x : probes) {
    const Eigen::MatrixXcd M = evaluate_pencil(S, x);
    double hadamard = 1.0;
    for (Eigen::Index r = 0; r < M.rows(); ++r) hadamard *= M.row(r).norm();
    if (hadamard == 0.0) continue;
    const double det = std::abs(M.partialPivLu().determinant());
    if (det > 1e-11 * hadamard) return false;
  }
  return true;
}

// Finite eigenvalues of the matrix polynomial sum_k S_k x^k.
//
// The variable is first moved by a rotation of the projective line,
// x = (cos(phi) z - sin(phi)) / (sin(phi) z + cos(phi)), which makes the
// leading coefficient sin(phi)^K S(cot(phi)) nonsingular for a generic phi
// and turns roots at infinity into finite z. The monic matrix polynomial in
// z is then linearized into a block companion matrix and handed to a
// standard balanced eigensolver.
inline std::vector<std::complex<double>> pencil_eigenvalues(
    std::vector<Eigen::MatrixXd> S) {
  while (S.size() > 1 && S.back().isZero(0.0)) S.pop_back();
  const int K = static_cast<int>(S.size()) - 1;
  const Eigen::Index n = S.front().rows();
  std::vector<std::complex<double>> out;
  if (K < 1 || n == 0) return out;

  constexpr std::array<double, 4> kPhis = {0.4137, 1.1093, 0.7719, 1.3901};
  for (double phi : kPhis) {
    const double a = std::cos(phi), b = -std::sin(phi);
    const double c = std::sin(phi), d = std::cos(phi);

    // T_m = sum_k S_k [z^m] (a z + b)^k (c z + d)^(K - k).
    std::vector<Eigen::MatrixXd> T(K + 1, Eigen::MatrixXd::Zero(n, n));
    for (int k = 0; k <= K; ++k) {
      std::vector<double> poly = {1.0};
      auto times = [&poly](double lin, double cst) {
        std::vector<double> r(poly.size() + 1, 0.0);
        for (size_t i = 0; i < poly.size(); ++i) {
          r[i] += cst * poly[i];
          r[i + 1] += lin * poly[i];
        }
        poly = std::move(r);
      };
      for (int i = 0; i < k; ++i) times(a, b);
      for (int i = k; i < K; ++i) times(c, d);
      for (int m = 0; m <= K; ++m) T[m] += poly[m] * S[k];
    }

    const Eigen::FullPivLU<Eigen::MatrixXd> lead(T[K]);
    const double lead_scale = T[K].cwiseAbs().maxCoeff();
    if (!lead.isInvertible() || lead_scale == 0.0) continue;
    // Reject a poorly conditioned leading block and try the next angle.
    const double pivot_ratio =
        lead.matrixLU().diagonal().cwiseAbs().minCoeff() / lead_scale;
    if (pivot_ratio < 1e-10) continue;

    const Eigen::Index N = K * n;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(N, N);
    for (int k = 0; k + 1 < K; ++k) {
      C.block(k * n, (k + 1) * n, n, n).setIdentity();
    }
    for (int k = 0; k < K; ++k) {
      C.block((K - 1) * n, k * n, n, n) = -lead.solve(T[k]);
    }
    balance_matrix(C);

    Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
    if (es.info() != Eigen::Success) continue;
    const auto& ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      const std::complex<double> z = ev(i);
      const std::complex<double> den = c * z + d;
      if (std::abs(den) <= 1e-14 * (1.0 + std::abs(z))) continue;
      out.push_back((a * z + b) / den);
    }
    return out;
  }
  return out;
}

inline double system_residual(const BivariateQuartic& p,
                              const BivariateQuartic& q, const Root2& r) {
  return std::abs(p(r.x(), r.y())) + std::abs(q(r.x(), r.y()));
}

// Damped Newton on (p, q) = 0 starting at r. Returns the final point.
inline Root2 newton_polish(const BivariateQuartic& p,
                           const BivariateQuartic& q, Root2 r,
                           int iterations) {
  double res = system_residual(p, q, r);
  for (int it = 0; it < iterations && res > 0.0; ++it) {
    const auto gp = p.gradient(r.x(), r.y());
    const auto gq = q.gradient(r.x(), r.y());
    Eigen::Matrix2d J;
    J << gp[0], gp[1], gq[0], gq[1];
    const Eigen::Vector2d f(p(r.x(), r.y()), q(r.x(), r.y()));
    const double det = J.determinant();
    if (!std::isfinite(det) || det == 0.0) break;
    const Eigen::Vector2d step = J.inverse() * f;
    double t = 1.0;
    bool improved = false;
    for (int h = 0; h < 12; ++h, t *= 0.5) {
      const Root2 trial = r - t * step;
      const double trial_res = system_residual(p, q, trial);
      if (trial_res < res) {
        r = trial;
        res = trial_res;
        improved = true;
        break;
      }
    }
    if (!improved || step.norm() <= 1e-16 * (1.0 + r.norm())) break;
  }
  return r;
}

inline bool is_candidate(std::complex<double> z, double tol) {
  return std::isfinite(z.real()) && std::isfinite(z.imag()) &&
         std::abs(z.imag()) <= tol * (1.0 + std::abs(z.real()));
}

}  // namespace detail

/// All real common roots (x, y) of p = q = 0, at most 16, sorted
/// lexicographically. Roots are reported only if they pass the residual
/// gate on the unit-max-coefficient scaled system.
inline std::vector<Eigen::Vector2d> solve_quartic_system(
    const BivariateQuartic& p, const BivariateQuartic& q,
    const QuarticSolverOptions& opts = {}) {
  using detail::Root2;
  if (p.is_zero() || q.is_zero()) {
    throw Error(ErrorCode::kInvalidArgument,
                "quartic system contains an identically zero polynomial");
  }
  const BivariateQuartic pn = p.normalized();
  const BivariateQuartic qn = q.normalized();

  std::vector<Root2> accepted;
  auto consider = [&](const Root2& start) {
    const Root2 r =
        detail::newton_polish(pn, qn, start, opts.newton_iterations);
    if (!r.allFinite()) return;
    if (detail::system_residual(pn, qn, r) > opts.residual_gate) return;
    for (const Root2& a : accepted) {
      if ((a - r).norm() <= opts.merge_tol * (1.0 + r.norm())) return;
    }
    accepted.push_back(r);
  };

  // Two generic frames; angles are arbitrary fixed irrational-ish values.
  constexpr std::array<double, 2> kAngles = {0.5236 + 0.0713, 1.0471 + 0.2127};
  int singular_frames = 0;
  for (double angle : kAngles) {
    Eigen::Matrix2d rot;
    rot << std::cos(angle), -std::sin(angle),
           std::sin(angle), std::cos(angle);
    const BivariateQuartic pr = pn.linear_substitution(rot);
    const BivariateQuartic qr = qn.linear_substitution(rot);

    const int dp = detail::degree_in_y(pr, 1e-13);
    const int dq = detail::degree_in_y(qr, 1e-13);
    if (dp <= 0 || dq <= 0) {
      // A polynomial that is constant in y after a generic rotation is a
      // nonzero constant: no common roots.
      if (dp == 0 && pr.total_degree(1e-13) == 0) return {};
      if (dq == 0 && qr.total_degree(1e-13) == 0) return {};
      ++singular_frames;
      continue;
    }

    const auto S = detail::sylvester_pencil(pr, dp, qr, dq);
    if (detail::pencil_is_singular(S)) {
      ++singular_frames;
      continue;
    }

    for (const auto& z : detail::pencil_eigenvalues(S)) {
      if (!detail::is_candidate(z, opts.candidate_tol)) continue;
      const double x = z.real();
      const auto py = pr.coefficients_in_y(x);
      const auto qy = qr.coefficients_in_y(x);
      std::vector<double> ys;
      for (const auto* coeffs : {&py, &qy}) {
        for (const auto& w : polynomial_roots(*coeffs, 1e-13)) {
          if (detail::is_candidate(w, opts.candidate_tol)) {
            ys.push_back(w.real());
          }
        }
      }
      for (double y : ys) consider(rot * Root2(x, y));
    }
  }

  if (singular_frames == static_cast<int>(kAngles.size())) {
    throw Error(ErrorCode::kSolverFailure,
                "elimination is rank deficient (common factor or "
                "degenerate system)");
  }
  if (accepted.empty()) {
    throw Error(ErrorCode::kNoRealSolution,
                "quartic system has no real solution");
  }

  if (accepted.size() > static_cast<size_t>(kMaxQuarticRoots)) {
    std::sort(accepted.begin(), accepted.end(),
              [&](const Root2& a, const Root2& b) {
                return detail::system_residual(pn, qn, a) <
                       detail::system_residual(pn, qn, b);
              });
    accepted.resize(kMaxQuarticRoots);
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const Root2& a, const Root2& b) {
              return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
            });
  return accepted;
}

}  // namespace selfcal
