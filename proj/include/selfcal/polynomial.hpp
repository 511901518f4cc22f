#pragma once

// Dense bivariate polynomials of bounded total degree and a companion
// matrix root finder for univariate polynomials.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace selfcal {

/// Polynomial in (x, y) with total degree at most D. Coefficients are
/// stored by increasing total degree d = a + b, and within one degree by
/// increasing power of y: index(a, b) = d (d + 1) / 2 + b.
template <int D>
class BivariatePolynomial {
  static_assert(D >= 0);

 public:
  static constexpr int kDegree = D;
  static constexpr int kNumCoeffs = (D + 1) * (D + 2) / 2;

  using Coefficients = std::array<double, kNumCoeffs>;

  BivariatePolynomial() { coeffs_.fill(0.0); }
  explicit BivariatePolynomial(const Coefficients& c) : coeffs_(c) {}

  static constexpr int index(int a, int b) {
    const int d = a + b;
    return d * (d + 1) / 2 + b;
  }

  static BivariatePolynomial constant(double c) {
    BivariatePolynomial p;
    p.coeffs_[0] = c;
    return p;
  }

  /// c0 + cx x + cy y; requires D >= 1.
  static BivariatePolynomial linear(double c0, double cx, double cy) {
    static_assert(D >= 1);
    BivariatePolynomial p;
    p.coeffs_[index(0, 0)] = c0;
    p.coeffs_[index(1, 0)] = cx;
    p.coeffs_[index(0, 1)] = cy;
    return p;
  }

  double coeff(int a, int b) const { return coeffs_[index(a, b)]; }
  double& coeff(int a, int b) { return coeffs_[index(a, b)]; }
  const Coefficients& coefficients() const { return coeffs_; }

  template <typename T>
  T evaluate(const T& x, const T& y) const {
    // Horner in y over per-power polynomials in x.
    T result = T(0);
    for (int b = D; b >= 0; --b) {
      T px = T(0);
      for (int a = D - b; a >= 0; --a) px = px * x + T(coeff(a, b));
      result = result * y + px;
    }
    return result;
  }

  double operator()(double x, double y) const { return evaluate(x, y); }

  /// (dp/dx, dp/dy).
  std::array<double, 2> gradient(double x, double y) const {
    double gx = 0.0, gy = 0.0;
    for (int d = 1; d <= D; ++d) {
      for (int b = 0; b <= d; ++b) {
        const int a = d - b;
        const double c = coeff(a, b);
        if (c == 0.0) continue;
        if (a > 0) gx += c * a * std::pow(x, a - 1) * std::pow(y, b);
        if (b > 0) gy += c * b * std::pow(x, a) * std::pow(y, b - 1);
      }
    }
    return {gx, gy};
  }

  /// Coefficients of p(x, y) as a polynomial in y, ascending, at fixed x.
  template <typename T>
  std::array<T, D + 1> coefficients_in_y(const T& x) const {
    std::array<T, D + 1> out;
    for (int b = 0; b <= D; ++b) {
      T px = T(0);
      for (int a = D - b; a >= 0; --a) px = px * x + T(coeff(a, b));
      out[b] = px;
    }
    return out;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Highest total degree carrying a coefficient above tol * max|c|;
  /// -1 for the zero polynomial.
  int total_degree(double tol = 0.0) const {
    const double m = max_abs_coeff();
    if (m == 0.0) return -1;
    for (int d = D; d >= 0; --d) {
      for (int b = 0; b <= d; ++b) {
        if (std::abs(coeff(d - b, b)) > tol * m) return d;
      }
    }
    return -1;
  }

  bool is_zero() const { return max_abs_coeff() == 0.0; }

  BivariatePolynomial normalized() const {
    const double m = max_abs_coeff();
    return m > 0.0 ? *this * (1.0 / m) : *this;
  }

  /// q(x, y) = p(t x, t y).
  BivariatePolynomial scaled_variables(double t) const {
    BivariatePolynomial q = *this;
    for (int d = 0; d <= D; ++d) {
      const double td = std::pow(t, d);
      for (int b = 0; b <= d; ++b) q.coeff(d - b, b) *= td;
    }
    return q;
  }

  /// q(x, y) = p(m00 x + m01 y, m10 x + m11 y).
  BivariatePolynomial linear_substitution(const Eigen::Matrix2d& m) const {
    if constexpr (D == 0) {
      return *this;
    } else {
      const auto X = BivariatePolynomial<1>::linear(0.0, m(0, 0), m(0, 1));
      const auto Y = BivariatePolynomial<1>::linear(0.0, m(1, 0), m(1, 1));
      std::array<BivariatePolynomial, D + 1> xp, yp;
      xp[0] = yp[0] = constant(1.0);
      for (int k = 1; k <= D; ++k) {
        xp[k] = multiply_truncated(xp[k - 1], X);
        yp[k] = multiply_truncated(yp[k - 1], Y);
      }
      BivariatePolynomial q;
      for (int a = 0; a <= D; ++a) {
        for (int b = 0; a + b <= D; ++b) {
          const double c = coeff(a, b);
          if (c == 0.0) continue;
          q += multiply_truncated(xp[a], yp[b]) * c;
        }
      }
      return q;
    }
  }

  BivariatePolynomial& operator+=(const BivariatePolynomial& o) {
    for (int i = 0; i < kNumCoeffs; ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  BivariatePolynomial& operator-=(const BivariatePolynomial& o) {
    for (int i = 0; i < kNumCoeffs; ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  BivariatePolynomial& operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
  }
  friend BivariatePolynomial operator+(BivariatePolynomial a,
                                       const BivariatePolynomial& b) {
    return a += b;
  }
  friend BivariatePolynomial operator-(BivariatePolynomial a,
                                       const BivariatePolynomial& b) {
    return a -= b;
  }
  friend BivariatePolynomial operator*(BivariatePolynomial a, double s) {
    return a *= s;
  }
  friend BivariatePolynomial operator*(double s, BivariatePolynomial a) {
    return a *= s;
  }

  /// Embeds this polynomial into a larger degree bound.
  template <int E>
  BivariatePolynomial<E> promote() const {
    static_assert(E >= D);
    BivariatePolynomial<E> q;
    for (int d = 0; d <= D; ++d)
      for (int b = 0; b <= d; ++b) q.coeff(d - b, b) = coeff(d - b, b);
    return q;
  }

 private:
  // Product of two polynomials of bound D, dropping terms above D.
  template <int E>
  static BivariatePolynomial multiply_truncated(
      const BivariatePolynomial& p, const BivariatePolynomial<E>& q) {
    BivariatePolynomial r;
    for (int d1 = 0; d1 <= D; ++d1) {
      for (int b1 = 0; b1 <= d1; ++b1) {
        const double c1 = p.coeff(d1 - b1, b1);
        if (c1 == 0.0) continue;
        for (int d2 = 0; d2 <= E && d1 + d2 <= D; ++d2) {
          for (int b2 = 0; b2 <= d2; ++b2) {
            r.coeff(d1 - b1 + d2 - b2, b1 + b2) += c1 * q.coeff(d2 - b2, b2);
          }
        }
      }
    }
    return r;
  }

  Coefficients coeffs_;
};

/// Exact product; the degree bound of the result is the sum of the bounds.
template <int D1, int D2>
BivariatePolynomial<D1 + D2> operator*(const BivariatePolynomial<D1>& p,
                                       const BivariatePolynomial<D2>& q) {
  BivariatePolynomial<D1 + D2> r;
  for (int d1 = 0; d1 <= D1; ++d1) {
    for (int b1 = 0; b1 <= d1; ++b1) {
      const double c1 = p.coeff(d1 - b1, b1);
      if (c1 == 0.0) continue;
      for (int d2 = 0; d2 <= D2; ++d2) {
        for (int b2 = 0; b2 <= d2; ++b2) {
          r.coeff(d1 - b1 + d2 - b2, b1 + b2) += c1 * q.coeff(d2 - b2, b2);
        }
      }
    }
  }
  return r;
}

/// Total degree 4 in the Lagrange multipliers; the per-iteration constraint.
using BivariateQuartic = BivariatePolynomial<4>;

namespace detail {

// Parlett-Reinsch balancing with power-of-two scaling, applied in place.
inline void balance_matrix(Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  constexpr double kGamma = 0.95;
  bool changed = true;
  for (int sweep = 0; changed && sweep < 100; ++sweep) {
    changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double row = m.row(i).lpNorm<1>() - std::abs(m(i, i));
      const double col = m.col(i).lpNorm<1>() - std::abs(m(i, i));
      if (row == 0.0 || col == 0.0) continue;
      int exponent = 0;
      std::frexp(row / col, &exponent);
      exponent /= 2;
      if (exponent == 0) continue;
      const double scaled_col = std::ldexp(col, exponent);
      const double scaled_row = std::ldexp(row, -exponent);
      if (scaled_col + scaled_row < kGamma * (col + row)) {
        m.col(i) *= std::ldexp(1.0, exponent);
        m.row(i) *= std::ldexp(1.0, -exponent);
        changed = true;
      }
    }
  }
}

}  // namespace detail

/// All complex roots of sum_k coeffs[k] x^k. Leading coefficients below
/// trim_tol * max|c| are dropped first (their roots sit at infinity).
inline std::vector<std::complex<double>> polynomial_roots(
    std::span<const double> coeffs, double trim_tol = 0.0) {
  double cmax = 0.0;
  for (double c : coeffs) cmax = std::max(cmax, std::abs(c));
  if (cmax == 0.0) return {};

  int degree = static_cast<int>(coeffs.size()) - 1;
  while (degree > 0 && std::abs(coeffs[degree]) <= trim_tol * cmax) --degree;

  std::vector<std::complex<double>> roots;
  // Exact zero roots are peeled off so they do not perturb the rest.
  int low = 0;
  while (low < degree && coeffs[low] == 0.0) {
    roots.emplace_back(0.0, 0.0);
    ++low;
  }
  const int n = degree - low;
  if (n <= 0) return roots;
  if (n == 1) {
    roots.emplace_back(-coeffs[low] / coeffs[low + 1], 0.0);
    return roots;
  }

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  companion.block(1, 0, n - 1, n - 1).setIdentity();
  for (int i = 0; i < n; ++i) {
    companion(i, n - 1) = -coeffs[low + i] / coeffs[degree];
  }
  detail::balance_matrix(companion);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return roots;
  const auto& ev = solver.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) roots.push_back(ev(i));
  return roots;
}

}  // namespace selfcal
