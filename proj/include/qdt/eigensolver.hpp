#pragma once

// Self-adjoint eigensolver: Householder reduction to tridiagonal form, a
// diagonal phase change that makes the tridiagonal real, then implicit-shift
// QL iterations. Works for real symmetric and complex Hermitian input.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "qdt/error.hpp"

namespace qdt {

template <class Scalar>
struct SelfAdjointEigen {
  Eigen::VectorXd values;  // ascending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // columns
};

namespace detail {

inline double unit_phase(double x) { return x < 0.0 ? -1.0 : 1.0; }

inline std::complex<double> unit_phase(const std::complex<double>& x) {
  const double a = std::abs(x);
  return a == 0.0 ? std::complex<double>(1.0, 0.0) : x / a;
}

inline double real_part(double x) { return x; }
inline double real_part(const std::complex<double>& x) { return x.real(); }

// Implicit QL on the symmetric tridiagonal (d, e), e[i] couples i and i+1.
// Rotations are accumulated into the columns of z.
template <class Scalar>
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& z) {
  const int n = static_cast<int>(d.size());
  if (n <= 1) return;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const int per_value_cap = 30;
  const int total_cap = 30 * n;
  int total = 0;
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int mm = l;
    do {
      for (mm = l; mm < n - 1; ++mm) {
        const double dd = std::abs(d[mm]) + std::abs(d[mm + 1]);
        if (std::abs(e[mm]) <= eps * dd) break;
      }
      if (mm != l) {
        if (++iter > per_value_cap || ++total > total_cap) {
          throw Error(ErrorCode::ConvergenceFailure, "QL iteration cap exceeded");
        }
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[mm] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        int i = mm - 1;
        bool underflow = false;
        for (; i >= l; --i) {
          const double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[mm] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (Eigen::Index k = 0; k < z.rows(); ++k) {
            const Scalar t = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * t;
            z(k, i) = c * z(k, i) - s * t;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[mm] = 0.0;
      }
    } while (mm != l);
  }
}

}  // namespace detail

/// Eigendecomposition of a self-adjoint matrix. Only the lower triangle is
/// trusted; the caller guarantees symmetry.
template <class Derived>
SelfAdjointEigen<typename Derived::Scalar> self_adjoint_eigen(const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const Eigen::Index n = input.rows();
  if (input.cols() != n) throw Error(ErrorCode::DimensionMismatch, "eigensolver needs a square matrix");

  Mat a = input;
  Mat q = Mat::Identity(n, n);

  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    Vec x = a.col(k).tail(len);
    const double tail_norm = x.tail(len - 1).norm();
    if (tail_norm == 0.0) continue;
    const double xnorm = x.norm();
    const Scalar alpha = -detail::unit_phase(x(0)) * xnorm;
    Vec v = x;
    v(0) -= alpha;
    v.normalize();
    // a <- H a H with H = I - 2 v v^*, restricted to the rows/cols it touches
    auto rows = a.block(k + 1, k, len, n - k);
    rows -= (2.0 * v) * (v.adjoint() * rows);
    auto cols = a.block(k, k + 1, n - k, len);
    cols -= (cols * v) * (2.0 * v.adjoint());
    auto qcols = q.rightCols(len);
    qcols -= (qcols * v) * (2.0 * v.adjoint());
  }

  std::vector<double> d(static_cast<std::size_t>(n));
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  Scalar ph = Scalar(1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    d[i] = detail::real_part(a(i, i));
    q.col(i) *= ph;
    if (i + 1 < n) {
      const Scalar off = a(i + 1, i);
      e[i] = std::abs(off);
      if (e[i] != 0.0) ph *= detail::unit_phase(off);
    }
  }

  detail::tridiagonal_ql(d, e, q);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return d[i] < d[j]; });

  SelfAdjointEigen<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    out.values(c) = d[order[c]];
    out.vectors.col(c) = q.col(order[c]);
  }
  return out;
}

/// Eigenvalues only, ascending.
template <class Derived>
Eigen::VectorXd self_adjoint_eigenvalues(const Eigen::MatrixBase<Derived>& input) {
  return self_adjoint_eigen(input).values;
}

}  // namespace qdt
