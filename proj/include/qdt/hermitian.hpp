#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qdt/eigensolver.hpp"
#include "qdt/error.hpp"

namespace qdt {

using Index = Eigen::Index;
using cdouble = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Relative hermiticity tolerance used when building matrices from data.
inline constexpr double kHermitianTol = 1e-9;
/// Relative eigenvalue tolerance: tol = kPsdTol * max(1, ||H||_F).
inline constexpr double kPsdTol = 1e-9;

/// A complex Hermitian matrix. Symmetry is exact: any input is averaged
/// with its adjoint once it has passed the tolerance check.
class HermitianMatrix {
 public:
  static HermitianMatrix zero(Index n) { return HermitianMatrix(MatrixXcd::Zero(n, n), Trusted{}); }
  static HermitianMatrix identity(Index n) { return HermitianMatrix(MatrixXcd::Identity(n, n), Trusted{}); }

  static HermitianMatrix diagonal(std::span<const double> d) {
    MatrixXcd m = MatrixXcd::Zero(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<Index>(i), static_cast<Index>(i)) = d[i];
    return HermitianMatrix(std::move(m), Trusted{});
  }
  static HermitianMatrix diagonal(std::initializer_list<double> d) {
    return diagonal(std::span<const double>(d.begin(), d.size()));
  }

  /// v v^dagger
  static HermitianMatrix outer(const VectorXcd& v) { return HermitianMatrix(v * v.adjoint(), Trusted{}); }

  /// Accepts a complex matrix whose deviation from hermiticity is within
  /// rel_tol * ||m||_F; otherwise NotHermitian naming the worst (i,j).
  static HermitianMatrix from_complex(const MatrixXcd& m, double rel_tol = kHermitianTol);

  /// Wraps a matrix already known to be Hermitian up to rounding.
  static HermitianMatrix from_trusted(const MatrixXcd& m) { return HermitianMatrix(m, Trusted{}); }

  Index dim() const { return m_.rows(); }
  const MatrixXcd& matrix() const { return m_; }
  cdouble operator()(Index i, Index j) const { return m_(i, j); }

  double trace() const { return m_.diagonal().real().sum(); }
  double frobenius_norm() const { return m_.norm(); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

  /// Real part of v^dagger H v.
  double quadratic_form(const VectorXcd& v) const { return (v.adjoint() * m_ * v)(0, 0).real(); }

  /// A H A^dagger (Hermitian for any A of matching width).
  HermitianMatrix conjugated_by(const MatrixXcd& a) const { return HermitianMatrix(a * m_ * a.adjoint(), Trusted{}); }

  HermitianMatrix& operator+=(const HermitianMatrix& o) {
    check_same(o);
    m_ += o.m_;
    return *this;
  }
  HermitianMatrix& operator-=(const HermitianMatrix& o) {
    check_same(o);
    m_ -= o.m_;
    return *this;
  }
  HermitianMatrix& operator*=(double s) {
    m_ *= s;
    return *this;
  }

  friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) { return a += b; }
  friend HermitianMatrix operator-(HermitianMatrix a, const HermitianMatrix& b) { return a -= b; }
  friend HermitianMatrix operator*(HermitianMatrix a, double s) { return a *= s; }
  friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }
  friend HermitianMatrix operator-(HermitianMatrix a) {
    a.m_ = -a.m_;
    return a;
  }

 private:
  struct Trusted {};
  HermitianMatrix(MatrixXcd m, Trusted) : m_(std::move(m)) { symmetrize(); }

  void symmetrize() {
    MatrixXcd avg = 0.5 * (m_ + m_.adjoint());
    m_ = std::move(avg);
    for (Index i = 0; i < m_.rows(); ++i) m_(i, i) = cdouble(m_(i, i).real(), 0.0);
  }

  void check_same(const HermitianMatrix& o) const {
    if (o.dim() != dim()) throw Error(ErrorCode::DimensionMismatch, "Hermitian operands differ in dimension");
  }

  MatrixXcd m_;
};

inline HermitianMatrix HermitianMatrix::from_complex(const MatrixXcd& m, double rel_tol) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  const double tol = rel_tol * m.norm();
  double worst = 0.0;
  Index wi = 0, wj = 0;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double dev = std::abs(m(i, j) - std::conj(m(j, i)));
      if (dev > worst) {
        worst = dev;
        wi = i;
        wj = j;
      }
    }
  }
  if (worst > tol) {
    std::ostringstream os;
    os << "entry (" << wi << "," << wj << ") differs from conj of (" << wj << "," << wi << ") by " << worst;
    throw Error(ErrorCode::NotHermitian, os.str());
  }
  return HermitianMatrix(m, Trusted{});
}

/// re + i*im with re symmetric and im antisymmetric within tolerance.
inline HermitianMatrix build_hermitian(const MatrixXd& re, const MatrixXd& im) {
  if (re.rows() != re.cols() || im.rows() != im.cols() || re.rows() != im.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "re and im must be square and of equal size");
  }
  MatrixXcd m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return HermitianMatrix::from_complex(m);
}

inline HermitianMatrix build_hermitian(const MatrixXd& re) { return build_hermitian(re, MatrixXd::Zero(re.rows(), re.cols())); }

inline HermitianMatrix pauli_x() {
  MatrixXcd m(2, 2);
  m << 0, 1, 1, 0;
  return HermitianMatrix::from_trusted(m);
}
inline HermitianMatrix pauli_y() {
  MatrixXcd m(2, 2);
  m << 0, cdouble(0, -1), cdouble(0, 1), 0;
  return HermitianMatrix::from_trusted(m);
}
inline HermitianMatrix pauli_z() { return HermitianMatrix::diagonal({1.0, -1.0}); }

struct Eigensystem {
  VectorXd values;    // ascending
  MatrixXcd vectors;  // orthonormal columns
};

inline Eigensystem eig_decompose(const HermitianMatrix& h) {
  auto e = self_adjoint_eigen(h.matrix());
  return {std::move(e.values), std::move(e.vectors)};
}

inline VectorXd eigenvalues(const HermitianMatrix& h) { return self_adjoint_eigenvalues(h.matrix()); }

enum class PsdClass { PositiveDefinite, PsdNonZero, Zero, NsdNonZero, NegativeDefinite, Indefinite };

inline const char* to_string(PsdClass c) {
  switch (c) {
    case PsdClass::PositiveDefinite: return "PositiveDefinite";
    case PsdClass::PsdNonZero: return "PsdNonZero";
    case PsdClass::Zero: return "Zero";
    case PsdClass::NsdNonZero: return "NsdNonZero";
    case PsdClass::NegativeDefinite: return "NegativeDefinite";
    case PsdClass::Indefinite: return "Indefinite";
  }
  return "?";
}

/// G >= 0 and G != 0 (the positive gambles)
inline bool is_psdnz(PsdClass c) { return c == PsdClass::PositiveDefinite || c == PsdClass::PsdNonZero; }
/// G <= 0 and G != 0 (the negative gambles)
inline bool is_nsdnz(PsdClass c) { return c == PsdClass::NegativeDefinite || c == PsdClass::NsdNonZero; }

inline double default_psd_tol(double frobenius) { return kPsdTol * std::max(1.0, frobenius); }

/// Classification from the extreme eigenvalues and the Frobenius norm.
inline PsdClass classify_spectrum(double min_eig, double max_eig, double frobenius, double tol) {
  if (frobenius <= tol) return PsdClass::Zero;
  if (min_eig >= -tol) return min_eig > tol ? PsdClass::PositiveDefinite : PsdClass::PsdNonZero;
  if (max_eig <= tol) return max_eig < -tol ? PsdClass::NegativeDefinite : PsdClass::NsdNonZero;
  return PsdClass::Indefinite;
}

inline PsdClass psd_classify(const HermitianMatrix& h, std::optional<double> tol = std::nullopt) {
  const double fro = h.frobenius_norm();
  const double t = tol.value_or(default_psd_tol(fro));
  if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "negative tolerance");
  const VectorXd ev = eigenvalues(h);
  return classify_spectrum(ev.minCoeff(), ev.maxCoeff(), fro, t);
}

/// Tr(G^dagger R); real for Hermitian arguments.
inline double frobenius_inner(const HermitianMatrix& g, const HermitianMatrix& r) {
  if (g.dim() != r.dim()) throw Error(ErrorCode::DimensionMismatch, "inner product of different dimensions");
  return (g.matrix().conjugate().cwiseProduct(r.matrix())).sum().real();
}

/// [[X, -Y], [Y, X]] for H = X + iY.
inline MatrixXd real_embedding(const HermitianMatrix& h) {
  const Index n = h.dim();
  MatrixXd out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.matrix().real();
  out.bottomRightCorner(n, n) = h.matrix().real();
  out.topRightCorner(n, n) = -h.matrix().imag();
  out.bottomLeftCorner(n, n) = h.matrix().imag();
  return out;
}

/// Inverse of real_embedding after averaging over the complex structure; any
/// real symmetric 2n x 2n matrix maps to a Hermitian n x n one, and PSD maps
/// to PSD. Tr of the result is half the trace of the input.
inline HermitianMatrix complex_from_embedding(const MatrixXd& m) {
  const Index n = m.rows() / 2;
  MatrixXcd out(n, n);
  out.real() = 0.5 * (m.topLeftCorner(n, n) + m.bottomRightCorner(n, n));
  out.imag() = 0.5 * (m.bottomLeftCorner(n, n) - m.topRightCorner(n, n));
  return HermitianMatrix::from_trusted(out);
}

/// Block-diagonal Hermitian matrix Diag(B_1, ..., B_k), all blocks n x n.
/// Gambles on the composite prize/quantum system and joint states use it.
class BlockHermitian {
 public:
  explicit BlockHermitian(std::vector<HermitianMatrix> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw Error(ErrorCode::InvalidArgument, "block matrix needs at least one block");
    for (const auto& b : blocks_) {
      if (b.dim() != blocks_.front().dim()) throw Error(ErrorCode::DimensionMismatch, "blocks differ in dimension");
    }
  }
  BlockHermitian(std::initializer_list<HermitianMatrix> blocks)
      : BlockHermitian(std::vector<HermitianMatrix>(blocks)) {}

  static BlockHermitian zero(std::size_t count, Index n) {
    return BlockHermitian(std::vector<HermitianMatrix>(count, HermitianMatrix::zero(n)));
  }
  static BlockHermitian identity(std::size_t count, Index n) {
    return BlockHermitian(std::vector<HermitianMatrix>(count, HermitianMatrix::identity(n)));
  }

  std::size_t num_blocks() const { return blocks_.size(); }
  Index block_dim() const { return blocks_.front().dim(); }
  Index dim() const { return static_cast<Index>(blocks_.size()) * block_dim(); }

  const HermitianMatrix& operator[](std::size_t i) const { return blocks_[i]; }
  const std::vector<HermitianMatrix>& blocks() const { return blocks_; }

  double trace() const {
    double t = 0.0;
    for (const auto& b : blocks_) t += b.trace();
    return t;
  }
  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& b : blocks_) s += b.matrix().squaredNorm();
    return std::sqrt(s);
  }
  double max_abs() const {
    double s = 0.0;
    for (const auto& b : blocks_) s = std::max(s, b.max_abs());
    return s;
  }

  bool same_shape(const BlockHermitian& o) const {
    return o.num_blocks() == num_blocks() && o.block_dim() == block_dim();
  }

  BlockHermitian& operator+=(const BlockHermitian& o) {
    check_same(o);
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] += o.blocks_[i];
    return *this;
  }
  BlockHermitian& operator-=(const BlockHermitian& o) {
    check_same(o);
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] -= o.blocks_[i];
    return *this;
  }
  BlockHermitian& operator*=(double s) {
    for (auto& b : blocks_) b *= s;
    return *this;
  }
  friend BlockHermitian operator+(BlockHermitian a, const BlockHermitian& b) { return a += b; }
  friend BlockHermitian operator-(BlockHermitian a, const BlockHermitian& b) { return a -= b; }
  friend BlockHermitian operator*(BlockHermitian a, double s) { return a *= s; }
  friend BlockHermitian operator*(double s, BlockHermitian a) { return a *= s; }
  friend BlockHermitian operator-(BlockHermitian a) { return a *= -1.0; }

 private:
  void check_same(const BlockHermitian& o) const {
    if (!same_shape(o)) throw Error(ErrorCode::DimensionMismatch, "block matrices differ in shape");
  }
  std::vector<HermitianMatrix> blocks_;
};

/// Number of blocks and their dimension; lets empty generator lists carry
/// their ambient space.
struct BlockShape {
  std::size_t blocks = 1;
  Index n = 1;

  Index dim() const { return static_cast<Index>(blocks) * n; }
  bool matches(const BlockHermitian& g) const { return g.num_blocks() == blocks && g.block_dim() == n; }
  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

inline BlockShape shape_of(const BlockHermitian& g) { return {g.num_blocks(), g.block_dim()}; }

inline double frobenius_inner(const BlockHermitian& g, const BlockHermitian& r) {
  if (!g.same_shape(r)) throw Error(ErrorCode::DimensionMismatch, "inner product of different block shapes");
  double s = 0.0;
  for (std::size_t i = 0; i < g.num_blocks(); ++i) s += frobenius_inner(g[i], r[i]);
  return s;
}

struct SpectrumBounds {
  double min = 0.0;
  double max = 0.0;
};

inline SpectrumBounds spectrum_bounds(const BlockHermitian& g) {
  SpectrumBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& blk : g.blocks()) {
    const VectorXd ev = eigenvalues(blk);
    b.min = std::min(b.min, ev.minCoeff());
    b.max = std::max(b.max, ev.maxCoeff());
  }
  return b;
}

inline PsdClass psd_classify(const BlockHermitian& g, std::optional<double> tol = std::nullopt) {
  const double fro = g.frobenius_norm();
  const double t = tol.value_or(default_psd_tol(fro));
  if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "negative tolerance");
  const auto b = spectrum_bounds(g);
  return classify_spectrum(b.min, b.max, fro, t);
}

/// Diag(d_1 B, ..., d_m B).
inline BlockHermitian tensor_diag_hermitian(std::span<const double> d, const HermitianMatrix& b) {
  std::vector<HermitianMatrix> blocks;
  blocks.reserve(d.size());
  for (double w : d) blocks.push_back(w * b);
  return BlockHermitian(std::move(blocks));
}

/// Rank-one projector pi pi^dagger given by a unit vector.
class Projector {
 public:
  explicit Projector(VectorXcd v, double tol = 1e-9) : v_(std::move(v)) {
    if (v_.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty projector vector");
    const double norm = v_.norm();
    if (std::abs(norm - 1.0) > tol) {
      std::ostringstream os;
      os << "projector vector has norm " << norm;
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
    v_ /= norm;
  }

  static Projector normalized(const VectorXcd& v) {
    const double norm = v.norm();
    if (!(norm > 0.0)) throw Error(ErrorCode::InvalidArgument, "zero vector cannot define a projector");
    return Projector(v / norm);
  }

  static Projector basis(Index n, Index i) {
    VectorXcd v = VectorXcd::Zero(n);
    v(i) = 1.0;
    return Projector(std::move(v));
  }

  Index dim() const { return v_.size(); }
  const VectorXcd& vector() const { return v_; }
  HermitianMatrix matrix() const { return HermitianMatrix::outer(v_); }

  /// pi^dagger G pi, the payoff of G when this projector is observed.
  double expectation(const HermitianMatrix& g) const {
    if (g.dim() != dim()) throw Error(ErrorCode::DimensionMismatch, "projector and matrix differ in dimension");
    return g.quadratic_form(v_);
  }

  /// Pi G Pi, which equals (pi^dagger G pi) Pi for rank-one Pi.
  HermitianMatrix compress(const HermitianMatrix& g) const { return expectation(g) * matrix(); }

 private:
  VectorXcd v_;
};

/// n pairwise orthogonal rank-one projectors summing to the identity; the
/// outcome space of a measurement is the index set {0, ..., n-1}.
class OrthogonalDecomposition {
 public:
  explicit OrthogonalDecomposition(std::vector<Projector> projectors, double tol = 1e-9)
      : p_(std::move(projectors)) {
    if (p_.empty()) throw Error(ErrorCode::InvalidArgument, "empty orthogonal decomposition");
    const Index n = p_.front().dim();
    if (static_cast<Index>(p_.size()) != n) {
      throw Error(ErrorCode::DimensionMismatch, "an orthogonal decomposition of C^n needs n projectors");
    }
    MatrixXcd sum = MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (p_[i].dim() != n) throw Error(ErrorCode::DimensionMismatch, "projectors differ in dimension");
      for (std::size_t j = 0; j < i; ++j) {
        const double overlap = std::abs(p_[i].vector().dot(p_[j].vector()));
        if (overlap > tol) {
          std::ostringstream os;
          os << "projectors " << j << " and " << i << " overlap by " << overlap;
          throw Error(ErrorCode::InvalidArgument, os.str());
        }
      }
      sum += p_[i].vector() * p_[i].vector().adjoint();
    }
    if ((sum - MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() > tol) {
      throw Error(ErrorCode::InvalidArgument, "projectors do not sum to the identity");
    }
  }

  static OrthogonalDecomposition computational(Index n) {
    std::vector<Projector> p;
    for (Index i = 0; i < n; ++i) p.push_back(Projector::basis(n, i));
    return OrthogonalDecomposition(std::move(p));
  }

  /// Columns of a unitary.
  static OrthogonalDecomposition from_unitary(const MatrixXcd& u) {
    std::vector<Projector> p;
    for (Index i = 0; i < u.cols(); ++i) p.emplace_back(u.col(i));
    return OrthogonalDecomposition(std::move(p));
  }

  static OrthogonalDecomposition hadamard() {
    MatrixXcd u(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    u << s, s, s, -s;
    return from_unitary(u);
  }

  Index dim() const { return p_.front().dim(); }
  std::size_t size() const { return p_.size(); }
  const Projector& operator[](std::size_t i) const { return p_[i]; }
  auto begin() const { return p_.begin(); }
  auto end() const { return p_.end(); }

 private:
  std::vector<Projector> p_;
};

}  // namespace qdt
