#pragma once

// Seeded samplers for matrices, states and measurements. Every randomized
// routine in the library draws from an Rng passed in by the caller.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qdt/hermitian.hpp"

namespace qdt {

using Rng = std::mt19937_64;

/// Independent stream for case `index` of a run seeded with `seed`.
inline Rng case_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }
inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline MatrixXcd ginibre(Index rows, Index cols, Rng& rng) {
  MatrixXcd g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = cdouble(normal(rng), normal(rng)) / std::sqrt(2.0);
  return g;
}

/// GUE-distributed Hermitian matrix.
inline HermitianMatrix random_hermitian(Index n, Rng& rng, double scale = 1.0) {
  const MatrixXcd g = ginibre(n, n, rng);
  return HermitianMatrix::from_trusted(scale * 0.5 * (g + g.adjoint()));
}

inline VectorXcd random_unit_vector(Index n, Rng& rng) {
  VectorXcd v = ginibre(n, 1, rng).col(0);
  return v / v.norm();
}

inline Projector random_projector(Index n, Rng& rng) { return Projector::normalized(random_unit_vector(n, rng)); }

/// Haar-distributed unitary (Gram-Schmidt on a Ginibre matrix).
inline MatrixXcd random_unitary(Index n, Rng& rng) {
  MatrixXcd g = ginibre(n, n, rng);
  for (Index j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Index k = 0; k < j; ++k) g.col(j) -= g.col(k).dot(g.col(j)) * g.col(k);
    }
    g.col(j).normalize();
  }
  return g;
}

inline OrthogonalDecomposition random_od(Index n, Rng& rng) {
  return OrthogonalDecomposition::from_unitary(random_unitary(n, rng));
}

/// Ginibre-induced density matrix (full rank almost surely).
inline HermitianMatrix random_density(Index n, Rng& rng) {
  const MatrixXcd g = ginibre(n, n, rng);
  MatrixXcd r = g * g.adjoint();
  r /= r.trace().real();
  return HermitianMatrix::from_trusted(r);
}

/// Flat Dirichlet sample.
inline std::vector<double> random_simplex_point(std::size_t m, Rng& rng) {
  std::vector<double> w(m);
  double s = 0.0;
  for (auto& x : w) {
    x = -std::log(1.0 - uniform(rng));
    s += x;
  }
  for (auto& x : w) x /= s;
  return w;
}

inline BlockHermitian random_block_hermitian(BlockShape shape, Rng& rng, double scale = 1.0) {
  std::vector<HermitianMatrix> blocks;
  for (std::size_t i = 0; i < shape.blocks; ++i) blocks.push_back(random_hermitian(shape.n, rng, scale));
  return BlockHermitian(std::move(blocks));
}

/// Random POVM with m elements: Q_k = S^{-1/2} A_k S^{-1/2} with A_k PSD and
/// S their sum.
inline std::vector<HermitianMatrix> random_povm(std::size_t m, Index n, Rng& rng) {
  std::vector<MatrixXcd> a;
  MatrixXcd sum = MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < m; ++k) {
    const MatrixXcd g = ginibre(n, n, rng);
    a.push_back(g * g.adjoint());
    sum += a.back();
  }
  const auto es = eig_decompose(HermitianMatrix::from_trusted(sum));
  const VectorXd inv_sqrt = es.values.cwiseSqrt().cwiseInverse();
  const MatrixXcd w = es.vectors * inv_sqrt.asDiagonal() * es.vectors.adjoint();
  std::vector<HermitianMatrix> out;
  for (const auto& ak : a) out.push_back(HermitianMatrix::from_trusted(w * ak * w.adjoint()));
  return out;
}

}  // namespace qdt
