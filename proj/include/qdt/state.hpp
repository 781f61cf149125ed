#pragma once

// Trace-one positive block-diagonal matrices R = Diag(R_1, ..., R_{m-1}):
// the dual objects of maximal desirable sets. A single block is an ordinary
// density matrix.

#include <sstream>
#include <vector>

#include "qdt/hermitian.hpp"

namespace qdt {

/// Clips negative eigenvalues of every block to zero and rescales to unit
/// total trace. Used to turn solver output into an exact state.
inline BlockHermitian clip_to_state(const BlockHermitian& r) {
  std::vector<HermitianMatrix> out;
  double total = 0.0;
  for (const auto& b : r.blocks()) {
    const auto es = eig_decompose(b);
    const VectorXd lam = es.values.cwiseMax(0.0);
    out.push_back(HermitianMatrix::from_trusted(es.vectors * lam.cast<cdouble>().asDiagonal() * es.vectors.adjoint()));
    total += lam.sum();
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidState, "matrix has no positive part to normalize");
  for (auto& b : out) b *= 1.0 / total;
  return BlockHermitian(std::move(out));
}

class JointStateMatrix {
 public:
  static constexpr double kTraceTol = 1e-9;
  static constexpr double kPsdTol = 1e-9;

  /// Validates PSD blocks (eigenvalues >= -psd_tol) and unit total trace.
  static JointStateMatrix from_blocks(BlockHermitian r, double psd_tol = kPsdTol) {
    const double tr = r.trace();
    if (std::abs(tr - 1.0) > kTraceTol) {
      std::ostringstream os;
      os << "total trace is " << tr << ", expected 1";
      throw Error(ErrorCode::InvalidState, os.str());
    }
    for (std::size_t i = 0; i < r.num_blocks(); ++i) {
      const double lmin = eigenvalues(r[i])(0);
      if (lmin < -psd_tol) {
        std::ostringstream os;
        os << "block " << i << " has eigenvalue " << lmin;
        throw Error(ErrorCode::InvalidState, os.str());
      }
    }
    return JointStateMatrix(std::move(r));
  }

  static JointStateMatrix from_density(const HermitianMatrix& rho) { return from_blocks(BlockHermitian({rho})); }

  /// Clips tiny negative eigenvalues and renormalizes instead of rejecting.
  static JointStateMatrix clipped(const BlockHermitian& r) { return JointStateMatrix(clip_to_state(r)); }

  /// p (x) rho, the factorized form.
  static JointStateMatrix product(std::span<const double> p, const HermitianMatrix& rho) {
    return from_blocks(tensor_diag_hermitian(p, rho));
  }

  const BlockHermitian& blocks() const { return r_; }
  const HermitianMatrix& operator[](std::size_t i) const { return r_[i]; }
  std::size_t num_blocks() const { return r_.num_blocks(); }
  Index block_dim() const { return r_.block_dim(); }
  BlockShape shape() const { return shape_of(r_); }

  /// p_i = Tr R_i.
  std::vector<double> prize_marginal() const {
    std::vector<double> p;
    for (const auto& b : r_.blocks()) p.push_back(b.trace());
    return p;
  }

  /// Sum_i Tr(G_i R_i).
  double expectation(const BlockHermitian& g) const { return frobenius_inner(g, r_); }

 private:
  explicit JointStateMatrix(BlockHermitian r) : r_(std::move(r)) {}
  BlockHermitian r_;
};

}  // namespace qdt
