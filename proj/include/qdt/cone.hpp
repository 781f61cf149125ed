#pragma once

// Decisions over cones cone(G_1, ..., G_k) + PSD of block-diagonal gambles.
//
// Every question is posed over trace-normalized block states R (the dual
// side) and solved with the interior-point engine on the real embedding
// H = X + iY -> [[X, -Y], [Y, X]]:
//
//   margin      max_R min_i Tr(G_i R)              (coherence, best certificate)
//   prevision   min_R Tr(G R) s.t. Tr(G_i R) >= 0  (strict membership, probes)
//
// Certificates on both branches are re-checked with the eigensolver before
// they are returned.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <variant>
#include <vector>

#include "qdt/hermitian.hpp"
#include "qdt/sdp.hpp"
#include "qdt/state.hpp"

namespace qdt {

/// Finite assessment list; the PSDNZ cone is always implicitly included.
class ConeProblem {
 public:
  ConeProblem(BlockShape shape, std::vector<BlockHermitian> generators)
      : shape_(shape), generators_(std::move(generators)) {
    if (shape_.blocks == 0 || shape_.n <= 0) throw Error(ErrorCode::DimensionMismatch, "empty gamble shape");
    for (std::size_t i = 0; i < generators_.size(); ++i) {
      if (!shape_.matches(generators_[i])) {
        std::ostringstream os;
        os << "generator " << i << " does not have shape " << shape_.blocks << "x" << shape_.n;
        throw Error(ErrorCode::DimensionMismatch, os.str());
      }
    }
  }

  /// Single-block gambles on H^n.
  static ConeProblem of_matrices(Index n, const std::vector<HermitianMatrix>& gens) {
    std::vector<BlockHermitian> g;
    for (const auto& h : gens) g.push_back(BlockHermitian({h}));
    return ConeProblem({1, n}, std::move(g));
  }

  const BlockShape& shape() const { return shape_; }
  const std::vector<BlockHermitian>& generators() const { return generators_; }
  std::size_t size() const { return generators_.size(); }

 private:
  BlockShape shape_;
  std::vector<BlockHermitian> generators_;
};

struct ConeSettings {
  /// Threshold of the openness margin for strict desirability.
  double eps_min = 1e-8;
  /// Relative band around zero inside which membership is Boundary.
  double boundary_band = 1e-7;
  /// A coherence certificate rho must give every (unit-norm) generator at
  /// least this much.
  double certificate_floor = 1e-10;
  sdp::Options solver;
};

struct DualCertificate {
  BlockHermitian rho;  // trace one, PSD
  double margin;       // min_i Tr(G_i rho); +1 when there are no generators
};

enum class LossKind {
  PartialLoss,  // sum_i lambda_i G_i is negative semidefinite and nonzero
  PointedCone,  // sum_i lambda_i G_i vanishes: the cone contains 0
};

inline const char* to_string(LossKind k) { return k == LossKind::PartialLoss ? "partial_loss" : "pointed_cone"; }

struct LossCertificate {
  std::vector<double> weights;  // nonnegative, largest equal to 1
  BlockHermitian combo;         // sum_i weights_i G_i
  LossKind kind;
};

struct Coherent {
  DualCertificate certificate;
};
struct Incoherent {
  LossCertificate certificate;
};
using CoherenceVerdict = std::variant<Coherent, Incoherent>;

inline bool is_coherent(const CoherenceVerdict& v) { return std::holds_alternative<Coherent>(v); }

struct MembershipVerdict {
  enum class Tag { StrictlyDesirable, NotDesirable, Boundary };
  Tag tag;
  /// The openness margin: the largest eps with G - eps*Delta in the closed
  /// cone (negative when G is outside).
  double margin;
};

inline const char* to_string(MembershipVerdict::Tag t) {
  switch (t) {
    case MembershipVerdict::Tag::StrictlyDesirable: return "strictly_desirable";
    case MembershipVerdict::Tag::NotDesirable: return "not_desirable";
    case MembershipVerdict::Tag::Boundary: return "boundary";
  }
  return "?";
}

/// argmin of a linear functional over the credal set {R : Tr(G_i R) >= 0,
/// Tr(Delta R) = 1, R >= 0}.
struct PrevisionResult {
  double value;
  BlockHermitian argmin;
};

namespace detail {

inline std::vector<MatrixXd> embed_half(const BlockHermitian& g) {
  std::vector<MatrixXd> out;
  for (const auto& b : g.blocks()) out.push_back(0.5 * real_embedding(b));
  return out;
}

inline BlockHermitian recover_blocks(const std::vector<MatrixXd>& m) {
  std::vector<HermitianMatrix> out;
  for (const auto& b : m) out.push_back(complex_from_embedding(b));
  return BlockHermitian(std::move(out));
}

inline std::vector<BlockHermitian> unit_generators(const ConeProblem& k) {
  std::vector<BlockHermitian> out;
  for (const auto& g : k.generators()) {
    const double f = g.frobenius_norm();
    out.push_back(f > 0.0 ? g * (1.0 / f) : g);
  }
  return out;
}

// max t s.t. Tr(G_i R) >= t, Tr R = 1. Writing t = tau - c with
// c = 1 + max ||G_i|| keeps tau >= 1 and every variable inside a cone:
//   Tr(G_i R) - s_i - tau = -c,  Tr R = 1,  minimize -tau.
struct MarginSolution {
  double t;
  BlockHermitian rho;
  std::vector<double> lambda;  // dual weights, summing to 1
};

inline MarginSolution max_min_margin(BlockShape shape, const std::vector<BlockHermitian>& gens,
                                     const sdp::Options& opt) {
  const Index k = static_cast<Index>(gens.size());
  double c = 1.0;
  for (const auto& g : gens) c = std::max(c, 1.0 + g.frobenius_norm());
  const std::vector<Index> sizes(shape.blocks, 2 * shape.n);
  auto p = sdp::Problem::over(sizes, k + 1, k + 1);
  for (Index i = 0; i < k; ++i) {
    p.a_psd[i] = embed_half(gens[static_cast<std::size_t>(i)]);
    p.a_lp(i, i) = -1.0;
    p.a_lp(i, k) = -1.0;
    p.b(i) = -c;
  }
  for (std::size_t b = 0; b < shape.blocks; ++b) p.a_psd[k][b] = 0.5 * MatrixXd::Identity(2 * shape.n, 2 * shape.n);
  p.b(k) = 1.0;
  p.c.lp(k) = -1.0;

  const auto sol = sdp::solve(p, opt);
  if (sol.status != sdp::Status::Optimal) {
    // Both sides are strictly feasible by construction.
    throw SolverError(ErrorCode::SolverNumericalFailure, "margin problem reported infeasible", sol.primal_residual,
                      sol.dual_residual, sol.gap, sol.iterations);
  }
  MarginSolution out{sol.x.lp(k) - c, clip_to_state(recover_blocks(sol.x.psd)), {}};
  double total = 0.0;
  for (Index i = 0; i < k; ++i) total += std::max(0.0, sol.y(i));
  for (Index i = 0; i < k; ++i) out.lambda.push_back(total > 0.0 ? std::max(0.0, sol.y(i)) / total : 0.0);
  return out;
}

inline double min_inner(const std::vector<BlockHermitian>& gens, const BlockHermitian& rho) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& g : gens) m = std::min(m, frobenius_inner(g, rho));
  return m;
}

}  // namespace detail

/// Decides whether cone(generators) + PSD avoids partial loss (and is
/// non-pointed). Generators are rescaled to unit norm first, which leaves
/// the cone unchanged; certificates refer to the original generators.
inline CoherenceVerdict check_avoiding_partial_loss(const ConeProblem& k, const ConeSettings& cfg = {}) {
  const auto shape = k.shape();
  if (k.size() == 0) {
    return Coherent{{BlockHermitian::identity(shape.blocks, shape.n) * (1.0 / static_cast<double>(shape.dim())), 1.0}};
  }
  std::vector<double> norms;
  for (std::size_t i = 0; i < k.size(); ++i) {
    norms.push_back(k.generators()[i].frobenius_norm());
    if (norms.back() == 0.0) {
      // The zero gamble alone already makes the cone pointed.
      std::vector<double> w(k.size(), 0.0);
      w[i] = 1.0;
      return Incoherent{{std::move(w), k.generators()[i], LossKind::PointedCone}};
    }
  }
  const auto unit = detail::unit_generators(k);
  const auto ms = detail::max_min_margin(shape, unit, cfg.solver);

  const double verified = detail::min_inner(unit, ms.rho);
  if (verified > cfg.certificate_floor) {
    return Coherent{{ms.rho, detail::min_inner(k.generators(), ms.rho)}};
  }

  // lambda on unit generators -> weights on the originals, largest = 1.
  std::vector<double> w(k.size());
  double wmax = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    w[i] = ms.lambda[i] / norms[i];
    wmax = std::max(wmax, w[i]);
  }
  if (!(wmax > 0.0)) {
    throw SolverError(ErrorCode::SolverNumericalFailure, "no loss certificate recovered", 0, 0, 0, 0);
  }
  BlockHermitian combo = BlockHermitian::zero(shape.blocks, shape.n);
  BlockHermitian unit_combo = BlockHermitian::zero(shape.blocks, shape.n);
  for (std::size_t i = 0; i < k.size(); ++i) {
    w[i] /= wmax;
    combo += w[i] * k.generators()[i];
    unit_combo += ms.lambda[i] * unit[i];
  }
  // Independent check of the loss certificate on the unit scale, where the
  // combination is a convex mixture of unit-norm gambles.
  const auto sb = spectrum_bounds(unit_combo);
  if (sb.max > cfg.boundary_band) {
    std::ostringstream os;
    os << "loss certificate fails verification (max eigenvalue " << sb.max << ", margin " << ms.t << ")";
    throw SolverError(ErrorCode::SolverNumericalFailure, os.str(), 0, 0, 0, 0);
  }
  const LossKind kind = unit_combo.frobenius_norm() <= cfg.boundary_band ? LossKind::PointedCone : LossKind::PartialLoss;
  return Incoherent{{std::move(w), std::move(combo), kind}};
}

inline CoherenceVerdict check_avoiding_partial_loss(Index n, const std::vector<HermitianMatrix>& gens,
                                                    const ConeSettings& cfg = {}) {
  return check_avoiding_partial_loss(ConeProblem::of_matrices(n, gens), cfg);
}

/// max over trace-one PSD R of min_i Tr(G_i R), on the generators as given.
inline DualCertificate best_dual_certificate(const ConeProblem& k, const ConeSettings& cfg = {}) {
  const auto shape = k.shape();
  if (k.size() == 0) {
    return {BlockHermitian::identity(shape.blocks, shape.n) * (1.0 / static_cast<double>(shape.dim())), 1.0};
  }
  const auto ms = detail::max_min_margin(shape, k.generators(), cfg.solver);
  return {ms.rho, detail::min_inner(k.generators(), ms.rho)};
}

/// min Tr(G R) over {R >= 0 : Tr(G_i R) >= 0, Tr(Delta R) = 1}, the lower
/// prevision of G. Throws IncoherentGenerators if that set is empty.
inline PrevisionResult lower_prevision(const ConeProblem& k, const BlockHermitian& g,
                                       const std::optional<BlockHermitian>& slack = std::nullopt,
                                       const ConeSettings& cfg = {}) {
  const auto shape = k.shape();
  if (!shape.matches(g)) throw Error(ErrorCode::DimensionMismatch, "gamble shape differs from the assessments");
  if (slack && !shape.matches(*slack)) throw Error(ErrorCode::DimensionMismatch, "slack shape differs");
  const auto unit = detail::unit_generators(k);
  const Index kk = static_cast<Index>(unit.size());
  const std::vector<Index> sizes(shape.blocks, 2 * shape.n);
  auto p = sdp::Problem::over(sizes, kk, kk + 1);
  for (Index i = 0; i < kk; ++i) {
    p.a_psd[i] = detail::embed_half(unit[static_cast<std::size_t>(i)]);
    p.a_lp(i, i) = -1.0;
  }
  p.a_psd[kk] = slack ? detail::embed_half(*slack)
                      : detail::embed_half(BlockHermitian::identity(shape.blocks, shape.n));
  p.b(kk) = 1.0;
  p.c.psd = detail::embed_half(g);

  const auto sol = sdp::solve(p, cfg.solver);
  if (sol.status == sdp::Status::PrimalInfeasible) {
    throw Error(ErrorCode::IncoherentGenerators, "the assessments admit no dual state");
  }
  if (sol.status == sdp::Status::DualInfeasible) {
    throw Error(ErrorCode::PreconditionViolation, "slack matrix must be positive definite");
  }
  return {sol.primal_objective, detail::recover_blocks(sol.x.psd)};
}

/// Openness margin of G: the largest eps with G - eps*Delta in the closure
/// of cone(generators) + PSD (Delta = I unless given). PSDNZ gambles are
/// strictly desirable outright.
inline MembershipVerdict strict_membership(const ConeProblem& k, const BlockHermitian& g, const ConeSettings& cfg = {},
                                           const std::optional<BlockHermitian>& slack = std::nullopt) {
  if (!k.shape().matches(g)) throw Error(ErrorCode::DimensionMismatch, "gamble shape differs from the assessments");
  const auto sb = spectrum_bounds(g);
  const double scale = std::max(1.0, g.frobenius_norm());
  const auto cls = classify_spectrum(sb.min, sb.max, g.frobenius_norm(), default_psd_tol(g.frobenius_norm()));
  using Tag = MembershipVerdict::Tag;
  if (is_psdnz(cls)) return {Tag::StrictlyDesirable, std::max(sb.min, 0.0)};
  if (cls == PsdClass::Zero) return {Tag::NotDesirable, 0.0};

  const double eps = lower_prevision(k, g, slack, cfg).value;
  if (eps >= cfg.eps_min) return {Tag::StrictlyDesirable, eps};
  if (eps < -cfg.boundary_band * scale) return {Tag::NotDesirable, eps};
  return {Tag::Boundary, eps};
}

inline MembershipVerdict strict_membership(Index n, const std::vector<HermitianMatrix>& gens, const HermitianMatrix& g,
                                           const ConeSettings& cfg = {}) {
  return strict_membership(ConeProblem::of_matrices(n, gens), BlockHermitian({g}), cfg);
}

}  // namespace qdt
