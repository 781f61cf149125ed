#pragma once

// Coherent sets of strictly desirable gambles over D^{m-1} (x) H^n, their
// maximal members (one per trace-one positive R) and the Dutch-book
// simulator.

#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <variant>
#include <vector>

#include "qdt/cone.hpp"
#include "qdt/lottery.hpp"
#include "qdt/random.hpp"
#include "qdt/state.hpp"

namespace qdt {

class DesirableGambleSet;

struct Rejected {
  LossCertificate certificate;
};

using AssertResult = std::variant<DesirableGambleSet, Rejected>;

/// Finite assessments; the PSDNZ gambles are implicit. A value type:
/// assert_gamble returns a new set and leaves this one alone.
class DesirableGambleSet {
 public:
  /// No assessments yet, for m prizes (m-1 blocks) on H^n.
  static DesirableGambleSet vacuous(std::size_t m, Index n) {
    if (m < 2 || n < 1) throw Error(ErrorCode::DimensionMismatch, "need m >= 2 and n >= 1");
    return DesirableGambleSet({m - 1, n}, {});
  }

  /// All generators at once, one coherence check. Incoherent lists come
  /// back as the loss certificate.
  static std::variant<DesirableGambleSet, LossCertificate> build(BlockShape shape, std::vector<BlockHermitian> gens,
                                                                 const ConeSettings& cfg = {}) {
    check_nonzero(shape, gens);
    DesirableGambleSet k(shape, std::move(gens));
    const auto& v = k.coherence(cfg);
    if (const auto* bad = std::get_if<Incoherent>(&v)) return bad->certificate;
    return k;
  }

  /// No coherence check until the first query needs one.
  static DesirableGambleSet unchecked(BlockShape shape, std::vector<BlockHermitian> gens) {
    check_nonzero(shape, gens);
    return DesirableGambleSet(shape, std::move(gens));
  }

  AssertResult assert_gamble(const BlockHermitian& g, const ConeSettings& cfg = {}) const {
    std::vector<BlockHermitian> gens = gens_;
    gens.push_back(g);
    check_nonzero(shape_, {g});
    DesirableGambleSet next(shape_, std::move(gens));
    const auto& v = next.coherence(cfg);
    if (const auto* bad = std::get_if<Incoherent>(&v)) return Rejected{bad->certificate};
    return next;
  }

  const CoherenceVerdict& coherence(const ConeSettings& cfg = {}) const {
    std::call_once(cache_->once, [&] { cache_->verdict = check_avoiding_partial_loss(problem(), cfg); });
    return *cache_->verdict;
  }

  bool is_coherent(const ConeSettings& cfg = {}) const { return qdt::is_coherent(coherence(cfg)); }

  /// Strict desirability of G. NSDNZ gambles are refused without a solve.
  MembershipVerdict is_strictly_desirable(const BlockHermitian& g, const ConeSettings& cfg = {}) const {
    if (!shape_.matches(g)) throw Error(ErrorCode::DimensionMismatch, "gamble shape differs from the set");
    const auto sb = spectrum_bounds(g);
    const double fro = g.frobenius_norm();
    const auto cls = classify_spectrum(sb.min, sb.max, fro, default_psd_tol(fro));
    if (is_nsdnz(cls)) return {MembershipVerdict::Tag::NotDesirable, sb.max};
    if (!is_psdnz(cls) && !is_coherent(cfg)) {
      throw Error(ErrorCode::IncoherentGenerators, "membership queried on an incoherent set");
    }
    return strict_membership(problem(), g, cfg);
  }

  ConeProblem problem() const { return ConeProblem(shape_, gens_); }
  const BlockShape& shape() const { return shape_; }
  std::size_t m() const { return shape_.blocks + 1; }
  Index n() const { return shape_.n; }
  const std::vector<BlockHermitian>& generators() const { return gens_; }
  std::size_t size() const { return gens_.size(); }

 private:
  struct Cache {
    std::once_flag once;
    std::optional<CoherenceVerdict> verdict;
  };

  DesirableGambleSet(BlockShape shape, std::vector<BlockHermitian> gens)
      : shape_(shape), gens_(std::move(gens)), cache_(std::make_shared<Cache>()) {
    if (shape_.blocks == 0 || shape_.n <= 0) throw Error(ErrorCode::DimensionMismatch, "empty gamble shape");
  }

  static void check_nonzero(BlockShape shape, const std::vector<BlockHermitian>& gens) {
    for (std::size_t i = 0; i < gens.size(); ++i) {
      if (!shape.matches(gens[i])) {
        std::ostringstream os;
        os << "gamble " << i << " does not have " << shape.blocks << " blocks of dimension " << shape.n;
        throw Error(ErrorCode::DimensionMismatch, os.str());
      }
      if (psd_classify(gens[i]) == PsdClass::Zero) {
        std::ostringstream os;
        os << "gamble " << i << " is zero";
        throw Error(ErrorCode::ZeroGamble, os.str());
      }
    }
  }

  BlockShape shape_;
  std::vector<BlockHermitian> gens_;
  std::shared_ptr<Cache> cache_;
};

/// Membership in the maximal set (R)°: G is in iff G is PSDNZ or
/// Tr(G R) > tol; inner products in (-tol, tol] are Boundary.
class MaximalSet {
 public:
  static constexpr double kStrictTol = 1e-9;

  explicit MaximalSet(JointStateMatrix r, double tol = kStrictTol) : r_(std::move(r)), tol_(tol) {}

  MembershipVerdict contains(const BlockHermitian& g) const {
    if (!shape_of(g).matches(r_.blocks())) throw Error(ErrorCode::DimensionMismatch, "gamble shape differs from R");
    const double tr = r_.expectation(g);
    using Tag = MembershipVerdict::Tag;
    if (is_psdnz(psd_classify(g))) return {Tag::StrictlyDesirable, tr};
    if (tr > tol_) return {Tag::StrictlyDesirable, tr};
    if (tr > -tol_) return {Tag::Boundary, tr};
    return {Tag::NotDesirable, tr};
  }

  const JointStateMatrix& state() const { return r_; }

 private:
  JointStateMatrix r_;
  double tol_;
};

inline MaximalSet maximal_from_state(const JointStateMatrix& r) { return MaximalSet(r); }

struct NotMaximal {
  double diameter;                            // widest probed extent, Frobenius
  std::vector<BlockHermitian> extreme_points;  // argmin/argmax pairs per direction
  std::size_t widest = 0;                     // extreme_points[2w], [2w+1] realize it
};

using MaximalityResult = std::variant<JointStateMatrix, NotMaximal>;

struct MaximalityOptions {
  double diameter_tol = 1e-6;
  int random_directions = 20;
  std::uint64_t seed = 0;
  ConeSettings cone = probe_settings();

  /// Near-maximal credal sets are thin slabs, and the solver may stall a
  /// little short of 1e-8 on them; 1e-7 is still far below diameter_tol.
  static ConeSettings probe_settings() {
    ConeSettings c;
    c.solver.fallback_tol = 1e-7;
    return c;
  }
};

namespace detail {

/// Symmetrized matrix units in every block, each of unit Frobenius norm:
/// E_ii, (E_ij + E_ji)/sqrt2, i(E_ij - E_ji)/sqrt2.
inline std::vector<BlockHermitian> matrix_unit_directions(BlockShape shape) {
  std::vector<BlockHermitian> out;
  const double s = 1.0 / std::sqrt(2.0);
  auto put = [&](std::size_t b, const MatrixXcd& m) {
    std::vector<HermitianMatrix> blocks(shape.blocks, HermitianMatrix::zero(shape.n));
    blocks[b] = HermitianMatrix::from_trusted(m);
    out.emplace_back(std::move(blocks));
  };
  for (std::size_t b = 0; b < shape.blocks; ++b) {
    for (Index i = 0; i < shape.n; ++i) {
      for (Index j = i; j < shape.n; ++j) {
        MatrixXcd m = MatrixXcd::Zero(shape.n, shape.n);
        if (i == j) {
          m(i, i) = 1.0;
          put(b, m);
          continue;
        }
        m(i, j) = m(j, i) = s;
        put(b, m);
        m(i, j) = cdouble(0, -s);
        m(j, i) = cdouble(0, s);
        put(b, m);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Recovers the trace-one R dual to a maximal set: probes the credal set
/// {R : Tr(G_i R) >= 0} along fixed and seeded random directions and
/// returns its centre if every probed width is below diameter_tol.
inline MaximalityResult state_from_maximal(const DesirableGambleSet& k, const MaximalityOptions& opt = {}) {
  if (!k.is_coherent(opt.cone)) throw Error(ErrorCode::IncoherentGenerators, "set is incoherent");
  const auto shape = k.shape();
  const auto problem = k.problem();
  auto dirs = detail::matrix_unit_directions(shape);
  Rng rng(opt.seed);
  for (int i = 0; i < opt.random_directions; ++i) {
    auto e = random_block_hermitian(shape, rng);
    dirs.push_back(e * (1.0 / e.frobenius_norm()));
  }

  NotMaximal probe{0.0, {}, 0};
  BlockHermitian sum = BlockHermitian::zero(shape.blocks, shape.n);
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    const auto lo = lower_prevision(problem, dirs[d], std::nullopt, opt.cone);
    const auto hi = lower_prevision(problem, -dirs[d], std::nullopt, opt.cone);
    const auto a = clip_to_state(lo.argmin);
    const auto b = clip_to_state(hi.argmin);
    const double width = -hi.value - lo.value;
    const double dist = (a - b).frobenius_norm();
    if (std::max(width, dist) > probe.diameter) {
      probe.diameter = std::max(width, dist);
      probe.widest = d;
    }
    sum += a;
    sum += b;
    probe.extreme_points.push_back(a);
    probe.extreme_points.push_back(b);
  }
  if (probe.diameter > opt.diameter_tol) return probe;
  return JointStateMatrix::clipped(sum * (1.0 / static_cast<double>(2 * dirs.size())));
}

/// gamma_i = pi_i^dagger G pi_i: what the gamble pays on outcome i.
inline VectorXd evaluate_payoff(const HermitianMatrix& g, const OrthogonalDecomposition& od) {
  if (g.dim() != od.dim()) throw Error(ErrorCode::DimensionMismatch, "gamble and measurement differ in dimension");
  VectorXd gamma(static_cast<Index>(od.size()));
  for (std::size_t i = 0; i < od.size(); ++i) gamma(static_cast<Index>(i)) = od[i].expectation(g);
  return gamma;
}

struct PayoffStats {
  double mean;
  double std_error;
  double min_payoff;
  double expected;  // Tr(G R)
};

struct SimulationReport {
  std::size_t trials;
  std::uint64_t seed;
  std::vector<PayoffStats> gambles;
};

/// Measures the true state along its own eigenvectors (block by block),
/// draws outcomes with the Born weights and pays every gamble on each draw.
inline SimulationReport simulate_payoffs(const std::vector<BlockHermitian>& gambles, const JointStateMatrix& state,
                                         std::size_t trials, std::uint64_t seed, double dual_tol = 1e-9) {
  if (trials < 2) throw Error(ErrorCode::InvalidArgument, "need at least two trials");
  for (std::size_t i = 0; i < gambles.size(); ++i) {
    if (!shape_of(gambles[i]).matches(state.blocks())) throw Error(ErrorCode::DimensionMismatch, "gamble shape differs from the state");
    const double tr = state.expectation(gambles[i]);
    if (tr < -dual_tol * std::max(1.0, gambles[i].frobenius_norm())) {
      std::ostringstream os;
      os << "state gives gamble " << i << " expectation " << tr << " < 0";
      throw Error(ErrorCode::StateNotInDual, os.str());
    }
  }
  std::vector<double> weights;
  std::vector<std::vector<double>> table(gambles.size());
  for (std::size_t b = 0; b < state.num_blocks(); ++b) {
    const auto es = eig_decompose(state[b]);
    for (Index j = 0; j < es.values.size(); ++j) {
      weights.push_back(std::max(0.0, es.values(j)));
      const VectorXcd v = es.vectors.col(j);
      for (std::size_t g = 0; g < gambles.size(); ++g) table[g].push_back(gambles[g][b].quadratic_form(v));
    }
  }
  Rng rng(seed);
  std::discrete_distribution<std::size_t> born(weights.begin(), weights.end());
  std::vector<double> sum(gambles.size(), 0.0), sum_sq(gambles.size(), 0.0);
  std::vector<double> lowest(gambles.size(), std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t o = born(rng);
    for (std::size_t g = 0; g < gambles.size(); ++g) {
      const double x = table[g][o];
      sum[g] += x;
      sum_sq[g] += x * x;
      lowest[g] = std::min(lowest[g], x);
    }
  }
  SimulationReport rep{trials, seed, {}};
  const double nt = static_cast<double>(trials);
  for (std::size_t g = 0; g < gambles.size(); ++g) {
    const double mean = sum[g] / nt;
    const double var = std::max(0.0, (sum_sq[g] - nt * mean * mean) / (nt - 1.0));
    rep.gambles.push_back({mean, std::sqrt(var / nt), lowest[g], state.expectation(gambles[g])});
  }
  return rep;
}

inline SimulationReport simulate_no_sure_loss(const DesirableGambleSet& k, const JointStateMatrix& state,
                                              std::size_t trials, std::uint64_t seed) {
  if (!k.is_coherent()) throw Error(ErrorCode::IncoherentGenerators, "set is incoherent");
  return simulate_payoffs(k.generators(), state, trials, seed);
}

}  // namespace qdt
