#pragma once

// Coherent preference relations over QH-lotteries. A relation is read off a
// set of desirable gambles through P > Q <=> Proj(P - Q) in K; complete
// relations come from a single joint state R.

#include <array>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qdt/desirability.hpp"
#include "qdt/lottery.hpp"
#include "qdt/random.hpp"
#include "qdt/state.hpp"

namespace qdt {

struct PreferenceVerdict {
  enum class Tag { Prefers, NotPrefers, Boundary };
  enum class Channel { Objective, Strict, Dual };
  Tag tag;
  Channel channel;
  /// Objective: largest eigenvalue of Proj(P - Q). Strict: openness margin
  /// of Proj(P - Q) in K. Dual: Tr(Proj(P - Q) R).
  double margin;

  bool prefers() const { return tag == Tag::Prefers; }
};

inline const char* to_string(PreferenceVerdict::Tag t) {
  switch (t) {
    case PreferenceVerdict::Tag::Prefers: return "prefers";
    case PreferenceVerdict::Tag::NotPrefers: return "not_prefers";
    case PreferenceVerdict::Tag::Boundary: return "boundary";
  }
  return "?";
}

inline const char* to_string(PreferenceVerdict::Channel c) {
  switch (c) {
    case PreferenceVerdict::Channel::Objective: return "objective";
    case PreferenceVerdict::Channel::Strict: return "strict";
    case PreferenceVerdict::Channel::Dual: return "dual";
  }
  return "?";
}

/// Any membership test over gambles of one shape. The caller vouches that
/// it describes a coherent set of strictly desirable gambles.
struct GambleOracle {
  std::string name;
  BlockShape shape;
  std::function<MembershipVerdict(const BlockHermitian&)> contains;
};

inline bool objectively_prefers(const QHLottery& p, const QHLottery& q) {
  if (p.m() != q.m() || p.n() != q.n()) throw Error(ErrorCode::DimensionMismatch, "lotteries differ in shape");
  return is_psdnz(psd_classify(project(LotteryDifference::of(p, q))));
}

class PreferenceRelation {
 public:
  using Backing = std::variant<DesirableGambleSet, JointStateMatrix, GambleOracle>;

  static constexpr double kDualTol = 1e-9;

  /// Partial relation from a coherent set; incoherent sets are refused.
  static PreferenceRelation from_set(DesirableGambleSet k) {
    if (!k.is_coherent()) throw Error(ErrorCode::IncoherentGenerators, "a preference relation needs a coherent set");
    const auto shape = k.shape();
    return PreferenceRelation(Backing(std::move(k)), shape);
  }

  /// Complete relation: P > Q iff P |> Q or Tr(Proj(P - Q) R) > tol.
  static PreferenceRelation from_state(JointStateMatrix r) {
    const auto shape = r.shape();
    return PreferenceRelation(Backing(std::move(r)), shape);
  }

  static PreferenceRelation from_oracle(GambleOracle o) {
    if (!o.contains) throw Error(ErrorCode::InvalidArgument, "oracle without a membership test");
    const auto shape = o.shape;
    return PreferenceRelation(Backing(std::move(o)), shape);
  }

  /// The least coherent relation: P > Q iff Proj(P - Q) is PSDNZ.
  static PreferenceRelation objective(std::size_t m, Index n) {
    if (m < 2 || n < 1) throw Error(ErrorCode::DimensionMismatch, "need m >= 2 and n >= 1");
    return from_oracle({"objective", {m - 1, n}, [](const BlockHermitian& g) {
                          const auto sb = spectrum_bounds(g);
                          if (is_psdnz(psd_classify(g))) {
                            return MembershipVerdict{MembershipVerdict::Tag::StrictlyDesirable, std::max(sb.min, 0.0)};
                          }
                          return MembershipVerdict{MembershipVerdict::Tag::NotDesirable, std::min(sb.min, 0.0)};
                        }});
  }

  std::size_t m() const { return shape_.blocks + 1; }
  Index n() const { return shape_.n; }
  const BlockShape& shape() const { return shape_; }
  const Backing& backing() const { return backing_; }
  const DesirableGambleSet* set() const { return std::get_if<DesirableGambleSet>(&backing_); }
  const JointStateMatrix* state() const { return std::get_if<JointStateMatrix>(&backing_); }
  bool complete() const { return state() != nullptr; }

  /// Strict desirability of a gamble on D^{m-1} (x) H^n under the backing.
  MembershipVerdict contains(const BlockHermitian& g, const ConeSettings& cfg = {}) const {
    if (!shape_.matches(g)) throw Error(ErrorCode::DimensionMismatch, "gamble shape differs from the relation");
    return std::visit(
        [&](const auto& b) -> MembershipVerdict {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, DesirableGambleSet>) {
            return b.is_strictly_desirable(g, cfg);
          } else if constexpr (std::is_same_v<T, JointStateMatrix>) {
            return MaximalSet(b, kDualTol).contains(g);
          } else {
            return b.contains(g);
          }
        },
        backing_);
  }

  PreferenceVerdict prefers(const QHLottery& p, const QHLottery& q, const ConeSettings& cfg = {}) const {
    using V = PreferenceVerdict;
    if (p.m() != m() || p.n() != n() || q.m() != m() || q.n() != n()) {
      throw Error(ErrorCode::DimensionMismatch, "lottery shape differs from the relation");
    }
    const auto channel = complete() ? V::Channel::Dual : V::Channel::Strict;
    const auto d = project(LotteryDifference::of(p, q));
    const auto cls = psd_classify(d);
    if (cls == PsdClass::Zero) return {V::Tag::NotPrefers, channel, 0.0};
    if (is_psdnz(cls)) return {V::Tag::Prefers, V::Channel::Objective, spectrum_bounds(d).max};
    const auto mv = contains(d, cfg);
    switch (mv.tag) {
      case MembershipVerdict::Tag::StrictlyDesirable: return {V::Tag::Prefers, channel, mv.margin};
      case MembershipVerdict::Tag::NotDesirable: return {V::Tag::NotPrefers, channel, mv.margin};
      case MembershipVerdict::Tag::Boundary: break;
    }
    return {V::Tag::Boundary, channel, mv.margin};
  }

 private:
  PreferenceRelation(Backing b, BlockShape shape) : backing_(std::move(b)), shape_(shape) {}

  Backing backing_;
  BlockShape shape_;
};

inline PreferenceVerdict prefers(const PreferenceRelation& rel, const QHLottery& p, const QHLottery& q,
                                 const ConeSettings& cfg = {}) {
  return rel.prefers(p, q, cfg);
}

inline PreferenceRelation represent_complete(const JointStateMatrix& r) { return PreferenceRelation::from_state(r); }

/// K = cone{Proj(P - Q)} over the asserted pairs. Incoherent assertions come
/// back as the loss certificate (weights index the pairs).
inline std::variant<PreferenceRelation, LossCertificate> relation_from_pairs(
    const std::vector<std::pair<QHLottery, QHLottery>>& pairs, const ConeSettings& cfg = {}) {
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "no preference pairs");
  const auto& [p0, q0] = pairs.front();
  const BlockShape shape{p0.m() - 1, p0.n()};
  std::vector<BlockHermitian> gens;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [p, q] = pairs[i];
    if (p.m() != p0.m() || q.m() != p0.m() || p.n() != p0.n() || q.n() != p0.n()) {
      throw Error(ErrorCode::DimensionMismatch, "pairs differ in shape");
    }
    auto d = project(LotteryDifference::of(p, q));
    if (psd_classify(d) == PsdClass::Zero) {
      std::ostringstream os;
      os << "pair " << i << " compares a lottery with itself";
      throw Error(ErrorCode::PreconditionViolation, os.str());
    }
    gens.push_back(std::move(d));
  }
  auto built = DesirableGambleSet::build(shape, std::move(gens), cfg);
  if (auto* bad = std::get_if<LossCertificate>(&built)) return *bad;
  return PreferenceRelation::from_set(std::get<DesirableGambleSet>(std::move(built)));
}

struct ArchimedeanWitness {
  double alpha;
  PreferenceVerdict verdict;  // of alpha P + (1 - alpha) Z against Q
};

struct NoWitness {
  bool boundary;  // P > Q itself sits on the boundary band
  std::string note;
};

using WitnessResult = std::variant<ArchimedeanWitness, NoWitness>;

/// Smallest alpha (to 2^-16) with alpha P + (1 - alpha) Z > Q, by bisection.
/// Preference of the mixture is monotone in alpha since Proj(P) >= 0.
inline WitnessResult weak_archimedean_witness(const PreferenceRelation& rel, const QHLottery& p, const QHLottery& q,
                                              const ConeSettings& cfg = {}) {
  const auto v = rel.prefers(p, q, cfg);
  if (v.tag == PreferenceVerdict::Tag::Boundary) return NoWitness{true, "P > Q lies on the boundary band"};
  if (v.tag != PreferenceVerdict::Tag::Prefers) {
    throw Error(ErrorCode::PreconditionViolation, "weak Archimedeanity needs P > Q");
  }
  if (v.channel == PreferenceVerdict::Channel::Objective) {
    throw Error(ErrorCode::PreconditionViolation, "P is objectively preferred to Q");
  }
  const auto z = worst_lottery(rel.m(), rel.n());
  double lo = 0.0, hi = 1.0;
  std::optional<PreferenceVerdict> best;
  for (int it = 0; it < 16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto w = rel.prefers(mixture(mid, p, z), q, cfg);
    if (w.prefers()) {
      hi = mid;
      best = w;
    } else {
      lo = mid;
    }
  }
  if (!best) return NoWitness{false, "no mixture weight below 1 - 2^-16 keeps the preference"};
  return ArchimedeanWitness{hi, *best};
}

enum class Axiom { Irreflexivity, Asymmetry, Transitivity, MixtureIndependence, WeakArchimedean, WorstOutcome };
inline constexpr std::size_t kAxiomCount = 6;

inline const char* to_string(Axiom a) {
  switch (a) {
    case Axiom::Irreflexivity: return "irreflexivity";
    case Axiom::Asymmetry: return "asymmetry";
    case Axiom::Transitivity: return "transitivity";
    case Axiom::MixtureIndependence: return "mixture_independence";
    case Axiom::WeakArchimedean: return "weak_archimedean";
    case Axiom::WorstOutcome: return "worst_outcome";
  }
  return "?";
}

struct AxiomViolation {
  Axiom axiom;
  std::uint64_t seed;
  std::size_t sample;  // reproduce with case_rng(seed, sample)
  std::string detail;
};

struct AxiomReport {
  std::size_t samples = 0;
  std::array<std::size_t, kAxiomCount> checked{};
  std::size_t inconclusive = 0;  // a Boundary verdict on one side of an implication
  std::vector<AxiomViolation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t checks(Axiom a) const { return checked[static_cast<std::size_t>(a)]; }
};

using LotterySampler = std::function<QHLottery(Rng&)>;

inline LotterySampler lottery_sampler(std::size_t m, Index n) {
  return [m, n](Rng& rng) { return random_lottery(m, n, rng); };
}

/// Samples (P, Q, R, alpha) and checks the order axioms (irreflexive,
/// asymmetric, transitive), mixture independence in both directions, weak
/// Archimedeanity on applicable pairs and P > Z.
/// Sample i draws from case_rng(seed, i); alpha comes from alpha_grid when
/// given, uniform on (0, 1] otherwise.
inline AxiomReport check_axioms_sampled(const PreferenceRelation& rel, const LotterySampler& sample, std::size_t count,
                                        std::uint64_t seed = 0, const std::vector<double>& alpha_grid = {},
                                        const ConeSettings& cfg = {}) {
  using Tag = PreferenceVerdict::Tag;
  AxiomReport rep;
  rep.samples = count;
  const auto z = worst_lottery(rel.m(), rel.n());
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = case_rng(seed, i);
    const auto p = sample(rng), q = sample(rng), r = sample(rng);
    const double alpha = alpha_grid.empty()
                             ? 1.0 - uniform(rng)
                             : alpha_grid[std::uniform_int_distribution<std::size_t>(0, alpha_grid.size() - 1)(rng)];
    auto tick = [&](Axiom a) { ++rep.checked[static_cast<std::size_t>(a)]; };
    auto fail = [&](Axiom a, std::string detail) { rep.violations.push_back({a, seed, i, std::move(detail)}); };

    tick(Axiom::Irreflexivity);
    if (rel.prefers(p, p, cfg).tag != Tag::NotPrefers) fail(Axiom::Irreflexivity, "P > P");

    const auto pq = rel.prefers(p, q, cfg), qp = rel.prefers(q, p, cfg), qr = rel.prefers(q, r, cfg);
    tick(Axiom::Asymmetry);
    if (pq.prefers() && qp.prefers()) fail(Axiom::Asymmetry, "P > Q and Q > P");

    if (pq.prefers() && qr.prefers()) {
      tick(Axiom::Transitivity);
      const auto pr = rel.prefers(p, r, cfg);
      if (pr.tag == Tag::NotPrefers) {
        fail(Axiom::Transitivity, "P > Q > R but not P > R (margin " + std::to_string(pr.margin) + ")");
      } else if (pr.tag == Tag::Boundary) {
        ++rep.inconclusive;
      }
    }

    tick(Axiom::MixtureIndependence);
    const auto mixed = rel.prefers(mixture(alpha, p, r), mixture(alpha, q, r), cfg);
    if (pq.tag != mixed.tag) {
      if (pq.tag == Tag::Boundary || mixed.tag == Tag::Boundary) {
        ++rep.inconclusive;
      } else {
        std::ostringstream os;
        os << "P > Q is " << to_string(pq.tag) << " but its mixture with R at alpha=" << alpha << " is "
           << to_string(mixed.tag);
        fail(Axiom::MixtureIndependence, os.str());
      }
    }

    if (pq.prefers() && pq.channel != PreferenceVerdict::Channel::Objective) {
      tick(Axiom::WeakArchimedean);
      const auto w = weak_archimedean_witness(rel, p, q, cfg);
      if (const auto* nw = std::get_if<NoWitness>(&w)) fail(Axiom::WeakArchimedean, nw->note);
    }

    if (!(p == z)) {
      tick(Axiom::WorstOutcome);
      if (!rel.prefers(p, z, cfg).prefers()) fail(Axiom::WorstOutcome, "P not preferred to Z");
    }
  }
  return rep;
}

/// The three lotteries of a failed Archimedean instance P |> Q |> R: no beta
/// on the grid makes beta P + (1 - beta) R objectively preferred to Q.
struct ArchimedeanCounterexample {
  QHLottery p, q, r;
  std::vector<double> betas;
  /// Smallest eigenvalue of Proj(beta P + (1 - beta) R - Q) per beta; all
  /// negative when the counterexample holds.
  std::vector<double> witness;
  bool verified;
};

struct NotApplicable {
  std::size_t triples;  // random P |> Q |> R checked for Archimedeanity
  bool archimedean;     // alpha and beta found for every one of them
};

using ArchimedeanResult = std::variant<ArchimedeanCounterexample, NotApplicable>;

/// Objective preference fails strong Archimedeanity unless m = 2, n = 1.
/// m >= 3: P = U shifted by eps = 1/(2m) from the worst prize to the first,
/// Q = U, R = Z. m = 2, n >= 2: P = e1 (x) Pi_1 + u (x) rest, Q = e2 (x) Pi_1
/// + u (x) rest, R = Z, on the computational basis. For m = 2, n = 1 every
/// random triple is checked directly instead.
inline ArchimedeanResult archimedean_counterexample(std::size_t m, Index n, std::uint64_t seed = 0,
                                                   std::size_t triples = 100) {
  if (m < 2 || n < 1) throw Error(ErrorCode::DimensionMismatch, "need m >= 2 and n >= 1");
  const auto z = worst_lottery(m, n);
  auto lambda_min = [](const QHLottery& a, const QHLottery& b) {
    return spectrum_bounds(project(LotteryDifference::of(a, b))).min;
  };

  if (m == 2 && n == 1) {
    NotApplicable out{0, true};
    std::size_t attempt = 0;
    while (out.triples < triples) {
      Rng rng = case_rng(seed, attempt++);
      std::array<double, 3> w{uniform(rng), uniform(rng), uniform(rng)};
      std::sort(w.begin(), w.end(), std::greater<>());
      if (w[0] - w[1] < 1e-6 || w[1] - w[2] < 1e-6) continue;
      auto lot = [](double a) {
        return QHLottery::trusted(BlockHermitian({HermitianMatrix::diagonal({a}), HermitianMatrix::diagonal({1.0 - a})}));
      };
      const auto p = lot(w[0]), q = lot(w[1]), r = lot(w[2]);
      // alpha p + (1 - alpha) r > q needs alpha above t, beta below t
      const double t = (w[1] - w[2]) / (w[0] - w[2]);
      const double alpha = 0.5 * (1.0 + t), beta = 0.5 * t;
      const bool ok = objectively_prefers(p, q) && objectively_prefers(q, r) &&
                      objectively_prefers(mixture(alpha, p, r), q) && objectively_prefers(q, mixture(beta, p, r));
      out.archimedean = out.archimedean && ok;
      ++out.triples;
    }
    return out;
  }

  std::vector<PrizePmf> pp, qq;
  const auto od = OrthogonalDecomposition::computational(n);
  if (m >= 3) {
    const double eps = 0.5 / static_cast<double>(m);
    std::vector<double> u(m, 1.0 / static_cast<double>(m)), shifted = u;
    shifted.front() += eps;
    shifted.back() -= eps;
    pp.assign(static_cast<std::size_t>(n), PrizePmf(shifted));
    qq.assign(static_cast<std::size_t>(n), PrizePmf(u));
  } else {
    pp.assign(static_cast<std::size_t>(n), PrizePmf::uniform(2));
    qq = pp;
    pp[0] = PrizePmf::point(2, 0);
    qq[0] = PrizePmf::point(2, 1);
  }
  ArchimedeanCounterexample out{make_simple_lottery(pp, od), make_simple_lottery(qq, od), z, {}, {}, false};
  out.verified = objectively_prefers(out.p, out.q) && objectively_prefers(out.q, out.r);
  for (int k = 1; k < 100; ++k) out.betas.push_back(k / 100.0);
  out.betas.insert(out.betas.end(), {0.999, 1.0 - 1e-6});
  for (double b : out.betas) {
    const auto mix = mixture(b, out.p, out.r);
    out.witness.push_back(lambda_min(mix, out.q));
    out.verified = out.verified && !objectively_prefers(mix, out.q);
  }
  return out;
}

}  // namespace qdt
