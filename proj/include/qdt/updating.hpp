#pragma once

// Updating on a projective event Pi = pi pi^dagger: conditional sets and
// relations, prize marginals, epistemic irrelevance, and the factorization
// R = p (x) rho behind expected-utility comparisons.

#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qdt/desirability.hpp"
#include "qdt/preference.hpp"

namespace qdt {

/// (I (x) Pi) G (I (x) Pi), block by block: (pi^dagger G_b pi) Pi.
inline BlockHermitian compress(const BlockHermitian& g, const Projector& event) {
  if (event.dim() != g.block_dim()) throw Error(ErrorCode::DimensionMismatch, "event and gamble differ in dimension");
  std::vector<HermitianMatrix> blocks;
  for (const auto& b : g.blocks()) blocks.push_back(event.compress(b));
  return BlockHermitian(std::move(blocks));
}

/// Probabilities below this count as zero when conditioning.
inline constexpr double kNullEventTol = 1e-9;

/// (I (x) Pi) R (I (x) Pi) / Tr(.).
inline JointStateMatrix condition_state(const JointStateMatrix& r, const Projector& event) {
  const auto c = compress(r.blocks(), event);
  const double pr = c.trace();
  if (!(pr > kNullEventTol)) {
    std::ostringstream os;
    os << "event has probability " << pr << " under the state";
    throw Error(ErrorCode::UndefinedConditional, os.str());
  }
  return JointStateMatrix::clipped(c * (1.0 / pr));
}

/// K conditioned on Pi: G is in iff G is PSDNZ or its compression is in K.
/// Gambles the event calls off (zero compression) are thus in only when
/// PSDNZ. Coherence is witnessed by compressing and renormalizing the dual
/// state of largest event probability: Tr(G R') is a positive multiple of
/// Tr(compress(G) R*).
class ConditionalSet {
 public:
  ConditionalSet(DesirableGambleSet base, Projector event, double upper_probability, BlockHermitian base_state,
                 DualCertificate certificate)
      : base_(std::move(base)),
        event_(std::move(event)),
        upper_(upper_probability),
        base_state_(std::move(base_state)),
        cert_(std::move(certificate)) {}

  MembershipVerdict contains(const BlockHermitian& g, const ConeSettings& cfg = {}) const {
    if (!base_.shape().matches(g)) throw Error(ErrorCode::DimensionMismatch, "gamble shape differs from the set");
    const auto sb = spectrum_bounds(g);
    if (is_psdnz(psd_classify(g))) return {MembershipVerdict::Tag::StrictlyDesirable, std::max(sb.min, 0.0)};
    const auto c = compress(g, event_);
    if (psd_classify(c) == PsdClass::Zero) return {MembershipVerdict::Tag::NotDesirable, std::min(sb.min, 0.0)};
    return base_.is_strictly_desirable(c, cfg);
  }

  const DesirableGambleSet& base() const { return base_; }
  const Projector& event() const { return event_; }
  const BlockShape& shape() const { return base_.shape(); }
  /// max Tr((I (x) Pi) R) over the dual states of the base.
  double upper_probability() const { return upper_; }
  /// The dual state R* of the base where the event is most probable.
  const BlockHermitian& base_state() const { return base_state_; }
  /// rho = compress(R*) / Tr(.), with Tr(G rho) >= 0 on every member; the
  /// margin is min_i Tr(G_i R*) over the unit-norm base generators, which
  /// is what makes rho a certificate.
  const DualCertificate& certificate() const { return cert_; }

 private:
  DesirableGambleSet base_;
  Projector event_;
  double upper_;
  BlockHermitian base_state_;
  DualCertificate cert_;
};

/// Conditions a coherent set. Refuses events no dual state can see.
inline ConditionalSet condition_set(const DesirableGambleSet& k, const Projector& event,
                                    const ConeSettings& cfg = MaximalityOptions::probe_settings()) {
  if (event.dim() != k.n()) throw Error(ErrorCode::DimensionMismatch, "event and set differ in dimension");
  if (!k.is_coherent(cfg)) throw Error(ErrorCode::IncoherentGenerators, "conditioning needs a coherent set");
  const auto shape = k.shape();
  const auto pi = compress(BlockHermitian::identity(shape.blocks, shape.n), event);
  const auto lp = lower_prevision(k.problem(), -1.0 * pi, std::nullopt, cfg);
  const double upper = -lp.value;
  if (!(upper > kNullEventTol)) {
    std::ostringstream os;
    os << "event has upper probability " << upper << " under every dual state";
    throw Error(ErrorCode::UndefinedConditional, os.str());
  }
  const auto star = clip_to_state(lp.argmin);
  const auto c = compress(star, event);
  const double pr = c.trace();
  if (!(pr > 0.0)) throw Error(ErrorCode::SolverNumericalFailure, "optimal state lost the event");
  const double margin = k.size() == 0 ? 1.0 : detail::min_inner(detail::unit_generators(k.problem()), star);
  return ConditionalSet(k, event, upper, star, DualCertificate{c * (1.0 / pr), margin});
}

/// The relation conditional on Pi. State-backed relations stay complete
/// (compress and renormalize R); set-backed ones become the conditional
/// set's membership oracle; other oracles are composed with the compression
/// without a probability check.
inline PreferenceRelation condition_preference(const PreferenceRelation& rel, const Projector& event,
                                               const ConeSettings& cfg = MaximalityOptions::probe_settings()) {
  if (event.dim() != rel.n()) throw Error(ErrorCode::DimensionMismatch, "event and relation differ in dimension");
  if (const auto* r = rel.state()) return PreferenceRelation::from_state(condition_state(*r, event));
  if (const auto* k = rel.set()) {
    auto cs = std::make_shared<const ConditionalSet>(condition_set(*k, event, cfg));
    return PreferenceRelation::from_oracle(
        {"conditional", rel.shape(), [cs, cfg](const BlockHermitian& g) { return cs->contains(g, cfg); }});
  }
  const auto& o = std::get<GambleOracle>(rel.backing());
  return PreferenceRelation::from_oracle({o.name + "|event", o.shape, [o, event](const BlockHermitian& g) {
                                            if (is_psdnz(psd_classify(g))) {
                                              return MembershipVerdict{MembershipVerdict::Tag::StrictlyDesirable,
                                                                       std::max(spectrum_bounds(g).min, 0.0)};
                                            }
                                            const auto c = compress(g, event);
                                            if (psd_classify(c) == PsdClass::Zero) {
                                              return MembershipVerdict{MembershipVerdict::Tag::NotDesirable, 0.0};
                                            }
                                            return o.contains(c);
                                          }});
}

/// Prize-only gambles g (diagonal on D^{m-1}) judged through g (x) I_n.
class PrizeMarginal {
 public:
  using Member = std::function<MembershipVerdict(const BlockHermitian&)>;

  PrizeMarginal(BlockShape shape, Member member) : shape_(shape), member_(std::move(member)) {}

  MembershipVerdict contains(std::span<const double> g) const {
    if (g.size() != shape_.blocks) throw Error(ErrorCode::DimensionMismatch, "prize gamble has the wrong length");
    return member_(tensor_diag_hermitian(g, HermitianMatrix::identity(shape_.n)));
  }
  std::size_t prizes() const { return shape_.blocks; }

 private:
  BlockShape shape_;
  Member member_;
};

inline PrizeMarginal marg_prize(const DesirableGambleSet& k, const ConeSettings& cfg = {}) {
  return {k.shape(), [k, cfg](const BlockHermitian& g) { return k.is_strictly_desirable(g, cfg); }};
}

inline PrizeMarginal marg_prize(const ConditionalSet& k, const ConeSettings& cfg = {}) {
  return {k.shape(), [k, cfg](const BlockHermitian& g) { return k.contains(g, cfg); }};
}

inline PrizeMarginal marg_prize(const PreferenceRelation& rel, const ConeSettings& cfg = {}) {
  return {rel.shape(), [rel, cfg](const BlockHermitian& g) { return rel.contains(g, cfg); }};
}

struct Irrelevant {
  std::size_t events = 0;  // events compared
  std::size_t probes = 0;  // prize gambles per event
  std::vector<std::string> skipped;
};

struct ViolationWitness {
  std::size_t od_index;
  Projector event;
  std::vector<double> gamble;  // the prize gamble judged differently
  MembershipVerdict unconditional;
  MembershipVerdict conditional;
};

using IrrelevanceResult = std::variant<Irrelevant, ViolationWitness>;

namespace detail {

inline std::vector<std::vector<double>> prize_probes(std::size_t prizes, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> g(prizes);
    for (auto& x : g) x = normal(rng);
    out.push_back(std::move(g));
  }
  return out;
}

template <class Conditioner>
IrrelevanceResult irrelevance(const PrizeMarginal& base, const std::vector<OrthogonalDecomposition>& ods,
                              std::size_t probe_count, std::uint64_t seed, Conditioner&& condition) {
  const auto probes = prize_probes(base.prizes(), probe_count, seed);
  std::vector<MembershipVerdict> before;
  for (const auto& g : probes) before.push_back(base.contains(g));

  Irrelevant out;
  out.probes = probe_count;
  for (std::size_t o = 0; o < ods.size(); ++o) {
    for (const auto& event : ods[o]) {
      std::optional<PrizeMarginal> cond;
      try {
        cond.emplace(condition(event));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UndefinedConditional) throw;
        out.skipped.push_back("od " + std::to_string(o) + ": " + e.what());
        continue;
      }
      ++out.events;
      for (std::size_t i = 0; i < probes.size(); ++i) {
        const auto after = cond->contains(probes[i]);
        const bool in_before = before[i].tag == MembershipVerdict::Tag::StrictlyDesirable;
        const bool in_after = after.tag == MembershipVerdict::Tag::StrictlyDesirable;
        const bool decided = before[i].tag != MembershipVerdict::Tag::Boundary &&
                             after.tag != MembershipVerdict::Tag::Boundary;
        if (decided && in_before != in_after) return ViolationWitness{o, event, probes[i], before[i], after};
      }
    }
  }
  return out;
}

}  // namespace detail

/// Sampled check that learning any event of the given measurements leaves
/// the prize marginal unchanged. Agreement is evidence, not proof.
inline IrrelevanceResult check_epistemic_irrelevance(const DesirableGambleSet& k,
                                                     const std::vector<OrthogonalDecomposition>& ods,
                                                     std::size_t probe_count = 40, std::uint64_t seed = 0,
                                                     const ConeSettings& cfg = MaximalityOptions::probe_settings()) {
  return detail::irrelevance(marg_prize(k, cfg), ods, probe_count, seed,
                             [&](const Projector& e) { return marg_prize(condition_set(k, e, cfg), cfg); });
}

/// Same check for the maximal set of R.
inline IrrelevanceResult check_epistemic_irrelevance(const JointStateMatrix& r,
                                                     const std::vector<OrthogonalDecomposition>& ods,
                                                     std::size_t probe_count = 40, std::uint64_t seed = 0) {
  return detail::irrelevance(marg_prize(represent_complete(r)), ods, probe_count, seed, [&](const Projector& e) {
    return marg_prize(represent_complete(condition_state(r, e)));
  });
}

struct StateFactorization {
  PrizePmf p;
  HermitianMatrix rho;
  double residual;  // ||R - p (x) rho||_F
  bool degenerate;  // only one prize block carries weight
};

struct NotFactorizable {
  double deviation;  // largest ||R_i/p_i - R_j/p_j||_F
  std::size_t i, j;
};

using FactorizationResult = std::variant<StateFactorization, NotFactorizable>;

/// R = p (x) rho with p_i = Tr R_i, when all R_i/p_i agree (blocks with
/// p_i <= tol carry no information and are skipped).
inline FactorizationResult factorize_state(const JointStateMatrix& r, double tol = 1e-8) {
  const std::size_t k = r.num_blocks();
  std::vector<double> p;
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < k; ++i) {
    p.push_back(std::max(r[i].trace(), 0.0));
    if (p.back() > tol) live.push_back(i);
  }
  NotFactorizable worst{0.0, 0, 0};
  for (std::size_t a = 0; a < live.size(); ++a) {
    for (std::size_t b = a + 1; b < live.size(); ++b) {
      const auto i = live[a], j = live[b];
      const double d = (r[i].matrix() / p[i] - r[j].matrix() / p[j]).norm();
      if (d > worst.deviation) worst = {d, i, j};
    }
  }
  if (worst.deviation > tol) return worst;

  MatrixXcd acc = MatrixXcd::Zero(r.block_dim(), r.block_dim());
  double mass = 0.0;
  for (auto i : live) {
    acc += r[i].matrix();
    mass += p[i];
  }
  auto rho = HermitianMatrix::from_trusted(acc / mass);
  double total = 0.0;
  for (double x : p) total += x;
  for (double& x : p) x /= total;
  const double residual = (r.blocks() - tensor_diag_hermitian(p, rho)).frobenius_norm();
  return StateFactorization{PrizePmf(p), std::move(rho), residual, live.size() == 1 && k > 1};
}

/// u(P) = sum_i p_i P_i over the non-worst prizes.
inline HermitianMatrix utility_operator(const QHLottery& lottery, const PrizePmf& p) {
  if (p.size() + 1 != lottery.m()) throw Error(ErrorCode::DimensionMismatch, "need one weight per non-worst prize");
  HermitianMatrix u = HermitianMatrix::zero(lottery.n());
  for (std::size_t i = 0; i < p.size(); ++i) u += p[i] * lottery[i];
  return u;
}

/// P > Q iff P |> Q or Tr(u(P) rho) > Tr(u(Q) rho).
inline PreferenceVerdict expected_utility_prefers(const QHLottery& a, const QHLottery& b, const PrizePmf& p,
                                                  const HermitianMatrix& rho,
                                                  double tol = PreferenceRelation::kDualTol) {
  using V = PreferenceVerdict;
  if (a.m() != b.m() || a.n() != b.n() || rho.dim() != a.n()) {
    throw Error(ErrorCode::DimensionMismatch, "lotteries and state differ in shape");
  }
  const auto d = project(LotteryDifference::of(a, b));
  const auto cls = psd_classify(d);
  if (cls == PsdClass::Zero) return {V::Tag::NotPrefers, V::Channel::Dual, 0.0};
  if (is_psdnz(cls)) return {V::Tag::Prefers, V::Channel::Objective, spectrum_bounds(d).max};
  const double margin = frobenius_inner(utility_operator(a, p), rho) - frobenius_inner(utility_operator(b, p), rho);
  if (margin > tol) return {V::Tag::Prefers, V::Channel::Dual, margin};
  if (margin <= -tol) return {V::Tag::NotPrefers, V::Channel::Dual, margin};
  return {V::Tag::Boundary, V::Channel::Dual, margin};
}

}  // namespace qdt
