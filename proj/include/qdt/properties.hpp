#pragma once

// Seeded property suites behind `qdt properties`. Case i of a suite draws
// from case_rng(seed, i), so every violation is reproducible from its
// (seed, case) pair.

#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qdt/desirability.hpp"
#include "qdt/lottery.hpp"
#include "qdt/preference.hpp"
#include "qdt/random.hpp"
#include "qdt/updating.hpp"

namespace qdt {

struct PropertyViolation {
  std::size_t case_index;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::size_t cases = 0;
  std::vector<PropertyViolation> violations;
  std::vector<std::string> notes;

  bool ok() const { return violations.empty(); }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"cones", "duality", "lotteries", "preferences", "updating", "archimedean"};
  return names;
}

namespace detail {

struct SuiteRun {
  SuiteReport rep;
  void check(bool ok, std::size_t i, const std::string& what) {
    if (!ok) rep.violations.push_back({i, what});
  }
};

inline JointStateMatrix random_joint_state(std::size_t m, Index n, Rng& rng) {
  const auto p = random_simplex_point(m - 1, rng);
  std::vector<HermitianMatrix> blocks;
  for (std::size_t i = 0; i + 1 < m; ++i) blocks.push_back(p[i] * random_density(n, rng));
  return JointStateMatrix::clipped(BlockHermitian(std::move(blocks)));
}

/// +-(E - Tr(E R) I) + delta I over matrix units and random directions:
/// a set whose dual is a delta-neighbourhood of R.
inline std::vector<BlockHermitian> pinning_set(const JointStateMatrix& r, std::size_t pairs, Rng& rng,
                                               double delta = 1e-7) {
  const auto shape = r.shape();
  auto dirs = matrix_unit_directions(shape);
  while (dirs.size() < pairs) dirs.push_back(random_block_hermitian(shape, rng));
  dirs.erase(dirs.begin() + static_cast<std::ptrdiff_t>(pairs), dirs.end());
  const auto id = BlockHermitian::identity(shape.blocks, shape.n);
  std::vector<BlockHermitian> out;
  for (const auto& e : dirs) {
    const auto c = e - r.expectation(e) * id;
    out.push_back(c + delta * id);
    out.push_back(-1.0 * c + delta * id);
  }
  return out;
}

inline void cones(SuiteRun& run, std::size_t cases) {
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng = case_rng(run.rep.seed, i);
    const std::size_t k = 1 + i % 4;
    std::vector<BlockHermitian> gens;
    for (std::size_t j = 0; j < k; ++j) gens.push_back(random_block_hermitian({1, 2}, rng));
    const ConeProblem problem({1, 2}, gens);
    const auto v = check_avoiding_partial_loss(problem);
    if (const auto* c = std::get_if<Coherent>(&v)) {
      const auto& rho = c->certificate.rho;
      run.check(std::abs(rho.trace() - 1.0) < 1e-9, i, "certificate trace differs from 1");
      run.check(spectrum_bounds(rho).min > -1e-9, i, "certificate is not PSD");
      run.check(min_inner(gens, rho) > 0.0, i, "certificate misses a generator");
    } else {
      const auto& l = std::get<Incoherent>(v).certificate;
      BlockHermitian combo = BlockHermitian::zero(1, 2);
      for (std::size_t j = 0; j < k; ++j) {
        run.check(l.weights[j] >= 0.0, i, "negative loss weight");
        combo += l.weights[j] * gens[j];
      }
      run.check((combo - l.combo).max_abs() < 1e-9, i, "loss combination does not match its weights");
      run.check(spectrum_bounds(combo).max < 1e-6 * std::max(1.0, combo.frobenius_norm()), i,
                "loss combination is not negative semidefinite");
    }
  }
  run.rep.cases = cases;
}

inline void duality(SuiteRun& run, std::size_t cases) {
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng = case_rng(run.rep.seed, i);
    const std::size_t m = 2 + i % 2;
    const Index n = 2 + static_cast<Index>((i / 2) % 2);
    const auto r = random_joint_state(m, n, rng);
    const auto built = DesirableGambleSet::build(r.shape(), pinning_set(r, 25, rng), MaximalityOptions::probe_settings());
    if (!std::holds_alternative<DesirableGambleSet>(built)) {
      run.check(false, i, "pinned set reported incoherent");
      continue;
    }
    MaximalityOptions opt;
    opt.seed = run.rep.seed + i;
    const auto back = state_from_maximal(std::get<DesirableGambleSet>(built), opt);
    if (const auto* s = std::get_if<JointStateMatrix>(&back)) {
      const double err = (s->blocks() - r.blocks()).frobenius_norm();
      std::ostringstream os;
      os << "recovered state off by " << err;
      run.check(err < 1e-6, i, os.str());
    } else {
      run.check(false, i, "pinned set reported not maximal");
    }
  }
  run.rep.cases = cases;
}

inline void lotteries(SuiteRun& run, std::size_t cases) {
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng = case_rng(run.rep.seed, i);
    const std::size_t m = 2 + i % 3;
    const Index n = 1 + static_cast<Index>(i % 3);
    auto blocks = random_povm(m, n, rng);
    const auto v = validate_qh_lottery(blocks);
    run.check(std::holds_alternative<QHLottery>(v), i, "random POVM rejected");
    if (const auto* q = std::get_if<QHLottery>(&v)) {
      for (int t = 0; t < 5; ++t) {
        const auto pmf = measure_lottery(*q, random_projector(n, rng));
        double s = 0.0, lo = 1.0;
        for (double w : pmf.weights()) {
          s += w;
          lo = std::min(lo, w);
        }
        run.check(lo >= -1e-12 && std::abs(s - 1.0) < 1e-9, i, "measurement is not a pmf");
      }
    }
    blocks.back() += 0.1 * HermitianMatrix::identity(n);
    run.check(std::holds_alternative<LotteryViolation>(validate_qh_lottery(blocks)), i, "perturbed POVM accepted");

    const auto w = random_block_hermitian({m - 1, n}, rng);
    const auto lifted = lift_gamble(w);
    const auto back = lifted.lambda * project(LotteryDifference::of(lifted.p, lifted.q));
    run.check((back - w).max_abs() < 1e-10, i, "lift does not project back");
  }
  run.rep.cases = cases;
}

inline void preferences(SuiteRun& run, std::size_t cases) {
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng = case_rng(run.rep.seed, i);
    const std::size_t m = 2 + i % 2;
    const auto r = random_joint_state(m, 2, rng);
    const auto complete = represent_complete(r);
    const auto rep = check_axioms_sampled(complete, lottery_sampler(m, 2), 60, run.rep.seed + i,
                                          {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
    for (const auto& v : rep.violations) run.check(false, i, std::string("complete: ") + to_string(v.axiom) + ": " + v.detail);

    // a partial relation from pairs favoured by R
    std::vector<std::pair<QHLottery, QHLottery>> pairs;
    while (pairs.size() < 8) {
      auto p = random_lottery(m, 2, rng), q = random_lottery(m, 2, rng);
      if (r.expectation(project(LotteryDifference::of(p, q))) < 0) std::swap(p, q);
      pairs.emplace_back(std::move(p), std::move(q));
    }
    const auto partial = relation_from_pairs(pairs);
    if (const auto* rel = std::get_if<PreferenceRelation>(&partial)) {
      const auto prep = check_axioms_sampled(*rel, lottery_sampler(m, 2), 10, run.rep.seed + i);
      for (const auto& v : prep.violations) run.check(false, i, std::string("partial: ") + to_string(v.axiom) + ": " + v.detail);
    } else {
      run.check(false, i, "pairs favoured by one state reported incoherent");
    }
  }
  run.rep.cases = cases;
}

inline void updating(SuiteRun& run, std::size_t cases) {
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng = case_rng(run.rep.seed, i);
    const std::size_t m = 2 + i % 2;
    const auto r = random_joint_state(m, 2, rng);
    const auto event = random_projector(2, rng);

    // state route: compression and renormalization
    const auto c = compress(r.blocks(), event);
    const auto cr = condition_state(r, event);
    run.check((cr.blocks() - c * (1.0 / c.trace())).max_abs() < 1e-12, i, "conditional state is not the compression");

    // set route: a coherent set favouring R, conditioned, stays coherent
    std::vector<BlockHermitian> gens;
    const auto id = BlockHermitian::identity(m - 1, 2);
    for (int j = 0; j < 4; ++j) {
      const auto g = random_block_hermitian(r.shape(), rng);
      gens.push_back(g + (0.2 - r.expectation(g)) * id);
    }
    const auto k = std::get<DesirableGambleSet>(DesirableGambleSet::build(r.shape(), gens));
    const auto cs = condition_set(k, event);
    run.check(cs.certificate().margin >= -1e-7, i, "conditional certificate misses a base generator");
    for (int j = 0; j < 6; ++j) {
      const auto g = random_block_hermitian(r.shape(), rng);
      if (cs.contains(g).tag != MembershipVerdict::Tag::StrictlyDesirable) continue;
      run.check(frobenius_inner(g, cs.certificate().rho) >= -1e-7, i, "member with negative certificate value");
      run.check(cs.contains(-1.0 * g).tag != MembershipVerdict::Tag::StrictlyDesirable, i, "G and -G both desirable");
    }

    // factorized states are irrelevant to every sampled measurement
    const auto pw = random_simplex_point(m - 1, rng);
    const auto fr = JointStateMatrix::product(pw, random_density(2, rng));
    std::vector<OrthogonalDecomposition> ods{random_od(2, rng), random_od(2, rng)};
    run.check(std::holds_alternative<Irrelevant>(check_epistemic_irrelevance(fr, ods, 20, run.rep.seed + i)), i,
              "factorized state fails irrelevance");
  }
  run.rep.cases = cases;
}

inline void archimedean(SuiteRun& run) {
  const std::pair<std::size_t, Index> shapes[] = {{3, 1}, {2, 2}, {3, 2}, {2, 3}};
  std::size_t i = 0;
  for (const auto& [m, n] : shapes) {
    const auto c = archimedean_counterexample(m, n, run.rep.seed);
    const auto* ce = std::get_if<ArchimedeanCounterexample>(&c);
    std::ostringstream os;
    os << "(m, n) = (" << m << ", " << n << ")";
    run.check(ce != nullptr && ce->verified, i, os.str() + ": counterexample not verified");
    if (ce) run.rep.notes.push_back(os.str() + ": counterexample verified on " + std::to_string(ce->betas.size()) + " betas");
    ++i;
  }
  const auto a21 = archimedean_counterexample(2, 1, run.rep.seed);
  const auto* na = std::get_if<NotApplicable>(&a21);
  run.check(na != nullptr && na->archimedean, i, "(m, n) = (2, 1): Archimedeanity failed");
  if (na) run.rep.notes.push_back("(m, n) = (2, 1): not applicable; Archimedean on " + std::to_string(na->triples) + " triples");
  run.rep.cases = i + 1;
}

}  // namespace detail

/// Runs one named suite. Unknown names throw InvalidArgument.
inline SuiteReport run_suite(const std::string& name, std::uint64_t seed = 0) {
  detail::SuiteRun run;
  run.rep.suite = name;
  run.rep.seed = seed;
  if (name == "cones") {
    detail::cones(run, 60);
  } else if (name == "duality") {
    detail::duality(run, 8);
  } else if (name == "lotteries") {
    detail::lotteries(run, 100);
  } else if (name == "preferences") {
    detail::preferences(run, 12);
  } else if (name == "updating") {
    detail::updating(run, 30);
  } else if (name == "archimedean") {
    detail::archimedean(run);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown suite \"" + name + "\"");
  }
  return run.rep;
}

}  // namespace qdt
